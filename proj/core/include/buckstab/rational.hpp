#pragma once

#include "buckstab/polynomial.hpp"

#include <stdexcept>

namespace buckstab {

/// Thrown when a rational function is evaluated at (or numerically at) a
/// pole. Carries the offending point.
class PoleEvaluationError : public std::domain_error {
public:
    PoleEvaluationError(Complex s, const std::string& what)
        : std::domain_error(what), location_(s) {}
    Complex location() const { return location_; }

private:
    Complex location_;
};

/// Ratio of two real polynomials, kept in a normal form:
///  - numerator zero  =>  denominator is exactly 1
///  - common roots within the cancellation tolerance are divided out
///  - denominator is monic
///
/// Cancellation matches numerator roots against denominator roots at
/// relative distance |rn - rd| / max(1, |rn|, |rd|) below the tolerance
/// and removes matched factors by synthetic division (real roots one at a
/// time, complex roots together with their conjugates as quadratics), so
/// coefficients stay real and no ill-conditioned polynomial long division
/// is involved.
class RationalFunction {
public:
    /// The zero function 0/1.
    RationalFunction() : den_(Polynomial::constant(1.0)) {}
    RationalFunction(Polynomial num, Polynomial den);

    static RationalFunction constant(double value);
    /// Default relative tolerance for pole/zero cancellation.
    static constexpr double cancellation_tolerance = 1e-8;

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }

    /// Evaluate at a complex point. Throws PoleEvaluationError when the
    /// denominator is numerically zero there (within the Horner rounding
    /// bound of the evaluation).
    Complex operator()(Complex s) const;
    Complex at_jw(double omega) const { return (*this)(Complex(0.0, omega)); }

    RationalFunction reciprocal() const;

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b);
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b);
    RationalFunction operator-() const;

    friend RationalFunction operator*(const RationalFunction& a, double k);
    friend RationalFunction operator*(double k, const RationalFunction& a);

private:
    Polynomial num_;
    Polynomial den_;
    void normalize();
};

}  // namespace buckstab
