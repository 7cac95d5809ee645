#pragma once

#include <complex>
#include <initializer_list>
#include <optional>
#include <vector>

namespace buckstab {

using Complex = std::complex<double>;

/// Real-coefficient polynomial in the Laplace variable s.
///
/// Coefficients are stored in ascending order: coeff(k) multiplies s^k.
/// Trailing zeros are trimmed on construction, so the leading coefficient
/// of a nonzero polynomial is always nonzero. The zero polynomial is the
/// empty coefficient list and has no degree.
class Polynomial {
public:
    Polynomial() = default;
    Polynomial(std::initializer_list<double> ascending);
    explicit Polynomial(std::vector<double> ascending);

    static Polynomial constant(double value);
    /// coeff * s^degree
    static Polynomial monomial(int degree, double coeff = 1.0);
    /// Expand leading * prod (s - r_k). Roots must be closed under
    /// conjugation (within pairing tolerance); coefficients come out real.
    static Polynomial from_roots(const std::vector<Complex>& roots,
                                 double leading = 1.0);

    bool is_zero() const { return coeffs_.empty(); }
    /// Degree, or nullopt for the zero polynomial.
    std::optional<int> degree() const;
    double leading() const;
    double coeff(int k) const;
    const std::vector<double>& coeffs() const { return coeffs_; }

    Complex operator()(Complex s) const;
    double operator()(double s) const;

    struct Evaluation {
        Complex value;
        /// Running rounding-error bound for the Horner recurrence. A value
        /// with |value| <= error_bound is numerically indistinguishable
        /// from an exact zero of the polynomial.
        double error_bound;
    };
    Evaluation evaluate_with_bound(Complex s) const;

    Polynomial derivative() const;

    /// Relative backward residual |p(r)| / (max|c_k| * max(1,|r|)^deg).
    double root_residual(Complex r) const;

    Polynomial operator-() const;
    Polynomial& operator+=(const Polynomial& rhs);
    Polynomial& operator-=(const Polynomial& rhs);
    Polynomial& operator*=(const Polynomial& rhs);
    Polynomial& operator*=(double k);
    Polynomial& operator/=(double k);

    friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
    friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(Polynomial a, double k) { return a *= k; }
    friend Polynomial operator*(double k, Polynomial a) { return a *= k; }
    friend Polynomial operator/(Polynomial a, double k) { return a /= k; }

    bool operator==(const Polynomial& rhs) const { return coeffs_ == rhs.coeffs_; }

private:
    std::vector<double> coeffs_;
    void trim();
};

/// Roots grouped by numerical multiplicity (cluster radius ~1e-5 relative).
struct RootSet {
    std::vector<Complex> roots;
    std::vector<int> multiplicities;

    int total() const;
    double max_real_part() const;
    /// Roots repeated according to multiplicity.
    std::vector<Complex> expanded() const;
};

/// All complex roots via balanced companion-matrix eigenvalues.
/// Conjugate symmetry is enforced on the result. Throws on the zero
/// polynomial; a nonzero constant has an empty root set.
RootSet poly_roots(const Polynomial& p);

enum class Verdict { stable, marginal, unstable };

const char* to_string(Verdict v);

struct StabilityResult {
    Verdict verdict;
    double max_real_part;
    double epsilon;
    RootSet roots;
    /// Routh-Hurwitz cross-check, only attempted for degree <= 4 and when
    /// the table has no vanishing pivot and the root verdict is not
    /// marginal.
    std::optional<bool> routh_agrees;
};

/// Root-based Hurwitz test. Stability margin epsilon is
/// 1e-6 * max|root| (floor 1e-9): all real parts below -epsilon is
/// stable, any real part inside [-epsilon, +epsilon] with none beyond
/// is marginal, anything beyond +epsilon is unstable.
StabilityResult hurwitz_stable(const Polynomial& p);

/// First column of the Routh table, descending powers. Throws if a pivot
/// vanishes (the plain tabulation is undefined there).
std::vector<double> routh_first_column(const Polynomial& p);

/// Strict Routh verdict: true iff no first-column sign change. nullopt
/// when a pivot vanishes.
std::optional<bool> routh_stable(const Polynomial& p);

}  // namespace buckstab
