#include "buckstab/rational.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

namespace buckstab {

namespace {

double relative_distance(Complex a, Complex b) {
    return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// Synthetic division of p by (s - r), r real. The remainder is dropped;
// callers only divide by (numerically) known roots.
Polynomial deflate_real(const Polynomial& p, double r) {
    const std::vector<double>& c = p.coeffs();
    std::size_t n = c.size() - 1;
    std::vector<double> q(n);
    double acc = c[n];
    for (std::size_t k = n; k-- > 0;) {
        q[k] = acc;
        acc = c[k] + acc * r;
    }
    return Polynomial(std::move(q));
}

// Division by the real quadratic (s^2 - 2 Re(r) s + |r|^2) for a conjugate
// root pair {r, conj(r)}.
Polynomial deflate_pair(const Polynomial& p, Complex r) {
    double b = -2.0 * r.real();
    double c0 = std::norm(r);
    const std::vector<double>& c = p.coeffs();
    std::size_t n = c.size() - 1;
    std::vector<double> q(n - 1, 0.0);
    double hi = 0.0, lo = 0.0;
    for (std::size_t k = n + 1; k-- > 2;) {
        double qk = c[k] - b * hi - c0 * lo;
        q[k - 2] = qk;
        lo = hi;
        hi = qk;
    }
    return Polynomial(std::move(q));
}

struct MatchedRoots {
    std::vector<double> reals;
    std::vector<Complex> pairs;  // one entry per conjugate pair (Im > 0)
};

// Greedy nearest match between numerator and denominator roots. Complex
// matches are only honored when the full conjugate pair matches on both
// sides, so deflation keeps coefficients real.
MatchedRoots match_common_roots(const std::vector<Complex>& num_roots,
                                const std::vector<Complex>& den_roots,
                                double tol) {
    std::vector<bool> den_used(den_roots.size(), false);
    std::vector<int> match(num_roots.size(), -1);
    for (std::size_t i = 0; i < num_roots.size(); ++i) {
        double best = tol;
        int best_j = -1;
        for (std::size_t j = 0; j < den_roots.size(); ++j) {
            if (den_used[j]) continue;
            bool num_real = num_roots[i].imag() == 0.0;
            bool den_real = den_roots[j].imag() == 0.0;
            if (num_real != den_real) continue;
            if (!num_real && std::signbit(num_roots[i].imag()) !=
                                 std::signbit(den_roots[j].imag()))
                continue;
            double d = relative_distance(num_roots[i], den_roots[j]);
            if (d <= best) {
                best = d;
                best_j = static_cast<int>(j);
            }
        }
        if (best_j >= 0) {
            match[i] = best_j;
            den_used[static_cast<std::size_t>(best_j)] = true;
        }
    }

    MatchedRoots out;
    std::vector<bool> consumed(num_roots.size(), false);
    for (std::size_t i = 0; i < num_roots.size(); ++i) {
        if (match[i] < 0 || consumed[i]) continue;
        const Complex& r = num_roots[i];
        if (r.imag() == 0.0) {
            out.reals.push_back(r.real());
            consumed[i] = true;
            continue;
        }
        // Find the matched conjugate partner among the numerator roots.
        std::size_t partner = num_roots.size();
        for (std::size_t j = i + 1; j < num_roots.size(); ++j) {
            if (consumed[j] || match[j] < 0) continue;
            if (num_roots[j] == std::conj(r)) {
                partner = j;
                break;
            }
        }
        if (partner == num_roots.size()) continue;
        out.pairs.push_back(r.imag() > 0.0 ? r : std::conj(r));
        consumed[i] = consumed[partner] = true;
    }
    return out;
}

}  // namespace

RationalFunction::RationalFunction(Polynomial num, Polynomial den)
    : num_(std::move(num)), den_(std::move(den)) {
    normalize();
}

RationalFunction RationalFunction::constant(double value) {
    return RationalFunction(Polynomial::constant(value), Polynomial::constant(1.0));
}

void RationalFunction::normalize() {
    if (den_.is_zero())
        throw std::invalid_argument("rational function with zero denominator");
    if (num_.is_zero()) {
        num_ = Polynomial();
        den_ = Polynomial::constant(1.0);
        return;
    }

    if (*num_.degree() >= 1 && *den_.degree() >= 1) {
        std::vector<Complex> nr = poly_roots(num_).expanded();
        std::vector<Complex> dr = poly_roots(den_).expanded();
        MatchedRoots common =
            match_common_roots(nr, dr, cancellation_tolerance);
        for (double r : common.reals) {
            num_ = deflate_real(num_, r);
            den_ = deflate_real(den_, r);
        }
        for (Complex r : common.pairs) {
            num_ = deflate_pair(num_, r);
            den_ = deflate_pair(den_, r);
        }
    }
    double lead = den_.leading();
    num_ /= lead;
    den_ /= lead;
}

Complex RationalFunction::operator()(Complex s) const {
    Polynomial::Evaluation d = den_.evaluate_with_bound(s);
    if (std::abs(d.value) <= 4.0 * d.error_bound) {
        char buf[96];
        std::snprintf(buf, sizeof(buf),
                      "evaluation at pole s = (%.6g, %.6g)", s.real(), s.imag());
        throw PoleEvaluationError(s, buf);
    }
    return num_(s) / d.value;
}

RationalFunction RationalFunction::reciprocal() const {
    if (num_.is_zero())
        throw std::invalid_argument("reciprocal of the zero rational function");
    return RationalFunction(den_, num_);
}

RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
    return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
    return RationalFunction(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
}

RationalFunction RationalFunction::operator-() const {
    RationalFunction out(*this);
    out.num_ *= -1.0;
    return out;
}

RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
    if (a.is_zero() || b.is_zero()) return RationalFunction();
    // Cross-cancel before multiplying out so intermediate degrees stay at
    // the sum of the reduced factors, not of the raw ones.
    RationalFunction left(a.num_, b.den_);
    RationalFunction right(b.num_, a.den_);
    return RationalFunction(left.num_ * right.num_, left.den_ * right.den_);
}

RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
    if (b.is_zero())
        throw std::invalid_argument("division by the zero rational function");
    return a * b.reciprocal();
}

RationalFunction operator*(const RationalFunction& a, double k) {
    return RationalFunction(a.num_ * k, a.den_);
}

RationalFunction operator*(double k, const RationalFunction& a) {
    return a * k;
}

}  // namespace buckstab
