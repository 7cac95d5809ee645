#include "buckstab/polynomial.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace buckstab {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Balancing radius for Horner evaluation: roughly the geometric mean
// magnitude of the roots, from the lowest and highest nonzero coefficients.
double balance_radius(const std::vector<double>& c) {
    if (c.empty()) return 1.0;
    std::size_t k0 = 0;
    while (k0 < c.size() && c[k0] == 0.0) ++k0;
    std::size_t n = c.size() - 1;
    if (k0 >= n) return 1.0;
    double alpha = std::pow(std::abs(c[k0]) / std::abs(c[n]),
                            1.0 / static_cast<double>(n - k0));
    if (!std::isfinite(alpha) || alpha <= 0.0) return 1.0;
    return std::clamp(alpha, 1e-12, 1e12);
}

}  // namespace

void Polynomial::trim() {
    while (!coeffs_.empty() && coeffs_.back() == 0.0) coeffs_.pop_back();
    for (double c : coeffs_) {
        if (!std::isfinite(c))
            throw std::invalid_argument("polynomial coefficient is not finite");
    }
}

Polynomial::Polynomial(std::initializer_list<double> ascending)
    : coeffs_(ascending) {
    trim();
}

Polynomial::Polynomial(std::vector<double> ascending)
    : coeffs_(std::move(ascending)) {
    trim();
}

Polynomial Polynomial::constant(double value) {
    return Polynomial{value};
}

Polynomial Polynomial::monomial(int degree, double coeff) {
    if (degree < 0) throw std::invalid_argument("monomial degree must be >= 0");
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = coeff;
    return Polynomial(std::move(c));
}

Polynomial Polynomial::from_roots(const std::vector<Complex>& roots,
                                  double leading) {
    std::vector<Complex> c{Complex(leading, 0.0)};
    std::vector<Complex> next;
    for (const Complex& r : roots) {
        next.assign(c.size() + 1, Complex(0.0, 0.0));
        for (std::size_t k = 0; k < c.size(); ++k) {
            next[k] -= r * c[k];
            next[k + 1] += c[k];
        }
        c = next;
    }
    std::vector<double> real(c.size());
    double scale = 0.0;
    for (const Complex& z : c) scale = std::max(scale, std::abs(z));
    for (std::size_t k = 0; k < c.size(); ++k) {
        if (std::abs(c[k].imag()) > 1e-8 * std::max(1.0, scale))
            throw std::invalid_argument(
                "root list is not closed under conjugation");
        real[k] = c[k].real();
    }
    return Polynomial(std::move(real));
}

std::optional<int> Polynomial::degree() const {
    if (coeffs_.empty()) return std::nullopt;
    return static_cast<int>(coeffs_.size()) - 1;
}

double Polynomial::leading() const {
    return coeffs_.empty() ? 0.0 : coeffs_.back();
}

double Polynomial::coeff(int k) const {
    if (k < 0 || static_cast<std::size_t>(k) >= coeffs_.size()) return 0.0;
    return coeffs_[static_cast<std::size_t>(k)];
}

Polynomial::Evaluation Polynomial::evaluate_with_bound(Complex s) const {
    if (coeffs_.empty()) return {Complex(0.0, 0.0), 0.0};
    double alpha = balance_radius(coeffs_);
    Complex z = s / alpha;
    double az = std::abs(z);

    // Horner on the rescaled polynomial d_k = c_k * alpha^k, together with
    // the standard running bound gamma_2n * sum |d_k| |z|^k.
    std::size_t n = coeffs_.size() - 1;
    double pw = std::pow(alpha, static_cast<double>(n));
    Complex acc(coeffs_[n] * pw, 0.0);
    double mag = std::abs(acc);
    for (std::size_t k = n; k-- > 0;) {
        pw /= alpha;
        double dk = coeffs_[k] * pw;
        acc = acc * z + dk;
        mag = mag * az + std::abs(dk);
    }
    double bound = 2.0 * static_cast<double>(n + 1) * kEps * mag;
    return {acc, bound};
}

Complex Polynomial::operator()(Complex s) const {
    return evaluate_with_bound(s).value;
}

double Polynomial::operator()(double s) const {
    if (coeffs_.empty()) return 0.0;
    double acc = coeffs_.back();
    for (std::size_t k = coeffs_.size() - 1; k-- > 0;) acc = acc * s + coeffs_[k];
    return acc;
}

Polynomial Polynomial::derivative() const {
    if (coeffs_.size() <= 1) return Polynomial();
    std::vector<double> d(coeffs_.size() - 1);
    for (std::size_t k = 1; k < coeffs_.size(); ++k)
        d[k - 1] = coeffs_[k] * static_cast<double>(k);
    return Polynomial(std::move(d));
}

double Polynomial::root_residual(Complex r) const {
    if (coeffs_.empty()) return 0.0;
    double cmax = 0.0;
    for (double c : coeffs_) cmax = std::max(cmax, std::abs(c));
    if (cmax == 0.0) return 0.0;
    double denom = cmax * std::pow(std::max(1.0, std::abs(r)),
                                   static_cast<double>(coeffs_.size() - 1));
    return std::abs((*this)(r)) / denom;
}

Polynomial Polynomial::operator-() const {
    Polynomial out(*this);
    for (double& c : out.coeffs_) c = -c;
    return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& rhs) {
    if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] += rhs.coeffs_[k];
    trim();
    return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& rhs) {
    if (rhs.coeffs_.size() > coeffs_.size()) coeffs_.resize(rhs.coeffs_.size(), 0.0);
    for (std::size_t k = 0; k < rhs.coeffs_.size(); ++k) coeffs_[k] -= rhs.coeffs_[k];
    trim();
    return *this;
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) return Polynomial();
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
            c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return Polynomial(std::move(c));
}

Polynomial& Polynomial::operator*=(const Polynomial& rhs) {
    *this = *this * rhs;
    return *this;
}

Polynomial& Polynomial::operator*=(double k) {
    for (double& c : coeffs_) c *= k;
    trim();
    return *this;
}

Polynomial& Polynomial::operator/=(double k) {
    if (k == 0.0) throw std::invalid_argument("division of polynomial by zero");
    for (double& c : coeffs_) c /= k;
    trim();
    return *this;
}

// ---------------------------------------------------------------------------
// Roots
// ---------------------------------------------------------------------------

int RootSet::total() const {
    int n = 0;
    for (int m : multiplicities) n += m;
    return n;
}

double RootSet::max_real_part() const {
    double mx = -std::numeric_limits<double>::infinity();
    for (const Complex& r : roots) mx = std::max(mx, r.real());
    return mx;
}

std::vector<Complex> RootSet::expanded() const {
    std::vector<Complex> out;
    for (std::size_t i = 0; i < roots.size(); ++i)
        out.insert(out.end(), static_cast<std::size_t>(multiplicities[i]), roots[i]);
    return out;
}

namespace {

// Pair eigenvalues of a real matrix into exact conjugates. Eigen already
// returns conjugate pairs; this symmetrizes residual rounding and flattens
// the imaginary part of isolated near-real eigenvalues.
std::vector<Complex> symmetrize_conjugates(std::vector<Complex> r) {
    double scale = 0.0;
    for (const Complex& z : r) scale = std::max(scale, std::abs(z));
    double tol = 1e-7 * std::max(scale, 1e-300);

    std::vector<bool> used(r.size(), false);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (used[i] || r[i].imag() <= 0.0) continue;
        std::size_t best = r.size();
        double best_d = tol;
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (used[j] || j == i || r[j].imag() >= 0.0) continue;
            double d = std::abs(r[i] - std::conj(r[j]));
            if (d <= best_d) {
                best_d = d;
                best = j;
            }
        }
        if (best < r.size()) {
            Complex avg = 0.5 * (r[i] + std::conj(r[best]));
            r[i] = avg;
            r[best] = std::conj(avg);
            used[i] = used[best] = true;
        }
    }
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (!used[i] && std::abs(r[i].imag()) <= tol) r[i] = Complex(r[i].real(), 0.0);
    }
    return r;
}

RootSet cluster(std::vector<Complex> r) {
    RootSet out;
    double scale = 0.0;
    for (const Complex& z : r) scale = std::max(scale, std::abs(z));
    double tol = 1e-5 * std::max(scale, 1e-300);

    std::sort(r.begin(), r.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    std::vector<bool> used(r.size(), false);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (used[i]) continue;
        Complex sum = r[i];
        int count = 1;
        used[i] = true;
        for (std::size_t j = i + 1; j < r.size(); ++j) {
            if (used[j]) continue;
            if (std::abs(r[j] - sum / static_cast<double>(count)) <= tol) {
                sum += r[j];
                ++count;
                used[j] = true;
            }
        }
        out.roots.push_back(sum / static_cast<double>(count));
        out.multiplicities.push_back(count);
    }
    return out;
}

}  // namespace

RootSet poly_roots(const Polynomial& p) {
    if (p.is_zero())
        throw std::domain_error("zero polynomial has no root set");
    int n = *p.degree();
    if (n == 0) return RootSet{};

    double alpha = balance_radius(p.coeffs());
    // Companion matrix of the monic rescaled polynomial q(z) = p(alpha z).
    double lead = p.coeff(n) * std::pow(alpha, static_cast<double>(n));
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    double pw = 1.0;
    for (int k = 0; k < n; ++k) {
        companion(k, n - 1) = -p.coeff(k) * pw / lead;
        pw *= alpha;
    }
    for (int k = 1; k < n; ++k) companion(k, k - 1) = 1.0;

    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("companion eigenvalue iteration failed");

    std::vector<Complex> r(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) r[static_cast<std::size_t>(k)] = solver.eigenvalues()(k) * alpha;
    return cluster(symmetrize_conjugates(std::move(r)));
}

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::marginal: return "marginal";
        case Verdict::unstable: return "unstable";
    }
    return "unknown";
}

StabilityResult hurwitz_stable(const Polynomial& p) {
    if (p.is_zero() || *p.degree() < 1)
        throw std::invalid_argument("stability test requires degree >= 1");

    StabilityResult out;
    out.roots = poly_roots(p);
    double scale = 0.0;
    for (const Complex& r : out.roots.roots) scale = std::max(scale, std::abs(r));
    out.epsilon = std::max(1e-6 * scale, 1e-9);
    out.max_real_part = out.roots.max_real_part();

    bool any_beyond = false;
    bool any_band = false;
    for (const Complex& r : out.roots.roots) {
        if (r.real() > out.epsilon) any_beyond = true;
        else if (r.real() >= -out.epsilon) any_band = true;
    }
    out.verdict = any_beyond  ? Verdict::unstable
                  : any_band ? Verdict::marginal
                             : Verdict::stable;

    if (*p.degree() <= 4 && out.verdict != Verdict::marginal) {
        if (auto routh = routh_stable(p))
            out.routh_agrees = (*routh == (out.verdict == Verdict::stable));
    }
    return out;
}

std::vector<double> routh_first_column(const Polynomial& p) {
    if (p.is_zero() || *p.degree() < 1)
        throw std::invalid_argument("Routh table requires degree >= 1");
    int n = *p.degree();

    // Rows hold coefficients of descending even/odd powers.
    std::vector<double> prev, cur;
    for (int k = n; k >= 0; k -= 2) prev.push_back(p.coeff(k));
    for (int k = n - 1; k >= 0; k -= 2) cur.push_back(p.coeff(k));

    double cmax = 0.0;
    for (double c : p.coeffs()) cmax = std::max(cmax, std::abs(c));

    std::vector<double> first{prev[0]};
    for (int row = 1; row <= n; ++row) {
        if (std::abs(cur[0]) <= 1e-14 * cmax)
            throw std::domain_error("Routh table pivot vanished");
        first.push_back(cur[0]);
        if (row == n) break;
        std::vector<double> next(std::max(prev.size(), cur.size()), 0.0);
        for (std::size_t j = 0; j + 1 < std::max(prev.size(), cur.size()); ++j) {
            double a = (j + 1 < prev.size()) ? prev[j + 1] : 0.0;
            double b = (j + 1 < cur.size()) ? cur[j + 1] : 0.0;
            next[j] = (cur[0] * a - prev[0] * b) / cur[0];
        }
        while (next.size() > 1 && next.back() == 0.0) next.pop_back();
        prev = cur;
        cur = next;
    }
    return first;
}

std::optional<bool> routh_stable(const Polynomial& p) {
    std::vector<double> col;
    try {
        col = routh_first_column(p);
    } catch (const std::domain_error&) {
        return std::nullopt;
    }
    double lead = col[0];
    for (double v : col) {
        if (v * lead <= 0.0) return false;
    }
    return true;
}

}  // namespace buckstab
