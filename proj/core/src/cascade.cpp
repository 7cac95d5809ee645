#include "buckstab/cascade.hpp"

#include "buckstab/freqresp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace buckstab {

namespace {

constexpr double kPi = std::numbers::pi;

double coeff_scale(const Polynomial& p) {
    double s = 0.0;
    for (double c : p.coeffs()) s = std::max(s, std::abs(c));
    return s;
}

bool nearly_equal(const Polynomial& a, const Polynomial& b, double tol) {
    if (a.coeffs().size() != b.coeffs().size()) return false;
    double scale = std::max(coeff_scale(a), coeff_scale(b));
    for (std::size_t k = 0; k < a.coeffs().size(); ++k)
        if (std::abs(a.coeffs()[k] - b.coeffs()[k]) > tol * scale) return false;
    return true;
}

}  // namespace

CascadeModel build_cascade(const StageSpec& stage1, const StageSpec& stage2,
                           const CascadeOptions& options) {
    CascadeModel m;
    m.options = options;
    m.stage1_standalone = stage1;
    m.stage2_standalone = stage2;

    // Stage2 runs from stage1's regulated output; linearize there unless
    // the standalone Table reading is requested.
    m.stage2 = stage2;
    if (!options.standalone_vin2) m.stage2.params.v_in = stage1.v_ref;
    if (!(m.stage2.v_ref < m.stage2.params.v_in))
        throw std::invalid_argument(
            "stage2 v_ref must lie below the bus voltage feeding it");

    m.standalone1 = close_loop(stage1).stability;
    m.standalone2 = close_loop(stage2).stability;

    m.loop2 = close_loop(m.stage2);

    // Stage1 carries stage2's DC input draw as bias load, and drops its
    // own resistor per options.
    m.stage1 = stage1;
    if (options.source_r_load_open) m.stage1.params.r_load.reset();
    m.stage1.i_load_dc = stage1.i_load_dc + m.loop2.op.duty * m.loop2.op.i_l;
    m.loop1 = close_loop(m.stage1);

    if (options.ideal_source) m.loop1.z_out = RationalFunction();

    m.minor_loop = m.loop1.z_out * m.loop2.y_in;

    // The minor loop's denominator must still carry the two stage
    // characteristic polynomials; a coincidental pole/zero cancellation
    // inside z_out or y_in would silently drop a cascade pole, so it is
    // checked rather than assumed.
    Polynomial char_product = m.loop1.char_poly * m.loop2.char_poly;
    if (!m.minor_loop.is_zero() &&
        !nearly_equal(m.minor_loop.den(), char_product, 1e-9))
        throw std::runtime_error(
            "minor-loop denominator lost a characteristic factor");

    // 1 + minor rides the same product denominator, so the combined
    // transfer collapses onto the cascade characteristic symbolically
    // instead of through a division that would have to re-cancel it.
    m.cascade_char = char_product + m.minor_loop.num();
    m.total_gain = RationalFunction(m.loop1.g_vg.num() * m.loop2.g_vg.num(),
                                    m.cascade_char);
    return m;
}

// ---------------------------------------------------------------------------
// Middlebrook screening
// ---------------------------------------------------------------------------

namespace {

double ratio_at(const RationalFunction& m, double f) {
    try {
        return std::abs(m(Complex(0.0, 2.0 * kPi * f)));
    } catch (const PoleEvaluationError&) {
        return std::abs(m(Complex(0.0, 2.0 * kPi * f * (1.0 + 1e-9))));
    }
}

// Golden-section maximization of |m| on [a, b] (hertz, log domain).
std::pair<double, double> golden_max(const RationalFunction& m, double a,
                                     double b) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double la = std::log(a);
    double lb = std::log(b);
    double x1 = lb - inv_phi * (lb - la);
    double x2 = la + inv_phi * (lb - la);
    double f1 = ratio_at(m, std::exp(x1));
    double f2 = ratio_at(m, std::exp(x2));
    for (int it = 0; it < 120 && (lb - la) > 1e-12; ++it) {
        if (f1 < f2) {
            la = x1;
            x1 = x2;
            f1 = f2;
            x2 = la + inv_phi * (lb - la);
            f2 = ratio_at(m, std::exp(x2));
        } else {
            lb = x2;
            x2 = x1;
            f2 = f1;
            x1 = lb - inv_phi * (lb - la);
            f1 = ratio_at(m, std::exp(x1));
        }
    }
    double x = 0.5 * (la + lb);
    return {std::exp(x), ratio_at(m, std::exp(x))};
}

}  // namespace

MiddlebrookResult middlebrook_check(const RationalFunction& minor_loop,
                                    double f_min_hz, double f_max_hz,
                                    int points_per_decade) {
    if (!(f_min_hz > 0.0) || !(f_min_hz < f_max_hz) || points_per_decade < 10)
        throw std::invalid_argument("bad middlebrook grid");
    MiddlebrookResult out;
    if (minor_loop.is_zero()) {
        out.worst_ratio = 0.0;
        out.worst_freq_hz = 0.0;
        out.satisfied = true;
        return out;
    }

    double decades = std::log10(f_max_hz / f_min_hz);
    int n = std::max(2, static_cast<int>(std::ceil(decades * points_per_decade)) + 1);
    std::vector<double> freq(static_cast<std::size_t>(n));
    std::vector<double> mag(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        double t = static_cast<double>(k) / static_cast<double>(n - 1);
        freq[static_cast<std::size_t>(k)] =
            f_min_hz * std::pow(f_max_hz / f_min_hz, t);
        mag[static_cast<std::size_t>(k)] = ratio_at(minor_loop, freq[static_cast<std::size_t>(k)]);
    }

    out.worst_freq_hz = freq[0];
    out.worst_ratio = mag[0];
    auto consider = [&out](double f, double r) {
        if (r > out.worst_ratio) {
            out.worst_ratio = r;
            out.worst_freq_hz = f;
        }
    };
    for (int k = 1; k < n; ++k)
        consider(freq[static_cast<std::size_t>(k)], mag[static_cast<std::size_t>(k)]);

    // Local maxima of the coarse grid, strongest three refined.
    std::vector<std::pair<double, std::size_t>> peaks;
    for (std::size_t k = 1; k + 1 < freq.size(); ++k)
        if (mag[k] >= mag[k - 1] && mag[k] >= mag[k + 1])
            peaks.push_back({mag[k], k});
    std::sort(peaks.rbegin(), peaks.rend());
    for (std::size_t p = 0; p < peaks.size() && p < 3; ++p) {
        std::size_t k = peaks[p].second;
        auto [f, r] = golden_max(minor_loop, freq[k - 1], freq[k + 1]);
        consider(f, r);
    }

    // Narrow resonances can slip between grid points entirely; seed a
    // refinement at every pole/zero resonant ordinate as well.
    std::vector<Complex> roots;
    if (*minor_loop.num().degree() >= 1)
        for (const Complex& r : poly_roots(minor_loop.num()).expanded())
            roots.push_back(r);
    for (const Complex& r : poly_roots(minor_loop.den()).expanded())
        roots.push_back(r);
    for (const Complex& r : roots) {
        double f = std::abs(r.imag()) / (2.0 * kPi);
        if (f < f_min_hz || f > f_max_hz) continue;
        auto [fr, rr] = golden_max(minor_loop, f * 0.8, f * 1.25);
        consider(fr, rr);
    }

    out.satisfied = out.worst_ratio < 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Exact verdict
// ---------------------------------------------------------------------------

StabilityReport exact_cascade_verdict(const CascadeModel& m) {
    if (m.standalone1.verdict != Verdict::stable ||
        m.standalone2.verdict != Verdict::stable)
        throw std::domain_error(
            "minor-loop argument inapplicable: a stage is not stable standalone");

    StabilityReport report;
    report.standalone1 = m.standalone1.verdict;
    report.standalone2 = m.standalone2.verdict;
    report.middlebrook = middlebrook_check(m.minor_loop);

    StabilityResult exact = hurwitz_stable(m.cascade_char);
    report.exact_verdict = exact.verdict;
    report.max_real_part = exact.max_real_part;

    // Argument-principle cross-check. The minor loop may carry RHP poles
    // when stage1 runs loadless in the cascade (its own closed loop is
    // then undamped), so the pole count enters explicitly:
    // winding = (RHP zeros of 1 + minor_loop) - (RHP poles of minor_loop).
    int rhp_poles = 0;
    if (!m.minor_loop.is_zero()) {
        for (const Complex& r : poly_roots(m.minor_loop.den()).expanded()) {
            double eps = std::max(1e-6 * std::abs(r), 1e-9);
            if (r.real() > eps) ++rhp_poles;
        }
    }
    report.minor_loop_rhp_poles = rhp_poles;
    report.nyquist_winding =
        m.minor_loop.is_zero() ? 0
                               : nyquist_winding(m.minor_loop, Complex(-1.0, 0.0));

    int rhp_cascade_poles = report.nyquist_winding + rhp_poles;
    bool winding_says_stable = rhp_cascade_poles == 0;
    report.argument_principle_consistent =
        exact.verdict == Verdict::marginal ||
        winding_says_stable == (exact.verdict == Verdict::stable);
    return report;
}

// ---------------------------------------------------------------------------
// State-space oracle
// ---------------------------------------------------------------------------

Eigen::Matrix<double, 6, 6> compose_state_space(const CascadeModel& m,
                                                bool coupled) {
    const StageSpec& s1 = m.stage1;
    const StageSpec& s2 = m.stage2;
    const OperatingPoint& op2 = m.loop2.op;

    double l1 = s1.params.l, c1 = s1.params.c, g1 = s1.params.load_conductance();
    double v1 = s1.params.v_in;
    double kp1 = s1.gains.kp, ki1 = s1.gains.ki;
    double l2 = s2.params.l, c2 = s2.params.c, g2 = s2.params.load_conductance();
    double v2 = s2.params.v_in;
    double kp2 = s2.gains.kp, ki2 = s2.gains.ki;
    double d2 = op2.duty, il2 = op2.i_l;

    Eigen::Matrix<double, 6, 6> a = Eigen::Matrix<double, 6, 6>::Zero();

    // Stage1: d(i_l1) = (d1*v_in1 - v_c1)/l1 with d1 = kp1(vref1 - v_c1) + ki1*q1.
    a(0, 1) = (-kp1 * v1 - 1.0) / l1;
    a(0, 2) = ki1 * v1 / l1;
    // d(v_c1) = (i_l1 - g1*v_c1 - i_load1)/c1, i_load1 = stage2 input current.
    a(1, 0) = 1.0 / c1;
    a(1, 1) = -g1 / c1;
    if (coupled) {
        // i_load1 = d2*i_l2 linearized: D2*il2_hat (+ I_L2*d2_hat in
        // physical mode, with d2_hat = -kp2*v_c2_hat + ki2*q2_hat).
        a(1, 3) = -d2 / c1;
        if (s2.feedthrough == Feedthrough::physical) {
            a(1, 4) = il2 * kp2 / c1;
            a(1, 5) = -il2 * ki2 / c1;
        }
    }
    // d(q1) = vref1 - v_c1.
    a(2, 1) = -1.0;

    // Stage2 fed by v_c1: d(i_l2) = (d2*v_c1 - v_c2)/l2.
    if (coupled) a(3, 1) = d2 / l2;
    a(3, 4) = (-kp2 * v2 - 1.0) / l2;
    a(3, 5) = ki2 * v2 / l2;
    a(4, 3) = 1.0 / c2;
    a(4, 4) = -g2 / c2;
    a(5, 4) = -1.0;

    return a;
}

}  // namespace buckstab
