#include "buckstab/closed_loop.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace buckstab {

void PiGains::validate() const {
    if (!(kp >= 0.0) || !std::isfinite(kp))
        throw std::invalid_argument("kp must be >= 0");
    if (!(ki >= 0.0) || !std::isfinite(ki))
        throw std::invalid_argument("ki must be >= 0");
    if (kp == 0.0 && ki == 0.0)
        throw std::invalid_argument("kp and ki cannot both be zero");
}

RationalFunction pi_controller(const PiGains& gains) {
    gains.validate();
    return RationalFunction(Polynomial{gains.ki, gains.kp},
                            Polynomial::monomial(1));
}

ClosedLoopSet close_loop(const StageSpec& stage) {
    stage.gains.validate();
    OperatingPoint op =
        operating_point(stage.params, stage.v_ref, stage.i_load_dc);
    BuckSmallSignal plant(stage.params, op, stage.feedthrough);

    RationalFunction c_pi = pi_controller(stage.gains);
    const RationalFunction& h_vc_d =
        plant.transfer(BuckOutput::capacitor_voltage, BuckInput::duty);
    const RationalFunction& h_vc_vin =
        plant.transfer(BuckOutput::capacitor_voltage, BuckInput::input_voltage);
    const RationalFunction& h_vc_iload =
        plant.transfer(BuckOutput::capacitor_voltage, BuckInput::load_current);
    const RationalFunction& h_il_vin =
        plant.transfer(BuckOutput::inductor_current, BuckInput::input_voltage);

    ClosedLoopSet out;
    out.op = op;
    out.loop_gain = c_pi * h_vc_d;

    // Every plant transfer shares the normalized characteristic denominator,
    // so 1/(1 + T) = cd * delta / char with cd the controller denominator.
    // Folding that factor in symbolically keeps the structural zeros of the
    // closed-loop set exact instead of leaving root-cancellation residue.
    const Polynomial& delta = h_vc_d.den();
    const Polynomial& cn = c_pi.num();
    const Polynomial& cd = c_pi.den();
    out.char_poly = cd * delta + cn * h_vc_d.num();

    out.g_vg = RationalFunction(h_vc_vin.num() * cd, out.char_poly);
    out.z_out = RationalFunction(-(h_vc_iload.num() * cd), out.char_poly);
    out.ref_tracking = RationalFunction(cn * h_vc_d.num(), out.char_poly);

    // d_hat = -C(s) v_c_hat, with v_c_hat the closed-loop response to
    // v_in_hat. The duty and input-voltage disturbances drive the plant
    // through proportional input columns, so the cross terms in the
    // closed-loop inductor current cancel identically and only the direct
    // path survives. Input current adds the operating-point feedthrough in
    // physical mode.
    Polynomial d_from_vin_num = -(cn * h_vc_vin.num());
    Polynomial il_from_vin_num = h_il_vin.num() * cd;
    Polynomial y_in_num = op.duty * il_from_vin_num;
    if (stage.feedthrough == Feedthrough::physical)
        y_in_num += op.i_l * d_from_vin_num;
    out.y_in = RationalFunction(y_in_num, out.char_poly);

    out.stability = hurwitz_stable(out.char_poly);
    return out;
}

Eigen::Matrix3d stage_state_matrix(const StageSpec& stage) {
    stage.gains.validate();
    OperatingPoint op =
        operating_point(stage.params, stage.v_ref, stage.i_load_dc);
    double l = stage.params.l;
    double c = stage.params.c;
    double g = stage.params.load_conductance();
    double v = stage.params.v_in;
    double kp = stage.gains.kp;
    double ki = stage.gains.ki;
    (void)op;

    Eigen::Matrix3d a;
    a << 0.0, (-kp * v - 1.0) / l, ki * v / l,
         1.0 / c, -g / c, 0.0,
         0.0, -1.0, 0.0;
    return a;
}

// ---------------------------------------------------------------------------
// Margins
// ---------------------------------------------------------------------------

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_to_pi(double x) {
    while (x > kPi) x -= 2.0 * kPi;
    while (x < -kPi) x += 2.0 * kPi;
    return x;
}

struct Scan {
    std::vector<double> w;
    std::vector<double> mag;
    std::vector<double> phase;  // unwrapped, radians
};

Scan scan_loop(const RationalFunction& t, double w_min, double w_max, int ppd) {
    Scan s;
    double decades = std::log10(w_max / w_min);
    int n = std::max(2, static_cast<int>(std::ceil(decades * ppd)) + 1);
    s.w.resize(static_cast<std::size_t>(n));
    s.mag.resize(s.w.size());
    s.phase.resize(s.w.size());
    for (int k = 0; k < n; ++k) {
        double f = static_cast<double>(k) / static_cast<double>(n - 1);
        s.w[static_cast<std::size_t>(k)] = w_min * std::pow(w_max / w_min, f);
    }
    double prev_arg = 0.0;
    for (std::size_t k = 0; k < s.w.size(); ++k) {
        Complex v;
        try {
            v = t.at_jw(s.w[k]);
        } catch (const PoleEvaluationError&) {
            v = t.at_jw(s.w[k] * (1.0 + 1e-9));
        }
        s.mag[k] = std::abs(v);
        double a = std::arg(v);
        if (k == 0)
            s.phase[k] = a;
        else
            s.phase[k] = s.phase[k - 1] + wrap_to_pi(a - prev_arg);
        prev_arg = a;
    }
    return s;
}

double eval_mag(const RationalFunction& t, double w) {
    try {
        return std::abs(t.at_jw(w));
    } catch (const PoleEvaluationError&) {
        return std::abs(t.at_jw(w * (1.0 + 1e-9)));
    }
}

// Continue the unwrapped phase from (w0, phi0) to w1 by stepping.
double continue_phase(const RationalFunction& t, double w0, double phi0,
                      double w1) {
    int steps = 32;
    double phi = phi0;
    double prev = wrap_to_pi(phi0);
    for (int k = 1; k <= steps; ++k) {
        double f = static_cast<double>(k) / steps;
        double w = w0 * std::pow(w1 / w0, f);
        double a;
        try {
            a = std::arg(t.at_jw(w));
        } catch (const PoleEvaluationError&) {
            a = std::arg(t.at_jw(w * (1.0 + 1e-9)));
        }
        phi += wrap_to_pi(a - prev);
        prev = a;
    }
    return phi;
}

double bisect_log(double lo, double hi, const std::function<double(double)>& f) {
    double flo = f(lo);
    for (int it = 0; it < 200 && (hi - lo) > 1e-13 * hi; ++it) {
        double mid = std::sqrt(lo * hi);
        double fm = f(mid);
        if ((flo <= 0.0) == (fm <= 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

}  // namespace

Margins loop_margins(const RationalFunction& t, double w_min, double w_max,
                     int points_per_decade) {
    if (t.is_zero()) return Margins{};
    if (!(w_min > 0.0) || !(w_max > w_min) || points_per_decade < 10)
        throw std::invalid_argument("bad margin scan window");

    // Extend the window while the lowest crossing could lie outside it:
    // downward while |T| still rises toward low frequency without having
    // crossed 1, upward while |T| stays above 1 at the top.
    for (int k = 0; k < 12; ++k) {
        double m0 = eval_mag(t, w_min);
        double m_below = eval_mag(t, w_min / 10.0);
        if (m0 <= 1.0 && m_below > m0)
            w_min /= 10.0;
        else
            break;
    }
    for (int k = 0; k < 12; ++k) {
        if (eval_mag(t, w_max) > 1.0)
            w_max *= 10.0;
        else
            break;
    }

    Scan s = scan_loop(t, w_min, w_max, points_per_decade);
    Margins out;

    for (std::size_t k = 0; k + 1 < s.w.size(); ++k) {
        bool crosses = (s.mag[k] - 1.0) * (s.mag[k + 1] - 1.0) <= 0.0 &&
                       s.mag[k] != s.mag[k + 1];
        if (!crosses) continue;
        double wg = bisect_log(s.w[k], s.w[k + 1], [&](double w) {
            return eval_mag(t, w) - 1.0;
        });
        double phi = continue_phase(t, s.w[k], s.phase[k], wg);
        out.gain_crossover_hz = wg / (2.0 * kPi);
        out.phase_margin_deg = 180.0 + phi * 180.0 / kPi;
        break;
    }

    for (std::size_t k = 0; k + 1 < s.w.size(); ++k) {
        double a = s.phase[k] + kPi;
        double b = s.phase[k + 1] + kPi;
        if (a * b > 0.0) continue;
        double wp = bisect_log(s.w[k], s.w[k + 1], [&](double w) {
            return continue_phase(t, s.w[k], s.phase[k], w) + kPi;
        });
        double mag = eval_mag(t, wp);
        out.phase_crossover_hz = wp / (2.0 * kPi);
        out.gain_margin_db = -20.0 * std::log10(mag);
        break;
    }
    return out;
}

}  // namespace buckstab
