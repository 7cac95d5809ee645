#pragma once

#include "buckstab/buck.hpp"

#include <optional>

namespace buckstab {

/// Voltage-mode PI compensator gains. Requires kp >= 0, ki >= 0 and not
/// both zero.
struct PiGains {
    double kp = 0.0;
    double ki = 0.0;
    void validate() const;
};

/// C(s) = (kp s + ki) / s
RationalFunction pi_controller(const PiGains& gains);

/// One voltage-mode PI-regulated buck stage.
struct StageSpec {
    BuckParams params;
    PiGains gains;
    double v_ref = 0.0;
    /// Extra DC load current at the operating point (a downstream
    /// converter's input draw, for cascade work).
    double i_load_dc = 0.0;
    Feedthrough feedthrough = Feedthrough::physical;
};

/// Closed-loop description of one stage. All denominators share the
/// characteristic polynomial (monic).
struct ClosedLoopSet {
    Polynomial char_poly;
    RationalFunction loop_gain;  // T(s) = C(s) * H(v_c <- d)
    /// Closed-loop audio susceptibility v_c <- v_in.
    RationalFunction g_vg;
    /// Closed-loop output impedance -v_c / i_load (positive convention).
    RationalFunction z_out;
    /// Closed-loop input admittance i_in / v_in. Negative real at DC in
    /// physical mode: a regulated converter draws constant power.
    RationalFunction y_in;
    /// Reference-tracking transfer function v_c <- v_ref, T/(1 + T); the
    /// linear prediction step tests compare the simulator against.
    RationalFunction ref_tracking;
    OperatingPoint op;
    StabilityResult stability;
};

/// Close the voltage loop around the averaged stage model.
ClosedLoopSet close_loop(const StageSpec& stage);

/// Plant + PI integrator state matrix over x = [i_l, v_c, q] where
/// dq/dt = v_ref - v_c. Its eigenvalues are the closed-loop poles.
Eigen::Matrix3d stage_state_matrix(const StageSpec& stage);

struct Margins {
    /// Lowest-frequency unity-gain crossing, if any.
    std::optional<double> gain_crossover_hz;
    std::optional<double> phase_margin_deg;
    /// Lowest-frequency -180 deg crossing of the unwrapped phase, if any.
    std::optional<double> phase_crossover_hz;
    std::optional<double> gain_margin_db;
};

/// Gain and phase margins of a loop gain from a log-frequency scan with
/// bisection refinement. The scan window [w_min, w_max] (rad/s) extends
/// itself by decades when the lowest crossing lies outside it.
Margins loop_margins(const RationalFunction& t, double w_min = 1e1,
                     double w_max = 1e7, int points_per_decade = 200);

}  // namespace buckstab
