#pragma once

#include "buckstab/closed_loop.hpp"

namespace buckstab {

struct CascadeOptions {
    /// Drop stage1's local load resistor when building the cascade model
    /// (the load seen by stage1 is stage2's input, not its own resistor).
    bool source_r_load_open = true;
    /// Force stage1's output impedance to zero: a perfectly stiff
    /// intermediate bus. The minor loop vanishes and the stages decouple.
    bool ideal_source = false;
    /// Linearize stage2 at its configured v_in instead of stage1's
    /// regulated output voltage.
    bool standalone_vin2 = false;
};

/// Source stage feeding a load stage. Holds both the as-configured
/// standalone stage descriptions and the cascade-form models actually
/// composed (stage2 linearized at the bus voltage, stage1 load per
/// options, stage1 biased with stage2's DC input draw).
struct CascadeModel {
    StageSpec stage1_standalone;
    StageSpec stage2_standalone;
    StageSpec stage1;
    StageSpec stage2;
    ClosedLoopSet loop1;
    ClosedLoopSet loop2;
    StabilityResult standalone1;
    StabilityResult standalone2;
    /// z_out_cl1 * y_in_cl2
    RationalFunction minor_loop;
    /// g_vg_cl1 * g_vg_cl2 / (1 + minor_loop)
    RationalFunction total_gain;
    /// Denominator of total_gain: the cascade characteristic polynomial.
    Polynomial cascade_char;
    CascadeOptions options;
};

/// Compose two closed-loop stages source-to-load. Stage2's v_ref must lie
/// below the bus voltage it runs from.
CascadeModel build_cascade(const StageSpec& stage1, const StageSpec& stage2,
                           const CascadeOptions& options = {});

struct MiddlebrookResult {
    double worst_ratio = 0.0;
    double worst_freq_hz = 0.0;
    /// Strictly worst_ratio < 1; a ratio of exactly 1 is a violation.
    bool satisfied = true;
};

/// Peak |minor_loop(jw)| over a log grid with golden-section refinement of
/// local maxima, seeded additionally at the resonant ordinates of the
/// minor loop's poles and zeros.
MiddlebrookResult middlebrook_check(const RationalFunction& minor_loop,
                                    double f_min_hz = 1.0,
                                    double f_max_hz = 1e7,
                                    int points_per_decade = 200);

struct StabilityReport {
    Verdict standalone1;
    Verdict standalone2;
    MiddlebrookResult middlebrook;
    Verdict exact_verdict;
    double max_real_part;
    /// Winding of the minor loop about -1 and the RHP pole count of the
    /// minor loop; winding = RHP zeros of (1 + minor_loop) - rhp_poles by
    /// the argument principle, so the exact verdict is cross-checked as
    /// winding + rhp_poles == 0  <=>  stable.
    int nyquist_winding;
    int minor_loop_rhp_poles;
    bool argument_principle_consistent;
};

/// Exact cascade verdict from the poles of total_gain, cross-checked by
/// the Nyquist winding of the minor loop. Requires both stages stable in
/// their standalone configurations; otherwise the minor-loop argument is
/// inapplicable and this throws.
StabilityReport exact_cascade_verdict(const CascadeModel& m);

/// Combined 6-state matrix over [i_l1, v_c1, q1, i_l2, v_c2, q2]: both
/// averaged stages plus both integrators, coupled by stage1's load being
/// stage2's input current and stage2's source being stage1's output.
/// Independent oracle for the rational-function composition: its
/// eigenvalues are the cascade poles. With coupled = false the
/// load-current coupling is zeroed and the spectrum is the union of the
/// two composed stage spectra.
Eigen::Matrix<double, 6, 6> compose_state_space(const CascadeModel& m,
                                                bool coupled = true);

}  // namespace buckstab
