#pragma once

#include "buckstab/closed_loop.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace buckstab {

struct SimEvent {
    enum class Kind { reference_step, input_step, load_step };
    double time = 0.0;
    Kind kind = Kind::load_step;
    double magnitude = 0.0;
    /// Target stage, 0-based. -1 picks the default: the source stage for
    /// reference and input steps, the last stage for load steps.
    int stage = -1;
};

struct SimConfig {
    double duration = 0.05;
    /// Fixed RK4 step; 0 selects 1/(100 f0_max) clamped to duration/1000.
    /// Explicit values must satisfy dt <= duration/1000 and
    /// dt <= 1/(50 f0_max).
    double dt = 0.0;
    /// Duty clamped to [0, 1] with conditional-integration anti-windup.
    /// Off = unbounded duty, for linear-regime comparison; the recorded
    /// duty is then the raw PI output.
    bool saturate_duty = true;
    enum class InitialState { equilibrium, zero, explicit_values };
    InitialState initial_state = InitialState::equilibrium;
    /// State layout: [i_l, v_c, q] per stage, stages in order.
    std::vector<double> initial_values;
    std::vector<SimEvent> events;
    /// Early-termination threshold, relative to operating scale.
    double divergence_factor = 1e6;
};

struct StageTrace {
    std::vector<double> i_l;
    std::vector<double> v_c;
    std::vector<double> duty;
    std::vector<double> integrator;
    std::vector<double> i_in;
};

struct SimTrace {
    std::vector<double> time;
    std::vector<StageTrace> stages;
    bool diverged_early = false;
    double dt = 0.0;
};

/// Columns time_s then per-stage i_l_a, v_c_v, duty, integ_vs, i_in_a
/// (suffixed _1, _2 for a cascade); 17 significant digits,
/// deterministic byte-identical output for identical inputs.
void write_trace_csv(std::ostream& os, const SimTrace& trace);

/// [i_l, v_c, q] equilibrium for a regulated stage. Requires ki > 0 (the
/// integrator pins v_c = v_ref).
std::vector<double> single_equilibrium(const StageSpec& stage);

/// Nonlinear averaged simulation of one PI-controlled stage, classic RK4
/// at fixed step.
SimTrace simulate_single(const StageSpec& stage, const SimConfig& cfg);

struct CascadeSimOptions {
    /// Stage1 runs loadless (its resistor removed), matching the cascade
    /// analysis default.
    bool source_r_load_open = true;
    /// physical: stage1's load current is d2 * i_l2 exactly.
    /// paper: the duty factor is frozen at its equilibrium value D2, the
    /// time-domain counterpart of dropping the i_in feedthrough term.
    Feedthrough coupling = Feedthrough::physical;
    /// Freeze stage2's duty at equilibrium: stage1 then sees an
    /// (asymptotically) constant current load.
    bool freeze_stage2_duty = false;
};

/// [i_l1, v_c1, q1, i_l2, v_c2, q2] equilibrium of the cascade; stage2
/// runs from stage1's regulated output.
std::vector<double> cascade_equilibrium(const StageSpec& stage1,
                                        const StageSpec& stage2,
                                        const CascadeSimOptions& options = {});

/// Two stages, stage2 fed by stage1's output capacitor, stage1 loaded by
/// stage2's input current (plus any external load events).
SimTrace simulate_cascade(const StageSpec& stage1, const StageSpec& stage2,
                          const SimConfig& cfg,
                          const CascadeSimOptions& options = {});

enum class TraceClass { converged, oscillating, diverged };

const char* to_string(TraceClass c);

struct TraceClassification {
    TraceClass verdict;
    /// Earliest time after which the deviation stays below 0.5%; absent
    /// when the trace never settles.
    std::optional<double> settling_time;
    /// Log-envelope slope (1/s) fitted on deviation peaks, when the trace
    /// has enough of them.
    std::optional<double> envelope_growth_rate;
    /// Largest relative deviation over the last quartile.
    double final_deviation = 0.0;
};

/// Classify a trace against its expected equilibrium (state layout as the
/// trace). Converged: last-quartile deviation under 0.5% of operating
/// scale. Diverged: early termination, or positive log-envelope slope
/// with at least a doubling over the window. Oscillating otherwise.
/// Requires the trace to span at least 20 periods of the slowest mode
/// (slowest_mode_hz); throws "trace too short" otherwise.
TraceClassification classify_trace(const SimTrace& trace,
                                   const std::vector<double>& x_eq,
                                   double slowest_mode_hz);

}  // namespace buckstab
