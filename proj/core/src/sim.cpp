#include "buckstab/sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace buckstab {

namespace {

constexpr double kPi = std::numbers::pi;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

// Piecewise-constant input: base value plus accumulated step magnitudes.
struct Drive {
    double base = 0.0;
    std::vector<SimEvent> steps;

    double operator()(double t) const {
        double v = base;
        for (const SimEvent& e : steps)
            if (t >= e.time) v += e.magnitude;
        return v;
    }
};

struct StageDrives {
    Drive v_in;   // source stage only; later stages ride the bus
    Drive v_ref;
    Drive i_load;  // external draw at the stage output
};

std::vector<StageDrives> build_drives(const std::vector<StageSpec>& stages,
                                      const SimConfig& cfg) {
    std::vector<StageDrives> drives(stages.size());
    for (std::size_t k = 0; k < stages.size(); ++k) {
        drives[k].v_in.base = stages[k].params.v_in;
        drives[k].v_ref.base = stages[k].v_ref;
        drives[k].i_load.base = (k + 1 == stages.size()) ? stages[k].i_load_dc : 0.0;
    }
    for (const SimEvent& e : cfg.events) {
        if (!(e.time >= 0.0))
            throw std::invalid_argument("event time must be >= 0");
        int def = e.kind == SimEvent::Kind::load_step
                      ? static_cast<int>(stages.size()) - 1
                      : 0;
        int s = e.stage < 0 ? def : e.stage;
        if (s < 0 || s >= static_cast<int>(stages.size()))
            throw std::invalid_argument("event stage index out of range");
        if (e.kind == SimEvent::Kind::input_step && s != 0)
            throw std::invalid_argument(
                "input_step applies to the source stage only");
        StageDrives& d = drives[static_cast<std::size_t>(s)];
        switch (e.kind) {
            case SimEvent::Kind::reference_step: d.v_ref.steps.push_back(e); break;
            case SimEvent::Kind::input_step: d.v_in.steps.push_back(e); break;
            case SimEvent::Kind::load_step: d.i_load.steps.push_back(e); break;
        }
    }
    return drives;
}

double fastest_resonance_hz(const std::vector<StageSpec>& stages) {
    double f0 = 0.0;
    for (const StageSpec& s : stages)
        f0 = std::max(f0, 1.0 / (2.0 * kPi * std::sqrt(s.params.l * s.params.c)));
    return f0;
}

double resolve_dt(const std::vector<StageSpec>& stages, const SimConfig& cfg) {
    if (!(cfg.duration > 0.0))
        throw std::invalid_argument("duration must be positive");
    double f0 = fastest_resonance_hz(stages);
    if (cfg.dt == 0.0)
        return std::min(1.0 / (100.0 * f0), cfg.duration / 1000.0);
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (cfg.dt > cfg.duration / 1000.0)
        throw std::invalid_argument("dt must be <= duration/1000");
    if (cfg.dt > 1.0 / (50.0 * f0))
        throw std::invalid_argument("dt must be <= 1/(50 f0_max)");
    return cfg.dt;
}

struct PiStep {
    double duty;
    double dq;
};

// PI output with saturation and conditional-integration anti-windup: the
// integrator freezes while the clamp is active and integrating would push
// further into saturation.
PiStep pi_step(const PiGains& g, double err, double q, bool saturate) {
    double raw = g.kp * err + g.ki * q;
    if (!saturate) return {raw, err};
    double duty = clamp01(raw);
    bool deepen = (raw > 1.0 && err > 0.0) || (raw < 0.0 && err < 0.0);
    return {duty, deepen ? 0.0 : err};
}

template <std::size_t N, typename Rhs>
std::array<double, N> rk4_step(const std::array<double, N>& x, double t,
                               double h, const Rhs& rhs) {
    std::array<double, N> k1 = rhs(t, x);
    std::array<double, N> tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
    std::array<double, N> k2 = rhs(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
    std::array<double, N> k3 = rhs(t + 0.5 * h, tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = x[i] + h * k3[i];
    std::array<double, N> k4 = rhs(t + h, tmp);
    std::array<double, N> out;
    for (std::size_t i = 0; i < N; ++i)
        out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

template <std::size_t N>
bool beyond_guard(const std::array<double, N>& x,
                  const std::array<double, N>& scale, double factor) {
    for (std::size_t i = 0; i < N; ++i) {
        if (!std::isfinite(x[i]) || std::abs(x[i]) > factor * scale[i])
            return true;
    }
    return false;
}

template <std::size_t N>
std::array<double, N> initial_state(const SimConfig& cfg,
                                    const std::vector<double>& equilibrium) {
    std::array<double, N> x{};
    switch (cfg.initial_state) {
        case SimConfig::InitialState::equilibrium:
            for (std::size_t i = 0; i < N; ++i) x[i] = equilibrium[i];
            break;
        case SimConfig::InitialState::zero:
            break;
        case SimConfig::InitialState::explicit_values:
            if (cfg.initial_values.size() != N)
                throw std::invalid_argument(
                    "initial_values must match the state dimension");
            for (std::size_t i = 0; i < N; ++i) x[i] = cfg.initial_values[i];
            break;
    }
    return x;
}

}  // namespace

std::vector<double> single_equilibrium(const StageSpec& stage) {
    stage.gains.validate();
    if (!(stage.gains.ki > 0.0))
        throw std::invalid_argument(
            "equilibrium requires ki > 0 (integral action pins v_c = v_ref)");
    OperatingPoint op = operating_point(stage.params, stage.v_ref, stage.i_load_dc);
    return {op.i_l, op.v_c, op.duty / stage.gains.ki};
}

SimTrace simulate_single(const StageSpec& stage, const SimConfig& cfg) {
    stage.params.validate();
    stage.gains.validate();
    std::vector<StageSpec> stages{stage};
    std::vector<StageDrives> drives = build_drives(stages, cfg);
    double dt = resolve_dt(stages, cfg);
    std::vector<double> eq = single_equilibrium(stage);

    double l = stage.params.l;
    double c = stage.params.c;
    double g = stage.params.load_conductance();
    const PiGains& gains = stage.gains;
    bool sat = cfg.saturate_duty;
    const StageDrives& drv = drives[0];

    auto rhs = [&](double t, const std::array<double, 3>& x) {
        double err = drv.v_ref(t) - x[1];
        PiStep pi = pi_step(gains, err, x[2], sat);
        std::array<double, 3> dx;
        dx[0] = (pi.duty * drv.v_in(t) - x[1]) / l;
        dx[1] = (x[0] - g * x[1] - drv.i_load(t)) / c;
        dx[2] = pi.dq;
        return dx;
    };

    std::array<double, 3> scale;
    for (std::size_t i = 0; i < 3; ++i) scale[i] = std::max(1.0, std::abs(eq[i]));
    std::array<double, 3> x = initial_state<3>(cfg, eq);

    SimTrace trace;
    trace.dt = dt;
    trace.stages.resize(1);
    long steps = std::lround(cfg.duration / dt);
    trace.time.reserve(static_cast<std::size_t>(steps) + 1);

    auto record = [&](double t, const std::array<double, 3>& s) {
        double err = drv.v_ref(t) - s[1];
        PiStep pi = pi_step(gains, err, s[2], sat);
        trace.time.push_back(t);
        StageTrace& st = trace.stages[0];
        st.i_l.push_back(s[0]);
        st.v_c.push_back(s[1]);
        st.duty.push_back(pi.duty);
        st.integrator.push_back(s[2]);
        st.i_in.push_back(pi.duty * s[0]);
    };

    record(0.0, x);
    for (long k = 0; k < steps; ++k) {
        double t = static_cast<double>(k) * dt;
        x = rk4_step<3>(x, t, dt, rhs);
        record(static_cast<double>(k + 1) * dt, x);
        if (beyond_guard<3>(x, scale, cfg.divergence_factor)) {
            trace.diverged_early = true;
            break;
        }
    }
    return trace;
}

std::vector<double> cascade_equilibrium(const StageSpec& stage1,
                                        const StageSpec& stage2,
                                        const CascadeSimOptions& options) {
    stage1.gains.validate();
    stage2.gains.validate();
    if (!(stage1.gains.ki > 0.0) || !(stage2.gains.ki > 0.0))
        throw std::invalid_argument(
            "equilibrium requires ki > 0 (integral action pins v_c = v_ref)");

    BuckParams p2 = stage2.params;
    p2.v_in = stage1.v_ref;
    OperatingPoint op2 = operating_point(p2, stage2.v_ref, stage2.i_load_dc);

    BuckParams p1 = stage1.params;
    if (options.source_r_load_open) p1.r_load.reset();
    double i_in2 = op2.duty * op2.i_l;
    OperatingPoint op1 =
        operating_point(p1, stage1.v_ref, stage1.i_load_dc + i_in2);

    return {op1.i_l, op1.v_c, op1.duty / stage1.gains.ki,
            op2.i_l, op2.v_c, op2.duty / stage2.gains.ki};
}

SimTrace simulate_cascade(const StageSpec& stage1, const StageSpec& stage2,
                          const SimConfig& cfg,
                          const CascadeSimOptions& options) {
    stage1.params.validate();
    stage2.params.validate();
    stage1.gains.validate();
    stage2.gains.validate();

    StageSpec s1 = stage1;
    if (options.source_r_load_open) s1.params.r_load.reset();
    std::vector<StageSpec> stages{s1, stage2};
    std::vector<StageDrives> drives = build_drives(stages, cfg);
    double dt = resolve_dt(stages, cfg);
    std::vector<double> eq = cascade_equilibrium(stage1, stage2, options);
    double d2_eq = eq[5] * stage2.gains.ki;

    double l1 = s1.params.l, c1 = s1.params.c, g1 = s1.params.load_conductance();
    double l2 = stage2.params.l, c2 = stage2.params.c;
    double g2 = stage2.params.load_conductance();
    bool sat = cfg.saturate_duty;
    bool paper_coupling = options.coupling == Feedthrough::paper;
    bool freeze2 = options.freeze_stage2_duty;

    struct StageOut {
        PiStep pi1;
        PiStep pi2;
    };
    auto controllers = [&](double t, const std::array<double, 6>& x) {
        StageOut out;
        out.pi1 = pi_step(stage1.gains, drives[0].v_ref(t) - x[1], x[2], sat);
        out.pi2 = pi_step(stage2.gains, drives[1].v_ref(t) - x[4], x[5], sat);
        if (freeze2) out.pi2.duty = d2_eq;
        return out;
    };

    auto rhs = [&](double t, const std::array<double, 6>& x) {
        StageOut c = controllers(t, x);
        // Stage2 input current seen by stage1 as load.
        double factor = paper_coupling ? d2_eq : c.pi2.duty;
        double i_in2 = factor * x[3];
        std::array<double, 6> dx;
        dx[0] = (c.pi1.duty * drives[0].v_in(t) - x[1]) / l1;
        dx[1] = (x[0] - g1 * x[1] - i_in2 - drives[0].i_load(t)) / c1;
        dx[2] = c.pi1.dq;
        dx[3] = (c.pi2.duty * x[1] - x[4]) / l2;
        dx[4] = (x[3] - g2 * x[4] - drives[1].i_load(t)) / c2;
        dx[5] = c.pi2.dq;
        return dx;
    };

    std::array<double, 6> scale;
    for (std::size_t i = 0; i < 6; ++i) scale[i] = std::max(1.0, std::abs(eq[i]));
    std::array<double, 6> x = initial_state<6>(cfg, eq);

    SimTrace trace;
    trace.dt = dt;
    trace.stages.resize(2);
    long steps = std::lround(cfg.duration / dt);
    trace.time.reserve(static_cast<std::size_t>(steps) + 1);

    auto record = [&](double t, const std::array<double, 6>& s) {
        StageOut c = controllers(t, s);
        trace.time.push_back(t);
        trace.stages[0].i_l.push_back(s[0]);
        trace.stages[0].v_c.push_back(s[1]);
        trace.stages[0].duty.push_back(c.pi1.duty);
        trace.stages[0].integrator.push_back(s[2]);
        trace.stages[0].i_in.push_back(c.pi1.duty * s[0]);
        trace.stages[1].i_l.push_back(s[3]);
        trace.stages[1].v_c.push_back(s[4]);
        trace.stages[1].duty.push_back(c.pi2.duty);
        trace.stages[1].integrator.push_back(s[5]);
        trace.stages[1].i_in.push_back(c.pi2.duty * s[3]);
    };

    record(0.0, x);
    for (long k = 0; k < steps; ++k) {
        double t = static_cast<double>(k) * dt;
        x = rk4_step<6>(x, t, dt, rhs);
        record(static_cast<double>(k + 1) * dt, x);
        if (beyond_guard<6>(x, scale, cfg.divergence_factor)) {
            trace.diverged_early = true;
            break;
        }
    }
    return trace;
}

void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << "time_s";
    bool multi = trace.stages.size() > 1;
    for (std::size_t s = 0; s < trace.stages.size(); ++s) {
        if (multi) {
            char suffix[16];
            std::snprintf(suffix, sizeof(suffix), "_%zu", s + 1);
            os << ",i_l_a" << suffix << ",v_c_v" << suffix << ",duty" << suffix
               << ",integ_vs" << suffix << ",i_in_a" << suffix;
        } else {
            os << ",i_l_a,v_c_v,duty,integ_vs,i_in_a";
        }
    }
    os << "\n";
    char buf[64];
    for (std::size_t k = 0; k < trace.time.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%.16e", trace.time[k]);
        os << buf;
        for (const StageTrace& st : trace.stages) {
            const double cols[5] = {st.i_l[k], st.v_c[k], st.duty[k],
                                    st.integrator[k], st.i_in[k]};
            for (double v : cols) {
                std::snprintf(buf, sizeof(buf), ",%.16e", v);
                os << buf;
            }
        }
        os << "\n";
    }
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

const char* to_string(TraceClass c) {
    switch (c) {
        case TraceClass::converged: return "converged";
        case TraceClass::oscillating: return "oscillating";
        case TraceClass::diverged: return "diverged";
    }
    return "unknown";
}

TraceClassification classify_trace(const SimTrace& trace,
                                   const std::vector<double>& x_eq,
                                   double slowest_mode_hz) {
    std::size_t n_states = trace.stages.size() * 3;
    if (x_eq.size() != n_states)
        throw std::invalid_argument("equilibrium size does not match trace");
    if (trace.time.empty())
        throw std::invalid_argument("empty trace");
    double span = trace.time.back() - trace.time.front();
    // An early-terminated divergent trace is short by construction; the
    // span precondition only gates the judgement calls, not that one.
    if (!trace.diverged_early) {
        if (trace.time.size() < 8)
            throw std::invalid_argument("trace too short for classification");
        if (!(slowest_mode_hz > 0.0) || span < 20.0 / slowest_mode_hz)
            throw std::invalid_argument(
                "trace too short: needs >= 20 periods of the slowest mode");
    }

    std::vector<double> scale(n_states);
    for (std::size_t i = 0; i < n_states; ++i)
        scale[i] = std::max(1.0, std::abs(x_eq[i]));

    std::size_t n = trace.time.size();
    std::vector<double> dev(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        double d = 0.0;
        for (std::size_t s = 0; s < trace.stages.size(); ++s) {
            const StageTrace& st = trace.stages[s];
            d = std::max(d, std::abs(st.i_l[k] - x_eq[3 * s]) / scale[3 * s]);
            d = std::max(d, std::abs(st.v_c[k] - x_eq[3 * s + 1]) / scale[3 * s + 1]);
            d = std::max(d,
                         std::abs(st.integrator[k] - x_eq[3 * s + 2]) / scale[3 * s + 2]);
        }
        dev[k] = d;
    }

    const double settle_tol = 0.005;
    TraceClassification out;

    double last_quartile = trace.time.front() + 0.75 * span;
    double final_dev = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (trace.time[k] >= last_quartile) final_dev = std::max(final_dev, dev[k]);
    out.final_deviation = final_dev;

    // Envelope fit: local maxima of the deviation over the last three
    // quartiles, least-squares slope of their logs.
    std::vector<double> pt, pv;
    double fit_start = trace.time.front() + 0.25 * span;
    for (std::size_t k = 1; k + 1 < n; ++k) {
        if (trace.time[k] < fit_start) continue;
        if (dev[k] >= dev[k - 1] && dev[k] >= dev[k + 1] && dev[k] > 0.0) {
            pt.push_back(trace.time[k]);
            pv.push_back(std::log(dev[k]));
        }
    }
    if (pt.size() >= 3) {
        double mt = 0.0, mv = 0.0;
        for (std::size_t k = 0; k < pt.size(); ++k) {
            mt += pt[k];
            mv += pv[k];
        }
        mt /= static_cast<double>(pt.size());
        mv /= static_cast<double>(pt.size());
        double stt = 0.0, stv = 0.0;
        for (std::size_t k = 0; k < pt.size(); ++k) {
            stt += (pt[k] - mt) * (pt[k] - mt);
            stv += (pt[k] - mt) * (pv[k] - mv);
        }
        if (stt > 0.0) out.envelope_growth_rate = stv / stt;
    }

    if (trace.diverged_early) {
        out.verdict = TraceClass::diverged;
        return out;
    }

    if (final_dev < settle_tol) {
        out.verdict = TraceClass::converged;
        double settle = trace.time.front();
        for (std::size_t k = n; k-- > 0;) {
            if (dev[k] >= settle_tol) {
                settle = trace.time[std::min(k + 1, n - 1)];
                break;
            }
        }
        out.settling_time = settle;
        return out;
    }

    // Growth beyond noise: positive slope that at least doubles the
    // envelope across the fit window.
    if (out.envelope_growth_rate && *out.envelope_growth_rate > 0.0 &&
        *out.envelope_growth_rate * 0.75 * span >= std::log(2.0)) {
        out.verdict = TraceClass::diverged;
        return out;
    }
    out.verdict = TraceClass::oscillating;
    return out;
}

}  // namespace buckstab
