#include "buckstab/report.hpp"

#include <cmath>

namespace buckstab {

namespace {

using nlohmann::ordered_json;

ordered_json poles_json(const RootSet& roots) {
    ordered_json out = ordered_json::array();
    for (std::size_t k = 0; k < roots.roots.size(); ++k) {
        ordered_json p;
        p["re"] = roots.roots[k].real();
        p["im"] = roots.roots[k].imag();
        p["multiplicity"] = roots.multiplicities[k];
        out.push_back(p);
    }
    return out;
}

ordered_json margins_json(const Margins& m) {
    ordered_json out;
    out["gain_crossover_hz"] =
        m.gain_crossover_hz ? ordered_json(*m.gain_crossover_hz) : ordered_json();
    out["phase_margin_deg"] =
        m.phase_margin_deg ? ordered_json(*m.phase_margin_deg) : ordered_json();
    out["phase_crossover_hz"] =
        m.phase_crossover_hz ? ordered_json(*m.phase_crossover_hz) : ordered_json();
    out["gain_margin_db"] =
        m.gain_margin_db ? ordered_json(*m.gain_margin_db) : ordered_json();
    return out;
}

ordered_json middlebrook_json(const MiddlebrookResult& m) {
    ordered_json out;
    out["worst_ratio"] = m.worst_ratio;
    out["worst_freq_hz"] = m.worst_freq_hz;
    out["satisfied"] = m.satisfied;
    return out;
}

ordered_json modes_json(const ModesConfig& m) {
    ordered_json out;
    out["feedthrough"] = to_string(m.feedthrough);
    out["cascade_r1"] = m.cascade_r1_open ? "open" : "present";
    out["cascade_vin2"] = m.cascade_vin2_standalone ? "standalone" : "bus";
    out["ideal_source"] = m.ideal_source;
    return out;
}

}  // namespace

StageAnalysis analyze_stage(const StageSpec& spec) {
    StageAnalysis a;
    a.spec = spec;
    a.loop = close_loop(spec);
    a.margins = loop_margins(a.loop.loop_gain);
    return a;
}

ordered_json stage_report(const StageAnalysis& a) {
    ordered_json out;
    out["v_in"] = a.spec.params.v_in;
    out["v_ref"] = a.spec.v_ref;
    ordered_json op;
    op["duty"] = a.loop.op.duty;
    op["i_l_a"] = a.loop.op.i_l;
    op["v_c_v"] = a.loop.op.v_c;
    out["operating_point"] = op;
    out["char_poly_ascending"] = a.loop.char_poly.coeffs();
    out["poles"] = poles_json(a.loop.stability.roots);
    out["verdict"] = to_string(a.loop.stability.verdict);
    out["max_real_part"] = a.loop.stability.max_real_part;
    out["margins"] = margins_json(a.margins);

    // DC diagnostics: open-loop input resistance and the closed-loop
    // limit (negative in physical mode, infinite in paper mode).
    double g = a.spec.params.load_conductance();
    double d = a.loop.op.duty;
    ordered_json dc;
    dc["z_in_ol_ohm"] =
        g > 0.0 ? ordered_json(1.0 / (d * d * g)) : ordered_json("infinite");
    Complex y0 = a.loop.y_in(Complex(0.0, 0.0));
    dc["dc_input_resistance_ohm"] =
        y0 == Complex(0.0, 0.0) ? ordered_json("infinite")
                                : ordered_json(1.0 / y0.real());
    out["dc"] = dc;
    return out;
}

ordered_json single_report(const SystemConfig& cfg,
                           const std::vector<StageAnalysis>& stages) {
    ordered_json out;
    out["command"] = "analyze-single";
    out["modes"] = modes_json(cfg.modes);
    ordered_json arr = ordered_json::array();
    bool all_stable = true;
    for (const StageAnalysis& a : stages) {
        arr.push_back(stage_report(a));
        all_stable = all_stable && a.loop.stability.verdict == Verdict::stable;
    }
    out["stages"] = arr;
    out["verdict"] = all_stable ? "stable" : "unstable";
    return out;
}

ordered_json cascade_report(const SystemConfig& cfg, const CascadeModel& model,
                            const StabilityReport& verdicts,
                            const CascadeModel& other_mode_model,
                            const StabilityReport& other_mode_verdicts) {
    (void)other_mode_model;
    ordered_json out;
    out["command"] = "analyze-cascade";
    out["modes"] = modes_json(cfg.modes);

    ordered_json stages = ordered_json::array();
    stages.push_back(stage_report(analyze_stage(model.stage1_standalone)));
    stages.push_back(stage_report(analyze_stage(model.stage2_standalone)));
    out["standalone_stages"] = stages;

    ordered_json cas;
    ordered_json bus;
    bus["v_bus_v"] = model.stage1.v_ref;
    bus["stage2_duty"] = model.loop2.op.duty;
    bus["stage2_i_in_a"] = model.loop2.op.duty * model.loop2.op.i_l;
    cas["operating_point"] = bus;
    cas["cascade_char_ascending"] = model.cascade_char.coeffs();
    StabilityResult exact = hurwitz_stable(model.cascade_char);
    cas["poles"] = poles_json(exact.roots);
    cas["exact_verdict"] = to_string(verdicts.exact_verdict);
    cas["max_real_part"] = verdicts.max_real_part;
    cas["middlebrook"] = middlebrook_json(verdicts.middlebrook);
    cas["nyquist_winding"] = verdicts.nyquist_winding;
    cas["minor_loop_rhp_poles"] = verdicts.minor_loop_rhp_poles;
    cas["argument_principle_consistent"] = verdicts.argument_principle_consistent;
    out["cascade"] = cas;

    ordered_json other;
    other["feedthrough"] =
        cfg.modes.feedthrough == Feedthrough::physical ? "paper" : "physical";
    other["exact_verdict"] = to_string(other_mode_verdicts.exact_verdict);
    other["middlebrook"] = middlebrook_json(other_mode_verdicts.middlebrook);
    out["other_feedthrough_mode"] = other;
    out["modes_disagree"] =
        verdicts.exact_verdict != other_mode_verdicts.exact_verdict;

    out["verdict"] = to_string(verdicts.exact_verdict);
    return out;
}

ordered_json simulation_report(const SimTrace& trace,
                               const TraceClassification& cls) {
    ordered_json out;
    out["command"] = "simulate";
    out["verdict"] = to_string(cls.verdict);
    out["settling_time_s"] =
        cls.settling_time ? ordered_json(*cls.settling_time) : ordered_json();
    out["envelope_growth_rate_per_s"] = cls.envelope_growth_rate
                                            ? ordered_json(*cls.envelope_growth_rate)
                                            : ordered_json();
    out["final_deviation"] = cls.final_deviation;
    out["dt_s"] = trace.dt;
    out["end_time_s"] = trace.time.empty() ? 0.0 : trace.time.back();
    out["diverged_early"] = trace.diverged_early;
    out["samples"] = trace.time.size();
    return out;
}

std::string render_report(const nlohmann::ordered_json& j) {
    return j.dump(2) + "\n";
}

}  // namespace buckstab
