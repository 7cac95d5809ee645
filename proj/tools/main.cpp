#include "buckstab/freqresp.hpp"
#include "buckstab/report.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

using namespace buckstab;

const std::vector<std::string> kStageQuantities = {
    "gvg_ol", "gvg_cl", "zin_ol", "zin_cl", "zout_ol", "zout_cl"};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << text;
}

/// Slowest natural frequency of a pole set, in hertz. Sets the span a
/// trace must cover before classification is meaningful.
double slowest_mode_hz(const RootSet& roots) {
    double w = 0.0;
    for (const Complex& r : roots.roots) {
        double m = std::abs(r);
        if (m > 0.0 && (w == 0.0 || m < w)) w = m;
    }
    if (w == 0.0) throw std::runtime_error("pole set has no finite mode");
    return w / (2.0 * std::numbers::pi);
}

/// The quantity named on the command line, from one stage's models.
RationalFunction stage_quantity(const std::string& name,
                                const StageAnalysis& a) {
    BuckSmallSignal open(a.spec.params,
                         operating_point(a.spec.params, a.spec.v_ref,
                                         a.spec.i_load_dc),
                         a.spec.feedthrough);
    double d = open.op().duty;
    if (name == "gvg_ol")
        return open.transfer(BuckOutput::capacitor_voltage,
                             BuckInput::input_voltage);
    if (name == "gvg_cl") return a.loop.g_vg;
    if (name == "zin_ol") {
        RationalFunction y =
            d * open.transfer(BuckOutput::inductor_current,
                              BuckInput::input_voltage);
        return y.reciprocal();
    }
    if (name == "zin_cl") return a.loop.y_in.reciprocal();
    if (name == "zout_ol")
        return -open.transfer(BuckOutput::capacitor_voltage,
                              BuckInput::load_current);
    if (name == "zout_cl") return a.loop.z_out;
    throw std::runtime_error("unknown bode quantity: " + name);
}

int run_analyze_single(const SystemConfig& cfg, const fs::path& out) {
    std::vector<StageAnalysis> stages;
    for (std::size_t k = 0; k < cfg.stages.size(); ++k)
        stages.push_back(analyze_stage(stage_spec(cfg, k)));
    nlohmann::ordered_json report = single_report(cfg, stages);
    std::string text = render_report(report);
    write_text(out / "report.json", text);
    std::cout << text;
    for (const StageAnalysis& a : stages)
        if (a.loop.stability.verdict != Verdict::stable) return 2;
    return 0;
}

int run_analyze_cascade(const SystemConfig& cfg, const fs::path& out) {
    if (cfg.stages.size() != 2)
        throw ConfigError("analyze-cascade requires 2 stages");
    StageSpec s1 = stage_spec(cfg, 0);
    StageSpec s2 = stage_spec(cfg, 1);
    CascadeOptions opt = cascade_options(cfg);

    CascadeModel model = build_cascade(s1, s2, opt);
    StabilityReport verdicts = exact_cascade_verdict(model);

    Feedthrough other = cfg.modes.feedthrough == Feedthrough::physical
                            ? Feedthrough::paper
                            : Feedthrough::physical;
    StageSpec o1 = s1;
    StageSpec o2 = s2;
    o1.feedthrough = other;
    o2.feedthrough = other;
    CascadeModel other_model = build_cascade(o1, o2, opt);
    StabilityReport other_verdicts = exact_cascade_verdict(other_model);

    nlohmann::ordered_json report =
        cascade_report(cfg, model, verdicts, other_model, other_verdicts);
    std::string text = render_report(report);
    write_text(out / "report.json", text);
    std::cout << text;
    return verdicts.exact_verdict == Verdict::stable ? 0 : 2;
}

int run_bode(const SystemConfig& cfg, const fs::path& out,
             std::vector<std::string> quantities) {
    bool cascade = cfg.stages.size() == 2;
    if (quantities.empty()) {
        quantities = kStageQuantities;
        if (cascade) quantities.push_back("minor_loop");
    }

    std::vector<StageAnalysis> stages;
    for (std::size_t k = 0; k < cfg.stages.size(); ++k)
        stages.push_back(analyze_stage(stage_spec(cfg, k)));

    const SweepConfig& sw = cfg.sweep;
    for (const std::string& q : quantities) {
        if (q == "minor_loop") {
            if (!cascade)
                throw std::runtime_error(
                    "minor_loop requires a 2-stage config");
            CascadeModel model = build_cascade(stage_spec(cfg, 0),
                                               stage_spec(cfg, 1),
                                               cascade_options(cfg));
            FrequencyResponse resp = sweep(model.minor_loop, sw.f_min_hz,
                                           sw.f_max_hz, sw.points_per_decade);
            std::ostringstream os;
            write_csv(os, resp);
            write_text(out / "minor_loop.csv", os.str());
            continue;
        }
        for (std::size_t k = 0; k < stages.size(); ++k) {
            RationalFunction rf = stage_quantity(q, stages[k]);
            FrequencyResponse resp =
                sweep(rf, sw.f_min_hz, sw.f_max_hz, sw.points_per_decade);
            std::string name =
                cascade ? q + "_" + std::to_string(k + 1) : q;
            std::ostringstream os;
            write_csv(os, resp);
            write_text(out / (name + ".csv"), os.str());
        }
    }
    return 0;
}

int run_simulate(const SystemConfig& cfg, const fs::path& out,
                 double duration, double dt) {
    SimConfig sim = cfg.sim;
    if (duration > 0.0) sim.duration = duration;
    if (dt > 0.0) sim.dt = dt;

    SimTrace trace;
    std::vector<double> x_eq;
    double f_slow = 0.0;
    if (cfg.stages.size() == 1) {
        StageSpec spec = stage_spec(cfg, 0);
        trace = simulate_single(spec, sim);
        x_eq = single_equilibrium(spec);
        f_slow = slowest_mode_hz(close_loop(spec).stability.roots);
    } else {
        StageSpec s1 = stage_spec(cfg, 0);
        StageSpec s2 = stage_spec(cfg, 1);
        CascadeSimOptions opt = cascade_sim_options(cfg);
        trace = simulate_cascade(s1, s2, sim, opt);
        x_eq = cascade_equilibrium(s1, s2, opt);
        CascadeModel model =
            build_cascade(s1, s2, cascade_options(cfg));
        f_slow = slowest_mode_hz(poly_roots(model.cascade_char));
    }

    TraceClassification cls = classify_trace(trace, x_eq, f_slow);

    std::ostringstream os;
    write_trace_csv(os, trace);
    write_text(out / "trace.csv", os.str());
    nlohmann::ordered_json report = simulation_report(trace, cls);
    std::string text = render_report(report);
    write_text(out / "classification.json", text);
    std::cout << text;
    return cls.verdict == TraceClass::converged ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability analysis of PI-controlled buck converters"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = ".";
    std::string mode;
    std::vector<std::string> quantities;
    double duration = 0.0;
    double dt = 0.0;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config_path, "system config (JSON)")
            ->required();
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--mode", mode, "feedthrough mode override")
            ->check(CLI::IsMember({"paper", "physical"}));
    };

    CLI::App* single =
        app.add_subcommand("analyze-single", "closed-loop analysis per stage");
    add_common(single);
    CLI::App* cascade = app.add_subcommand(
        "analyze-cascade", "minor-loop and exact cascade stability");
    add_common(cascade);
    CLI::App* bode =
        app.add_subcommand("bode", "frequency-response CSV export");
    add_common(bode);
    bode->add_option("--quantity", quantities,
                     "gvg_ol, gvg_cl, zin_ol, zin_cl, zout_ol, zout_cl, "
                     "minor_loop (default: all that apply)");
    CLI::App* simulate =
        app.add_subcommand("simulate", "nonlinear averaged time simulation");
    add_common(simulate);
    simulate->add_option("--duration", duration, "simulated seconds");
    simulate->add_option("--dt", dt, "fixed step in seconds");

    CLI11_PARSE(app, argc, argv);

    try {
        SystemConfig cfg = parse_config(config_path);
        if (!mode.empty())
            cfg.modes.feedthrough = mode == "paper" ? Feedthrough::paper
                                                    : Feedthrough::physical;
        fs::path out(out_dir);
        fs::create_directories(out);
        if (single->parsed()) return run_analyze_single(cfg, out);
        if (cascade->parsed()) return run_analyze_cascade(cfg, out);
        if (bode->parsed()) return run_bode(cfg, out, quantities);
        return run_simulate(cfg, out, duration, dt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
