#include "buckstab/report.hpp"

#include "helpers.hpp"

#include <doctest.h>

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <string>

using namespace buckstab;
using namespace buckstab::test;
using nlohmann::json;

namespace {

double slowest_mode_hz(const Polynomial& char_poly) {
    RootSet roots = poly_roots(char_poly);
    double w = std::abs(roots.roots.front());
    for (const Complex& r : roots.roots) w = std::min(w, std::abs(r));
    return w / (2.0 * std::numbers::pi);
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("stage report carries the analysis verbatim") {
    StageAnalysis a = analyze_stage(source_stage());
    json j = json::parse(render_report(stage_report(a)));

    CHECK(j["v_in"] == 100.0);
    CHECK(j["v_ref"] == 50.0);
    CHECK(j["operating_point"]["duty"] == 0.5);
    CHECK(j["operating_point"]["i_l_a"] == 10.0);
    CHECK(j["operating_point"]["v_c_v"] == 50.0);

    REQUIRE(j["char_poly_ascending"].size() == 4);
    for (int k = 0; k < 4; ++k)
        CHECK(j["char_poly_ascending"][k] == a.loop.char_poly.coeff(k));

    REQUIRE(j["poles"].size() == 3);
    for (const auto& p : j["poles"]) {
        CHECK(p.contains("re"));
        CHECK(p.contains("im"));
        CHECK(p["multiplicity"] == 1);
        CHECK(p["re"].get<double>() < 0.0);
    }

    CHECK(j["verdict"] == "stable");
    CHECK(j["max_real_part"].get<double>() < 0.0);

    CHECK(std::abs(j["margins"]["gain_crossover_hz"].get<double>() - 5695.08) <
          1.0);
    CHECK(std::abs(j["margins"]["phase_margin_deg"].get<double>() - 59.994) <
          0.05);
    CHECK(j["margins"]["phase_crossover_hz"].is_null());
    CHECK(j["margins"]["gain_margin_db"].is_null());
}

TEST_CASE("dc figures by feedthrough mode") {
    json physical =
        json::parse(render_report(stage_report(analyze_stage(source_stage()))));
    CHECK(std::abs(physical["dc"]["z_in_ol_ohm"].get<double>() - 20.0) < 1e-9);
    CHECK(std::abs(physical["dc"]["dc_input_resistance_ohm"].get<double>() +
                   20.0) < 1e-9);

    json paper = json::parse(render_report(
        stage_report(analyze_stage(source_stage(Feedthrough::paper)))));
    CHECK(paper["dc"]["dc_input_resistance_ohm"] == "infinite");

    json load = json::parse(
        render_report(stage_report(analyze_stage(load_stage()))));
    CHECK(std::abs(load["dc"]["dc_input_resistance_ohm"].get<double>() + 3.2) <
          1e-9);

    StageSpec open = source_stage();
    open.params.r_load.reset();
    json no_load =
        json::parse(render_report(stage_report(analyze_stage(open))));
    CHECK(no_load["dc"]["z_in_ol_ohm"] == "infinite");
}

TEST_CASE("single-system report") {
    json cfg_json = json::parse(R"({
        "stages": [
            {"v_in": 100.0, "l": 1.67e-4, "c": 3.75e-6, "r_load": 5.0,
             "v_ref": 50.0, "kp": 0.0093602, "ki": 275.3},
            {"v_in": "from-previous", "l": 3.0e-6, "c": 2.344e-5,
             "r_load": 0.8, "v_ref": 25.0, "kp": 0.01956, "ki": 537.4}
        ]
    })");
    SystemConfig cfg = parse_config_json(cfg_json);
    std::vector<StageAnalysis> stages = {analyze_stage(stage_spec(cfg, 0)),
                                         analyze_stage(stage_spec(cfg, 1))};
    json j = json::parse(render_report(single_report(cfg, stages)));

    CHECK(j["command"] == "analyze-single");
    CHECK(j["modes"]["feedthrough"] == "physical");
    REQUIRE(j["stages"].size() == 2);
    CHECK(j["stages"][0]["v_in"] == 100.0);
    CHECK(j["stages"][1]["v_in"] == 50.0);
    CHECK(j["verdict"] == "stable");
}

TEST_CASE("cascade report flags the mode disagreement") {
    json cfg_json = json::parse(R"({
        "stages": [
            {"v_in": 100.0, "l": 1.67e-4, "c": 3.75e-6, "r_load": 5.0,
             "v_ref": 50.0, "kp": 0.0093602, "ki": 275.3},
            {"v_in": "from-previous", "l": 3.0e-6, "c": 2.344e-5,
             "r_load": 0.8, "v_ref": 25.0, "kp": 0.01956, "ki": 537.4}
        ]
    })");
    SystemConfig cfg = parse_config_json(cfg_json);
    CascadeModel model =
        build_cascade(stage_spec(cfg, 0), stage_spec(cfg, 1),
                      cascade_options(cfg));
    StabilityReport verdicts = exact_cascade_verdict(model);

    StageSpec s1 = stage_spec(cfg, 0);
    StageSpec s2 = stage_spec(cfg, 1);
    s1.feedthrough = Feedthrough::paper;
    s2.feedthrough = Feedthrough::paper;
    CascadeModel other = build_cascade(s1, s2, cascade_options(cfg));
    StabilityReport other_verdicts = exact_cascade_verdict(other);

    json j = json::parse(
        render_report(cascade_report(cfg, model, verdicts, other,
                                     other_verdicts)));

    CHECK(j["command"] == "analyze-cascade");
    CHECK(j["modes"]["feedthrough"] == "physical");
    CHECK(j["modes"]["cascade_r1"] == "open");
    CHECK(j["modes"]["cascade_vin2"] == "bus");
    CHECK(j["modes"]["ideal_source"] == false);

    REQUIRE(j["standalone_stages"].size() == 2);
    CHECK(j["standalone_stages"][0]["verdict"] == "stable");
    CHECK(j["standalone_stages"][1]["verdict"] == "stable");

    const json& c = j["cascade"];
    CHECK(c["operating_point"]["v_bus_v"] == 50.0);
    CHECK(c["operating_point"]["stage2_duty"] == 0.5);
    CHECK(std::abs(c["operating_point"]["stage2_i_in_a"].get<double>() -
                   15.625) < 1e-9);
    CHECK(c["cascade_char_ascending"].size() == 7);
    CHECK(c["poles"].size() >= 5);
    CHECK(c["exact_verdict"] == "unstable");
    CHECK(c["max_real_part"].get<double>() > 0.0);
    CHECK(c["middlebrook"]["worst_ratio"].get<double>() > 1.0);
    CHECK(c["middlebrook"]["satisfied"] == false);
    // Stage one runs loadless inside the cascade, so its own closed loop
    // is unstable and the instability enters through the minor-loop poles
    // rather than as net encirclements: Z = N + P must still cover every
    // right-half-plane cascade pole.
    int rhp_cascade_poles = 0;
    for (const json& p : c["poles"])
        if (p["re"].get<double>() > 0.0)
            rhp_cascade_poles += p["multiplicity"].get<int>();
    CHECK(c["minor_loop_rhp_poles"] == 2);
    CHECK(c["nyquist_winding"].get<int>() +
              c["minor_loop_rhp_poles"].get<int>() ==
          rhp_cascade_poles);
    CHECK(c["argument_principle_consistent"] == true);

    CHECK(j["other_feedthrough_mode"]["feedthrough"] == "paper");
    CHECK(j["other_feedthrough_mode"]["exact_verdict"] == "stable");
    CHECK(j["modes_disagree"] == true);
    CHECK(j["verdict"] == "unstable");
}

TEST_CASE("simulation report") {
    StageSpec stage = source_stage();
    SimConfig cfg;
    cfg.duration = 0.02;
    SimTrace trace = simulate_single(stage, cfg);
    TraceClassification cls =
        classify_trace(trace, single_equilibrium(stage),
                       slowest_mode_hz(close_loop(stage).char_poly));
    json j = json::parse(render_report(simulation_report(trace, cls)));

    CHECK(j["command"] == "simulate");
    CHECK(j["verdict"] == "converged");
    CHECK(j["settling_time_s"] == 0.0);
    CHECK(j["dt_s"].get<double>() > 0.0);
    CHECK(std::abs(j["end_time_s"].get<double>() - 0.02) < 1e-6);
    CHECK(j["diverged_early"] == false);
    CHECK(j["samples"].get<long>() ==
          static_cast<long>(trace.time.size()));
}

TEST_CASE("rendered reports are deterministic and newline-terminated") {
    StageAnalysis a = analyze_stage(load_stage());
    std::string r1 = render_report(stage_report(a));
    std::string r2 = render_report(stage_report(a));
    CHECK(r1 == r2);
    REQUIRE(!r1.empty());
    CHECK(r1.back() == '\n');
}

}  // TEST_SUITE
