#include "buckstab/config.hpp"

#include <fstream>

namespace buckstab {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

double require_number(const json& j, const std::string& path,
                      const std::string& key) {
    if (!j.contains(key)) fail(path + "." + key, "missing required field");
    const json& v = j.at(key);
    if (!v.is_number()) fail(path + "." + key, "must be a number");
    return v.get<double>();
}

double require_positive(const json& j, const std::string& path,
                        const std::string& key) {
    double v = require_number(j, path, key);
    if (!(v > 0.0)) fail(path + "." + key, "must be positive");
    return v;
}

StageConfig parse_stage(const json& j, const std::string& path) {
    if (!j.is_object()) fail(path, "must be an object");
    StageConfig s;

    if (!j.contains("v_in")) fail(path + ".v_in", "missing required field");
    const json& vin = j.at("v_in");
    if (vin.is_string()) {
        if (vin.get<std::string>() != "from-previous")
            fail(path + ".v_in", "must be a positive number or \"from-previous\"");
    } else if (vin.is_number() && vin.get<double>() > 0.0) {
        s.v_in = vin.get<double>();
    } else {
        fail(path + ".v_in", "must be a positive number or \"from-previous\"");
    }

    s.l = require_positive(j, path, "l");
    s.c = require_positive(j, path, "c");

    if (!j.contains("r_load")) fail(path + ".r_load", "missing required field");
    const json& r = j.at("r_load");
    if (r.is_string()) {
        if (r.get<std::string>() != "open")
            fail(path + ".r_load", "must be a positive number or \"open\"");
    } else if (r.is_number() && r.get<double>() > 0.0) {
        s.r_load = r.get<double>();
    } else {
        fail(path + ".r_load", "must be a positive number or \"open\"");
    }

    s.v_ref = require_positive(j, path, "v_ref");
    s.kp = require_number(j, path, "kp");
    s.ki = require_number(j, path, "ki");
    if (s.kp < 0.0) fail(path + ".kp", "must be >= 0");
    if (s.ki < 0.0) fail(path + ".ki", "must be >= 0");
    if (s.kp == 0.0 && s.ki == 0.0)
        fail(path + ".kp", "kp and ki cannot both be zero");
    return s;
}

SimEvent::Kind parse_event_kind(const json& v, const std::string& path) {
    if (v.is_string()) {
        std::string k = v.get<std::string>();
        if (k == "reference_step") return SimEvent::Kind::reference_step;
        if (k == "input_step") return SimEvent::Kind::input_step;
        if (k == "load_step") return SimEvent::Kind::load_step;
    }
    fail(path, "must be one of reference_step, input_step, load_step");
}

void parse_sim(const json& j, const std::string& path, SimConfig& sim) {
    if (!j.is_object()) fail(path, "must be an object");
    if (j.contains("duration")) sim.duration = require_positive(j, path, "duration");
    if (j.contains("dt")) {
        sim.dt = require_number(j, path, "dt");
        if (sim.dt < 0.0) fail(path + ".dt", "must be >= 0 (0 selects the default)");
    }
    if (j.contains("saturate_duty")) {
        if (!j.at("saturate_duty").is_boolean())
            fail(path + ".saturate_duty", "must be a boolean");
        sim.saturate_duty = j.at("saturate_duty").get<bool>();
    }
    if (j.contains("initial_state")) {
        const json& st = j.at("initial_state");
        if (st.is_string() && st.get<std::string>() == "equilibrium") {
            sim.initial_state = SimConfig::InitialState::equilibrium;
        } else if (st.is_string() && st.get<std::string>() == "zero") {
            sim.initial_state = SimConfig::InitialState::zero;
        } else if (st.is_array()) {
            sim.initial_state = SimConfig::InitialState::explicit_values;
            for (const json& v : st) {
                if (!v.is_number())
                    fail(path + ".initial_state", "array entries must be numbers");
                sim.initial_values.push_back(v.get<double>());
            }
        } else {
            fail(path + ".initial_state",
                 "must be \"equilibrium\", \"zero\", or an array of numbers");
        }
    }
    if (j.contains("events")) {
        const json& ev = j.at("events");
        if (!ev.is_array()) fail(path + ".events", "must be an array");
        for (std::size_t k = 0; k < ev.size(); ++k) {
            std::string epath = path + ".events[" + std::to_string(k) + "]";
            const json& e = ev.at(k);
            if (!e.is_object()) fail(epath, "must be an object");
            SimEvent event;
            event.time = require_number(e, epath, "time");
            if (event.time < 0.0) fail(epath + ".time", "must be >= 0");
            if (!e.contains("kind")) fail(epath + ".kind", "missing required field");
            event.kind = parse_event_kind(e.at("kind"), epath + ".kind");
            event.magnitude = require_number(e, epath, "magnitude");
            if (e.contains("stage")) {
                if (!e.at("stage").is_number_integer())
                    fail(epath + ".stage", "must be an integer (1-based)");
                int s = e.at("stage").get<int>();
                if (s < 1) fail(epath + ".stage", "must be >= 1");
                event.stage = s - 1;
            }
            sim.events.push_back(event);
        }
    }
}

void parse_modes(const json& j, const std::string& path, ModesConfig& modes) {
    if (!j.is_object()) fail(path, "must be an object");
    if (j.contains("feedthrough")) {
        const json& v = j.at("feedthrough");
        if (v.is_string() && v.get<std::string>() == "physical")
            modes.feedthrough = Feedthrough::physical;
        else if (v.is_string() && v.get<std::string>() == "paper")
            modes.feedthrough = Feedthrough::paper;
        else
            fail(path + ".feedthrough", "must be \"paper\" or \"physical\"");
    }
    if (j.contains("cascade_r1")) {
        const json& v = j.at("cascade_r1");
        if (v.is_string() && v.get<std::string>() == "open")
            modes.cascade_r1_open = true;
        else if (v.is_string() && v.get<std::string>() == "present")
            modes.cascade_r1_open = false;
        else
            fail(path + ".cascade_r1", "must be \"open\" or \"present\"");
    }
    if (j.contains("cascade_vin2")) {
        const json& v = j.at("cascade_vin2");
        if (v.is_string() && v.get<std::string>() == "bus")
            modes.cascade_vin2_standalone = false;
        else if (v.is_string() && v.get<std::string>() == "standalone")
            modes.cascade_vin2_standalone = true;
        else
            fail(path + ".cascade_vin2", "must be \"bus\" or \"standalone\"");
    }
    if (j.contains("ideal_source")) {
        if (!j.at("ideal_source").is_boolean())
            fail(path + ".ideal_source", "must be a boolean");
        modes.ideal_source = j.at("ideal_source").get<bool>();
    }
}

}  // namespace

SystemConfig parse_config_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: root must be an object");
    SystemConfig cfg;

    if (!j.contains("stages")) throw ConfigError("stages: missing required field");
    const json& stages = j.at("stages");
    if (!stages.is_array() || stages.empty() || stages.size() > 2)
        throw ConfigError("stages: must be an array of 1 or 2 stages");
    for (std::size_t k = 0; k < stages.size(); ++k)
        cfg.stages.push_back(
            parse_stage(stages.at(k), "stages[" + std::to_string(k) + "]"));

    if (!cfg.stages[0].v_in)
        throw ConfigError("stages[0].v_in: the source stage needs a number");

    if (j.contains("modes")) parse_modes(j.at("modes"), "modes", cfg.modes);
    if (j.contains("sweep")) {
        const json& sw = j.at("sweep");
        if (!sw.is_object()) throw ConfigError("sweep: must be an object");
        if (sw.contains("f_min_hz"))
            cfg.sweep.f_min_hz = require_positive(sw, "sweep", "f_min_hz");
        if (sw.contains("f_max_hz"))
            cfg.sweep.f_max_hz = require_positive(sw, "sweep", "f_max_hz");
        if (sw.contains("points_per_decade")) {
            double v = require_positive(sw, "sweep", "points_per_decade");
            cfg.sweep.points_per_decade = static_cast<int>(v);
        }
        if (!(cfg.sweep.f_min_hz < cfg.sweep.f_max_hz))
            throw ConfigError("sweep.f_min_hz: must be below f_max_hz");
        if (cfg.sweep.points_per_decade < 10)
            throw ConfigError("sweep.points_per_decade: must be >= 10");
    }
    if (j.contains("sim")) parse_sim(j.at("sim"), "sim", cfg.sim);

    // Physical validity: every stage must be able to regulate below its
    // (resolved) source.
    for (std::size_t k = 0; k < cfg.stages.size(); ++k) {
        double vin = resolved_v_in(cfg, k);
        if (!(cfg.stages[k].v_ref < vin))
            throw ConfigError("stages[" + std::to_string(k) +
                              "].v_ref: must be below v_in; a buck cannot step up");
    }
    return cfg;
}

SystemConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config is not well-formed JSON: " +
                          std::string(e.what()));
    }
    return parse_config_json(j);
}

double resolved_v_in(const SystemConfig& cfg, std::size_t index) {
    const StageConfig& s = cfg.stages.at(index);
    if (s.v_in) return *s.v_in;
    // Validation guarantees index > 0 here.
    return cfg.stages.at(index - 1).v_ref;
}

StageSpec stage_spec(const SystemConfig& cfg, std::size_t index) {
    const StageConfig& s = cfg.stages.at(index);
    StageSpec spec;
    spec.params.v_in = resolved_v_in(cfg, index);
    spec.params.l = s.l;
    spec.params.c = s.c;
    spec.params.r_load = s.r_load;
    spec.v_ref = s.v_ref;
    spec.gains.kp = s.kp;
    spec.gains.ki = s.ki;
    spec.feedthrough = cfg.modes.feedthrough;
    return spec;
}

CascadeOptions cascade_options(const SystemConfig& cfg) {
    CascadeOptions opt;
    opt.source_r_load_open = cfg.modes.cascade_r1_open;
    opt.ideal_source = cfg.modes.ideal_source;
    opt.standalone_vin2 = cfg.modes.cascade_vin2_standalone;
    return opt;
}

CascadeSimOptions cascade_sim_options(const SystemConfig& cfg) {
    CascadeSimOptions opt;
    opt.source_r_load_open = cfg.modes.cascade_r1_open;
    opt.coupling = cfg.modes.feedthrough;
    return opt;
}

}  // namespace buckstab
