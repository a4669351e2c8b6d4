#include "stirsap/config_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "stirsap/errors.hpp"

namespace stirsap {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
    }
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::vector<double> get_vector(const json& obj, const std::string& key) {
    try {
        return obj.at(key).get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

TransmonSpec parse_transmon(const json& obj) {
    require_keys(obj, "transmon",
                 {"level_count", "level_freqs", "t1_times", "tphi_times", "thermal_pop1"});
    TransmonSpec spec = TransmonSpec::default_spec();
    spec.level_count = get_or(obj, "level_count", spec.level_count);
    if (obj.contains("level_freqs")) spec.level_freqs = get_vector(obj, "level_freqs");
    if (obj.contains("t1_times") && !obj.at("t1_times").is_null())
        spec.t1_times = get_vector(obj, "t1_times");
    if (obj.contains("tphi_times") && !obj.at("tphi_times").is_null())
        spec.tphi_times = get_vector(obj, "tphi_times");
    spec.thermal_pop1 = get_or(obj, "thermal_pop1", spec.thermal_pop1);
    return spec;
}

Protocol parse_protocol(const std::string& name) {
    if (name == "stirap") return Protocol::STIRAP;
    if (name == "stirsap") return Protocol::STIRSAP;
    if (name == "stirsap_opt") return Protocol::STIRSAP_OPT;
    throw ConfigError("protocol: expected stirap|stirsap|stirsap_opt, got '" + name + "'");
}

GaussianStirapParams parse_pulse(const json& obj) {
    require_keys(obj, "pulse",
                 {"omega0", "total_time", "delta_tau", "sigma", "ordering", "sample_step"});
    GaussianStirapParams p;
    if (!obj.contains("omega0") || !obj.contains("total_time"))
        throw ConfigError("pulse: omega0 and total_time are required");
    p.omega0 = obj.at("omega0").get<double>();
    p.total_time = obj.at("total_time").get<double>();
    p.delta_tau = get_or(obj, "delta_tau", 0.0);
    p.sigma = get_or(obj, "sigma", 0.0);
    const std::string ord = get_or<std::string>(obj, "ordering", "s_first");
    if (ord == "s_first") p.ordering = PulseOrdering::S_FIRST;
    else if (ord == "p_first") p.ordering = PulseOrdering::P_FIRST;
    else throw ConfigError("pulse.ordering: expected s_first|p_first");
    p.sample_step = get_or(obj, "sample_step", p.sample_step);
    return p;
}

ControlParams parse_control(const json& obj) {
    require_keys(obj, "control", {"alpha_p", "alpha_s", "beta_p", "beta_s"});
    ControlParams c;
    c.alpha_p = get_or(obj, "alpha_p", 1.0);
    c.alpha_s = get_or(obj, "alpha_s", 1.0);
    c.beta_p = get_or(obj, "beta_p", 0.0);
    c.beta_s = get_or(obj, "beta_s", 0.0);
    return c;
}

PropagationConfig parse_propagation(const json& obj) {
    require_keys(obj, "propagation",
                 {"frame", "dt", "method", "record_stride", "record_snapshots"});
    PropagationConfig p;
    const std::string frame = get_or<std::string>(obj, "frame", "rotating");
    if (frame == "lab") p.frame = Frame::LAB;
    else if (frame == "rotating") p.frame = Frame::ROTATING;
    else throw ConfigError("propagation.frame: expected lab|rotating");
    p.dt = get_or(obj, "dt", 0.0);
    const std::string method = get_or<std::string>(obj, "method", "piecewise_exponential");
    if (method == "piecewise_exponential") p.method = Method::PIECEWISE_EXPONENTIAL;
    else if (method == "rk4") p.method = Method::RK4;
    else throw ConfigError("propagation.method: expected piecewise_exponential|rk4");
    p.record_stride = get_or(obj, "record_stride", 50);
    p.record_snapshots = get_or(obj, "record_snapshots", false);
    return p;
}

OptimizerSettings parse_optimizer(const json& obj) {
    require_keys(obj, "optimizer",
                 {"population", "initial_step", "alpha_bounds", "beta_bounds",
                  "max_evaluations", "target_cost", "seed", "eval_dt"});
    OptimizerSettings o;
    o.population = get_or(obj, "population", 0);
    o.initial_step = get_or(obj, "initial_step", 0.0);
    if (obj.contains("alpha_bounds")) {
        auto b = get_vector(obj, "alpha_bounds");
        if (b.size() != 2) throw ConfigError("optimizer.alpha_bounds: expected [lo, hi]");
        o.alpha_lo = b[0];
        o.alpha_hi = b[1];
    }
    if (obj.contains("beta_bounds")) {
        auto b = get_vector(obj, "beta_bounds");
        if (b.size() != 2) throw ConfigError("optimizer.beta_bounds: expected [lo, hi]");
        o.beta_lo = b[0];
        o.beta_hi = b[1];
    }
    o.max_evaluations = get_or<long>(obj, "max_evaluations", 2000);
    if (obj.contains("target_cost") && !obj.at("target_cost").is_null())
        o.target_cost = obj.at("target_cost").get<double>();
    o.seed = get_or<std::uint64_t>(obj, "seed", 0);
    o.eval_dt = get_or(obj, "eval_dt", 0.0);
    return o;
}

ScanSettings parse_scan(const json& obj) {
    require_keys(obj, "scan",
                 {"times", "time_start", "time_stop", "time_step", "eta_span", "eta_points",
                  "delta_span", "delta_points", "eta_values", "delta_values"});
    ScanSettings s;
    if (obj.contains("times")) s.times = get_vector(obj, "times");
    if (obj.contains("time_start") || obj.contains("time_stop") || obj.contains("time_step")) {
        if (!obj.contains("time_start") || !obj.contains("time_stop") || !obj.contains("time_step"))
            throw ConfigError("scan: time range needs time_start, time_stop and time_step");
        const double start = obj.at("time_start").get<double>();
        const double stop = obj.at("time_stop").get<double>();
        const double step = obj.at("time_step").get<double>();
        if (!(step > 0.0) || stop < start) throw ConfigError("scan: invalid time range");
        for (double t = start; t <= stop + 1e-9; t += step) s.times.push_back(t);
    }
    s.eta_span = get_or(obj, "eta_span", s.eta_span);
    s.eta_points = get_or(obj, "eta_points", s.eta_points);
    s.delta_span = get_or(obj, "delta_span", s.delta_span);
    s.delta_points = get_or(obj, "delta_points", s.delta_points);
    if (obj.contains("eta_values")) s.eta_values = get_vector(obj, "eta_values");
    if (obj.contains("delta_values")) s.delta_values = get_vector(obj, "delta_values");
    return s;
}

} // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    require_keys(doc, "config",
                 {"seed", "output_dir", "protocol", "decoherence_enabled", "threads", "transmon",
                  "pulse", "control", "propagation", "optimizer", "scan"});

    ExperimentConfig cfg;
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 1);
    cfg.output_dir = get_or<std::string>(doc, "output_dir", "out");
    cfg.threads = get_or(doc, "threads", 0);
    cfg.decoherence_enabled = get_or(doc, "decoherence_enabled", false);
    if (doc.contains("protocol")) cfg.protocol = parse_protocol(doc.at("protocol").get<std::string>());
    if (doc.contains("transmon")) cfg.transmon = parse_transmon(doc.at("transmon"));
    else cfg.transmon = TransmonSpec::default_spec();
    if (!doc.contains("pulse")) throw ConfigError("config: pulse section is required");
    cfg.pulse = parse_pulse(doc.at("pulse"));
    if (doc.contains("control") && !doc.at("control").is_null())
        cfg.control = parse_control(doc.at("control"));
    if (doc.contains("propagation")) cfg.propagation = parse_propagation(doc.at("propagation"));
    if (doc.contains("optimizer") && !doc.at("optimizer").is_null())
        cfg.optimizer = parse_optimizer(doc.at("optimizer"));
    if (doc.contains("scan") && !doc.at("scan").is_null()) cfg.scan = parse_scan(doc.at("scan"));
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_config(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["seed"] = cfg.seed;
    doc["output_dir"] = cfg.output_dir;
    doc["threads"] = cfg.threads;
    doc["protocol"] = to_string(cfg.protocol);
    doc["decoherence_enabled"] = cfg.decoherence_enabled;

    json transmon;
    transmon["level_count"] = cfg.transmon.level_count;
    transmon["level_freqs"] = cfg.transmon.level_freqs;
    if (cfg.transmon.t1_times) transmon["t1_times"] = *cfg.transmon.t1_times;
    if (cfg.transmon.tphi_times) transmon["tphi_times"] = *cfg.transmon.tphi_times;
    transmon["thermal_pop1"] = cfg.transmon.thermal_pop1;
    doc["transmon"] = transmon;

    json pulse;
    pulse["omega0"] = cfg.pulse.omega0;
    pulse["total_time"] = cfg.pulse.total_time;
    pulse["delta_tau"] = cfg.pulse.delta_tau;
    pulse["sigma"] = cfg.pulse.sigma;
    pulse["ordering"] = to_string(cfg.pulse.ordering);
    pulse["sample_step"] = cfg.pulse.sample_step;
    doc["pulse"] = pulse;

    if (cfg.control) {
        json control;
        control["alpha_p"] = cfg.control->alpha_p;
        control["alpha_s"] = cfg.control->alpha_s;
        control["beta_p"] = cfg.control->beta_p;
        control["beta_s"] = cfg.control->beta_s;
        doc["control"] = control;
    }

    json prop;
    prop["frame"] = to_string(cfg.propagation.frame);
    prop["dt"] = cfg.propagation.dt;
    prop["method"] = to_string(cfg.propagation.method);
    prop["record_stride"] = cfg.propagation.record_stride;
    prop["record_snapshots"] = cfg.propagation.record_snapshots;
    doc["propagation"] = prop;

    if (cfg.optimizer) {
        json opt;
        opt["population"] = cfg.optimizer->population;
        opt["initial_step"] = cfg.optimizer->initial_step;
        opt["alpha_bounds"] = {cfg.optimizer->alpha_lo, cfg.optimizer->alpha_hi};
        opt["beta_bounds"] = {cfg.optimizer->beta_lo, cfg.optimizer->beta_hi};
        opt["max_evaluations"] = cfg.optimizer->max_evaluations;
        if (cfg.optimizer->target_cost) opt["target_cost"] = *cfg.optimizer->target_cost;
        opt["seed"] = cfg.optimizer->seed;
        opt["eval_dt"] = cfg.optimizer->eval_dt;
        doc["optimizer"] = opt;
    }

    if (cfg.scan) {
        json scan;
        if (!cfg.scan->times.empty()) scan["times"] = cfg.scan->times;
        scan["eta_span"] = cfg.scan->eta_span;
        scan["eta_points"] = cfg.scan->eta_points;
        scan["delta_span"] = cfg.scan->delta_span;
        scan["delta_points"] = cfg.scan->delta_points;
        if (!cfg.scan->eta_values.empty()) scan["eta_values"] = cfg.scan->eta_values;
        if (!cfg.scan->delta_values.empty()) scan["delta_values"] = cfg.scan->delta_values;
        doc["scan"] = scan;
    }

    return doc.dump(2);
}

} // namespace stirsap
