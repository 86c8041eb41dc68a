#pragma once

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuroage/policy.hpp"
#include "neuroage/sim.hpp"
#include "neuroage/workload.hpp"

namespace neuroage {

using Json = nlohmann::ordered_json;

// Where the spikes come from: exactly one of a trace file or a synthetic
// generator spec.
struct WorkloadSource {
    std::string file;
    std::optional<PoissonWorkloadSpec> poisson;
};

struct ExperimentConfig {
    SimConfig sim;
    WorkloadSource workload;
    std::string output_dir = "out";
    std::uint64_t seed = 0;
    SweepAxes sweep;
    bool has_sweep = false;

    void validate() const {
        sim.validate();
        const bool has_file = !workload.file.empty();
        if (has_file == workload.poisson.has_value())
            throw ConfigError("workload must name exactly one of 'file' or 'poisson'");
        if (workload.poisson) workload.poisson->validate(sim.chip);
    }
};

namespace cfg_detail {

// Mistyped keys in a reliability config must not fail silently.
inline void reject_unknown_keys(const Json& obj, const std::string& path,
                                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("unknown config key '" + (path.empty() ? key : path + "." + key) +
                              "'");
    }
}

inline double num(const Json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (v.is_string() && v.get<std::string>() == "inf")
        return std::numeric_limits<double>::infinity();
    if (!v.is_number()) throw ConfigError(std::string("config key '") + key + "' must be a number");
    return v.get<double>();
}

inline Json num_out(double v) {
    if (std::isinf(v)) return Json("inf");
    return Json(v);
}

template <typename T>
T integer(const Json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    const Json& v = obj.at(key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError(std::string("config key '") + key + "' must be an integer");
    return v.get<T>();
}

inline bool boolean(const Json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_boolean())
        throw ConfigError(std::string("config key '") + key + "' must be a boolean");
    return obj.at(key).get<bool>();
}

inline std::string text(const Json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string())
        throw ConfigError(std::string("config key '") + key + "' must be a string");
    return obj.at(key).get<std::string>();
}

}  // namespace cfg_detail

inline ChipConfig chip_from_json(const Json& j) {
    using namespace cfg_detail;
    reject_unknown_keys(j, "chip",
                        {"num_tiles", "neurons_per_tile", "crosspoints_per_tile",
                         "counter_width_bits", "routing_latency_s", "aer_bandwidth_events_per_s"});
    ChipConfig chip;
    chip.num_tiles = integer<std::uint32_t>(j, "num_tiles", chip.num_tiles);
    chip.neurons_per_tile = integer<std::uint32_t>(j, "neurons_per_tile", chip.neurons_per_tile);
    chip.crosspoints_per_tile =
        integer<std::uint32_t>(j, "crosspoints_per_tile", chip.crosspoints_per_tile);
    chip.counter_width_bits =
        integer<std::uint32_t>(j, "counter_width_bits", chip.counter_width_bits);
    chip.routing_latency = num(j, "routing_latency_s", chip.routing_latency);
    chip.aer_bandwidth_events_per_s =
        num(j, "aer_bandwidth_events_per_s", chip.aer_bandwidth_events_per_s);
    return chip;
}

inline Environment env_from_json(const Json& j) {
    using namespace cfg_detail;
    reject_unknown_keys(j, "env",
                        {"temperature_k", "v_spike", "v_idle", "v_destress", "delta_t_spike_s"});
    Environment env;
    env.temperature = num(j, "temperature_k", env.temperature);
    env.v_spike = num(j, "v_spike", env.v_spike);
    env.v_idle = num(j, "v_idle", env.v_idle);
    env.v_destress = num(j, "v_destress", env.v_destress);
    env.delta_t_spike = num(j, "delta_t_spike_s", env.delta_t_spike);
    return env;
}

inline AgingParams aging_from_json(const Json& j) {
    using namespace cfg_detail;
    reject_unknown_keys(j, "aging",
                        {"a_fit", "gamma", "e_a_ev", "k_b_ev_per_k", "beta", "rho_recoverable",
                         "tau_recover_destress_s", "tau_recover_idle_s", "tau_convert_s"});
    AgingParams p;
    p.a_fit = num(j, "a_fit", p.a_fit);
    p.gamma = num(j, "gamma", p.gamma);
    p.e_a = num(j, "e_a_ev", p.e_a);
    p.k_b = num(j, "k_b_ev_per_k", p.k_b);
    p.beta = num(j, "beta", p.beta);
    p.rho_recoverable = num(j, "rho_recoverable", p.rho_recoverable);
    p.tau_recover_destress = num(j, "tau_recover_destress_s", p.tau_recover_destress);
    p.tau_recover_idle = num(j, "tau_recover_idle_s", p.tau_recover_idle);
    p.tau_convert = num(j, "tau_convert_s", p.tau_convert);
    return p;
}

inline PolicyConfig policy_from_json(const Json& j, const std::string& path = "policy") {
    using namespace cfg_detail;
    reject_unknown_keys(j, path,
                        {"kind", "th_a", "soft_fraction", "interval_s", "tdsc_s",
                         "idle_predictor_window", "staggered_phase"});
    PolicyConfig p;
    p.kind = policy_kind_from_string(text(j, "kind", "none"));
    p.th_a = num(j, "th_a", p.th_a);
    p.soft_fraction = num(j, "soft_fraction", p.soft_fraction);
    p.interval = num(j, "interval_s", p.interval);
    p.tdsc = num(j, "tdsc_s", p.tdsc);
    p.idle_predictor_window =
        integer<std::uint32_t>(j, "idle_predictor_window", p.idle_predictor_window);
    p.staggered_phase = boolean(j, "staggered_phase", p.staggered_phase);
    return p;
}

inline PoissonWorkloadSpec poisson_from_json(const Json& j) {
    using namespace cfg_detail;
    reject_unknown_keys(j, "workload.poisson", {"duration_s", "rates"});
    PoissonWorkloadSpec spec;
    spec.duration = num(j, "duration_s", spec.duration);
    if (j.contains("rates")) {
        const Json& r = j.at("rates");
        reject_unknown_keys(r, "workload.poisson.rates",
                            {"kind", "rate_hz", "min_hz", "max_hz", "rates_hz"});
        const std::string kind = text(r, "kind", "constant");
        if (kind == "constant") {
            spec.rates.kind = RateSpec::Kind::Constant;
            spec.rates.constant = num(r, "rate_hz", spec.rates.constant);
        } else if (kind == "uniform") {
            spec.rates.kind = RateSpec::Kind::Uniform;
            spec.rates.min = num(r, "min_hz", spec.rates.min);
            spec.rates.max = num(r, "max_hz", spec.rates.max);
        } else if (kind == "per_neuron") {
            spec.rates.kind = RateSpec::Kind::PerNeuron;
            if (!r.contains("rates_hz") || !r.at("rates_hz").is_array())
                throw ConfigError("workload.poisson.rates.rates_hz must be an array");
            spec.rates.per_neuron = r.at("rates_hz").get<std::vector<double>>();
        } else {
            throw ConfigError("unknown rate kind '" + kind + "'");
        }
    }
    return spec;
}

inline ExperimentConfig config_from_json(const Json& j) {
    using namespace cfg_detail;
    reject_unknown_keys(j, "",
                        {"chip", "env", "aging", "calibration", "policy", "workload",
                         "output_dir", "seed", "sweep", "sample_trajectory"});
    ExperimentConfig cfg;
    if (j.contains("chip")) cfg.sim.chip = chip_from_json(j.at("chip"));
    if (j.contains("env")) cfg.sim.env = env_from_json(j.at("env"));
    if (j.contains("aging")) cfg.sim.aging = aging_from_json(j.at("aging"));
    if (j.contains("policy")) cfg.sim.policy = policy_from_json(j.at("policy"));
    if (j.contains("calibration")) {
        reject_unknown_keys(j.at("calibration"), "calibration", {"baseline_aging"});
        cfg.sim.calibration.baseline_aging = num(j.at("calibration"), "baseline_aging", 0.0);
    }
    cfg.sim.sample_trajectory = boolean(j, "sample_trajectory", false);
    cfg.output_dir = text(j, "output_dir", cfg.output_dir);
    cfg.seed = integer<std::uint64_t>(j, "seed", cfg.seed);

    if (j.contains("workload")) {
        const Json& w = j.at("workload");
        reject_unknown_keys(w, "workload", {"file", "poisson"});
        cfg.workload.file = text(w, "file", "");
        if (w.contains("poisson")) {
            cfg.workload.poisson = poisson_from_json(w.at("poisson"));
            cfg.workload.poisson->seed = cfg.seed;
        }
    }

    if (j.contains("sweep")) {
        const Json& s = j.at("sweep");
        reject_unknown_keys(s, "sweep", {"policies", "temperatures_k", "tile_counts", "seeds"});
        cfg.has_sweep = true;
        if (s.contains("policies"))
            for (const Json& p : s.at("policies")) {
                PolicyConfig pc = cfg.sim.policy;
                pc.kind = policy_kind_from_string(p.get<std::string>());
                cfg.sweep.policies.push_back(pc);
            }
        if (s.contains("temperatures_k"))
            cfg.sweep.temperatures = s.at("temperatures_k").get<std::vector<double>>();
        if (s.contains("tile_counts"))
            cfg.sweep.tile_counts = s.at("tile_counts").get<std::vector<std::uint32_t>>();
        if (s.contains("seeds"))
            cfg.sweep.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
    }
    cfg.validate();
    return cfg;
}

// Full resolved echo: every effective value appears, so the echo is a valid,
// self-contained config.
inline Json config_to_json(const ExperimentConfig& cfg) {
    using cfg_detail::num_out;
    Json j;
    j["chip"] = {{"num_tiles", cfg.sim.chip.num_tiles},
                 {"neurons_per_tile", cfg.sim.chip.neurons_per_tile},
                 {"crosspoints_per_tile", cfg.sim.chip.crosspoints_per_tile},
                 {"counter_width_bits", cfg.sim.chip.counter_width_bits},
                 {"routing_latency_s", cfg.sim.chip.routing_latency},
                 {"aer_bandwidth_events_per_s", cfg.sim.chip.aer_bandwidth_events_per_s}};
    j["env"] = {{"temperature_k", cfg.sim.env.temperature},
                {"v_spike", cfg.sim.env.v_spike},
                {"v_idle", cfg.sim.env.v_idle},
                {"v_destress", cfg.sim.env.v_destress},
                {"delta_t_spike_s", cfg.sim.env.delta_t_spike}};
    j["aging"] = {{"a_fit", cfg.sim.aging.a_fit},
                  {"gamma", cfg.sim.aging.gamma},
                  {"e_a_ev", cfg.sim.aging.e_a},
                  {"k_b_ev_per_k", cfg.sim.aging.k_b},
                  {"beta", cfg.sim.aging.beta},
                  {"rho_recoverable", cfg.sim.aging.rho_recoverable},
                  {"tau_recover_destress_s", num_out(cfg.sim.aging.tau_recover_destress)},
                  {"tau_recover_idle_s", num_out(cfg.sim.aging.tau_recover_idle)},
                  {"tau_convert_s", num_out(cfg.sim.aging.tau_convert)}};
    if (cfg.sim.calibration.calibrated())
        j["calibration"] = {{"baseline_aging", cfg.sim.calibration.baseline_aging}};
    j["policy"] = {{"kind", to_string(cfg.sim.policy.kind)},
                   {"th_a", cfg.sim.policy.th_a},
                   {"soft_fraction", cfg.sim.policy.soft_fraction},
                   {"interval_s", cfg.sim.policy.interval},
                   {"tdsc_s", cfg.sim.policy.tdsc},
                   {"idle_predictor_window", cfg.sim.policy.idle_predictor_window},
                   {"staggered_phase", cfg.sim.policy.staggered_phase}};
    Json w;
    if (!cfg.workload.file.empty()) w["file"] = cfg.workload.file;
    if (cfg.workload.poisson) {
        const PoissonWorkloadSpec& p = *cfg.workload.poisson;
        Json rates;
        switch (p.rates.kind) {
            case RateSpec::Kind::Constant:
                rates = {{"kind", "constant"}, {"rate_hz", p.rates.constant}};
                break;
            case RateSpec::Kind::Uniform:
                rates = {{"kind", "uniform"}, {"min_hz", p.rates.min}, {"max_hz", p.rates.max}};
                break;
            case RateSpec::Kind::PerNeuron:
                rates = {{"kind", "per_neuron"}, {"rates_hz", p.rates.per_neuron}};
                break;
        }
        w["poisson"] = {{"duration_s", p.duration}, {"rates", rates}};
    }
    j["workload"] = w;
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    if (cfg.has_sweep) {
        Json s;
        if (!cfg.sweep.policies.empty()) {
            std::vector<std::string> names;
            for (const PolicyConfig& p : cfg.sweep.policies) names.push_back(to_string(p.kind));
            s["policies"] = names;
        }
        if (!cfg.sweep.temperatures.empty()) s["temperatures_k"] = cfg.sweep.temperatures;
        if (!cfg.sweep.tile_counts.empty()) s["tile_counts"] = cfg.sweep.tile_counts;
        if (!cfg.sweep.seeds.empty()) s["seeds"] = cfg.sweep.seeds;
        j["sweep"] = s;
    }
    j["sample_trajectory"] = cfg.sim.sample_trajectory;
    return j;
}

inline std::string config_hash(const ExperimentConfig& cfg) {
    return hex64(fnv1a(config_to_json(cfg).dump()));
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }
    return config_from_json(j);
}

inline void save_config(const ExperimentConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << config_to_json(cfg).dump(2) << "\n";
}

}  // namespace neuroage
