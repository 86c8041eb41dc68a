#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "neuroage/calibrate.hpp"
#include "neuroage/config.hpp"
#include "neuroage/metrics.hpp"
#include "neuroage/sim.hpp"

namespace neuroage {

inline std::string fmt_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// Exit codes: 0 success, 2 user/config/trace error, 3 internal or
// convergence error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUserError = 2;
inline constexpr int kExitInternalError = 3;

template <typename F>
int guarded(F&& f) {
    try {
        std::forward<F>(f)();
        return kExitOk;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternalError;
    }
}

struct CmdOptions {
    std::string config_path;
    std::string out_override;               // --out
    std::optional<std::uint64_t> seed_override;  // --seed
    std::vector<std::string> policies;      // --policies (compare)
    bool sample_trajectory = false;         // --sample-trajectory
};

inline ExperimentConfig load_with_overrides(const CmdOptions& opt) {
    ExperimentConfig cfg = load_config(opt.config_path);
    if (!opt.out_override.empty()) cfg.output_dir = opt.out_override;
    if (opt.seed_override) {
        cfg.seed = *opt.seed_override;
        if (cfg.workload.poisson) cfg.workload.poisson->seed = cfg.seed;
    }
    if (opt.sample_trajectory) cfg.sim.sample_trajectory = true;
    return cfg;
}

// Relative trace paths resolve against the config file's directory.
inline SpikeTrace acquire_trace(const ExperimentConfig& cfg, const std::string& config_path) {
    if (!cfg.workload.file.empty()) {
        std::filesystem::path p(cfg.workload.file);
        if (p.is_relative() && !config_path.empty())
            p = std::filesystem::path(config_path).parent_path() / p;
        SpikeTrace trace = load_trace(p.string());
        trace.validate_against(cfg.sim.chip);
        return trace;
    }
    return generate_poisson(*cfg.workload.poisson, cfg.sim.chip);
}

struct RunReports {
    RunResult managed;
    RunResult baseline;  // policy none over the identical trace
    IsiDelta isi;
    AgingSummary aging;
    double ratio = 0;    // chip max aging / mean ISI distortion
};

// Runs the configured policy plus the unmanaged baseline the ISI deltas are
// measured against.
inline RunReports execute_run(const SimConfig& sim, const SpikeTrace& trace) {
    RunReports r;
    r.managed = run(sim, trace);
    if (sim.policy.kind == PolicyKind::None) {
        r.baseline = r.managed;
    } else {
        SimConfig base = sim;
        base.policy.kind = PolicyKind::None;
        base.sample_trajectory = false;
        r.baseline = run(base, trace);
    }
    r.isi = isi_delta(isi_stats(r.baseline.managed_log), isi_stats(r.managed.managed_log),
                      r.managed.destress_log);
    r.aging = aging_summary(r.managed.final_tiles, r.managed.tile_spike_counts,
                            sim.calibration);
    r.ratio = aging_per_isi_distortion(r.aging.chip_max_aging, r.isi.mean_delta_avg);
    return r;
}

namespace report {

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    return out;
}

inline void stamp(std::ofstream& out, const std::string& hash, std::uint64_t seed) {
    out << "# config=" << hash << " seed=" << seed << "\n";
}

inline void write_isi_csv(const std::filesystem::path& path, const IsiDelta& isi,
                          const std::string& hash, std::uint64_t seed) {
    auto out = open_out(path);
    stamp(out, hash, seed);
    out << "neuron,tile,k_n,isi_avg_baseline,isi_avg_managed,delta_avg\n";
    for (const NeuronIsiDelta& d : isi.neurons)
        out << d.neuron << ',' << d.tile << ',' << d.spike_count << ','
            << fmt_double(d.isi_avg_baseline) << ',' << fmt_double(d.isi_avg_managed) << ','
            << fmt_double(d.delta_avg) << "\n";
}

inline void write_aging_csv(const std::filesystem::path& path, const AgingSummary& aging,
                            const VthCalibration& cal, const std::string& hash,
                            std::uint64_t seed) {
    auto out = open_out(path);
    stamp(out, hash, seed);
    out << "tile,neuron,aging_recoverable,aging_permanent,aging_total,vth_shift_pct\n";
    for (const NeuronAgingRow& row : aging.neurons) {
        const double vth = cal.calibrated() ? vth_shift_pct(row.total, cal)
                                            : std::numeric_limits<double>::quiet_NaN();
        out << row.tile << ',' << row.neuron << ',' << fmt_double(row.recoverable) << ','
            << fmt_double(row.permanent) << ',' << fmt_double(row.total) << ','
            << fmt_double(vth) << "\n";
    }
}

inline void write_destress_csv(const std::filesystem::path& path,
                               const std::vector<DestressRecord>& log, const std::string& hash,
                               std::uint64_t seed) {
    auto out = open_out(path);
    stamp(out, hash, seed);
    out << "time,tile,trigger,aging_at_issue\n";
    for (const DestressRecord& d : log)
        out << format_seconds(d.time) << ',' << d.tile << ',' << to_string(d.trigger) << ','
            << fmt_double(d.aging_at_issue) << "\n";
}

inline void write_run_summary(const std::filesystem::path& path, const RunReports& r,
                              const SimConfig& sim, const std::string& hash,
                              std::uint64_t seed) {
    Json j;
    j["policy"] = to_string(sim.policy.kind);
    j["config_hash"] = hash;
    j["seed"] = seed;
    j["duration_s"] = ns_to_seconds(r.managed.duration);
    j["input_spikes"] = r.managed.input_spikes;
    j["emitted_spikes"] = r.managed.emitted_spikes;
    j["deferred_spikes"] = r.managed.deferred_spikes;
    j["event_count"] = r.managed.event_count;
    j["chip_max_aging"] = r.aging.chip_max_aging;
    j["chip_max_vth_shift_pct"] = r.aging.chip_max_vth_shift_pct;  // null if uncalibrated
    j["mean_delta_isi_s"] = r.isi.mean_delta_avg;
    if (std::isinf(r.ratio))
        j["aging_per_unit_isi_distortion"] = "no distortion";
    else
        j["aging_per_unit_isi_distortion"] = r.ratio;
    double closed_sum = 0;
    for (const NeuronIsiDelta& d : r.isi.neurons) closed_sum += d.delta_avg_closed_form;
    j["delta_isi_closed_form_mean_s"] =
        r.isi.neurons.empty() ? 0.0 : closed_sum / static_cast<double>(r.isi.neurons.size());
    j["destress_count"] = r.managed.destress_log.size();
    j["calibrated"] = sim.calibration.calibrated();
    auto out = open_out(path);
    out << j.dump(2) << "\n";
}

inline void write_events_log(const std::filesystem::path& path, const RunResult& result) {
    SpikeTrace annotated = result.managed_log;
    for (const DestressRecord& d : result.destress_log)
        annotated.annotations.push_back(format_seconds(d.time) + "," + std::to_string(d.tile) +
                                        "," + to_string(d.trigger));
    auto out = open_out(path);
    out << emit_trace(annotated);
}

inline void write_trajectory_csv(const std::filesystem::path& path,
                                 const std::vector<TrajectorySample>& traj,
                                 const std::string& hash, std::uint64_t seed) {
    auto out = open_out(path);
    stamp(out, hash, seed);
    out << "time,kind,tile,neuron,neuron_total,tile_max\n";
    for (const TrajectorySample& s : traj)
        out << format_seconds(s.time) << ',' << s.kind << ',' << s.tile << ',' << s.neuron << ','
            << fmt_double(s.neuron_total) << ',' << fmt_double(s.tile_max) << "\n";
}

inline void write_stats_csv(std::ostream& out, const TraceStats& stats) {
    out << "neuron,tile,count,rate_min,rate_avg,rate_max\n";
    for (const NeuronStat& n : stats.per_neuron)
        out << n.neuron << ',' << n.tile << ',' << n.count << ',' << fmt_double(n.rate_min) << ','
            << fmt_double(n.rate_avg) << ',' << fmt_double(n.rate_max) << "\n";
}

}  // namespace report

inline void write_run_reports(const ExperimentConfig& cfg, const RunReports& r,
                              const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string hash = config_hash(cfg);
    save_config(cfg, (out_dir / "config_echo.json").string());
    report::write_run_summary(out_dir / "run_summary.json", r, cfg.sim, hash, cfg.seed);
    report::write_aging_csv(out_dir / "aging_summary.csv", r.aging, cfg.sim.calibration, hash,
                            cfg.seed);
    report::write_isi_csv(out_dir / "isi_per_neuron.csv", r.isi, hash, cfg.seed);
    report::write_destress_csv(out_dir / "destress_log.csv", r.managed.destress_log, hash,
                               cfg.seed);
    if (cfg.sim.sample_trajectory) {
        report::write_events_log(out_dir / "events.log", r.managed);
        report::write_trajectory_csv(out_dir / "trajectory.csv", r.managed.trajectory, hash,
                                     cfg.seed);
    }
}

inline int cmd_run(const CmdOptions& opt) {
    return guarded([&] {
        ExperimentConfig cfg = load_with_overrides(opt);
        const SpikeTrace trace = acquire_trace(cfg, opt.config_path);
        const std::filesystem::path out_dir(cfg.output_dir);

        if (cfg.has_sweep) {
            const auto cells =
                run_sweep(cfg.sim, trace, cfg.workload.poisson, cfg.sweep);
            std::filesystem::create_directories(out_dir);
            const std::string hash = config_hash(cfg);
            auto out = report::open_out(out_dir / "sweep.csv");
            report::stamp(out, hash, cfg.seed);
            out << "policy,temperature_k,num_tiles,seed,ok,chip_max_aging,destress_count,"
                   "emitted_spikes,error\n";
            for (const SweepCell& c : cells) {
                double max_aging = 0;
                if (c.ok)
                    for (const TileState& t : c.result.final_tiles)
                        for (const NeuronAgingState& s : t.neuron_states)
                            max_aging = std::max(max_aging, s.total());
                out << to_string(c.policy) << ',' << fmt_double(c.temperature) << ','
                    << c.num_tiles << ',' << c.seed << ',' << (c.ok ? 1 : 0) << ','
                    << fmt_double(max_aging) << ',' << c.result.destress_log.size() << ','
                    << c.result.emitted_spikes << ',' << csv_field(c.error) << "\n";
            }
            save_config(cfg, (out_dir / "config_echo.json").string());
            std::size_t failed = 0;
            for (const SweepCell& c : cells)
                if (!c.ok) ++failed;
            std::cout << "sweep: " << cells.size() - failed << "/" << cells.size()
                      << " cells ok -> " << out_dir.string() << "\n";
            if (failed) throw StateError(std::to_string(failed) + " sweep cells failed");
            return;
        }

        const RunReports r = execute_run(cfg.sim, trace);
        write_run_reports(cfg, r, out_dir);
        std::cout << "policy=" << to_string(cfg.sim.policy.kind)
                  << " spikes=" << r.managed.emitted_spikes
                  << " destress_ops=" << r.managed.destress_log.size()
                  << " chip_max_aging=" << fmt_double(r.aging.chip_max_aging)
                  << " mean_delta_isi_s=" << fmt_double(r.isi.mean_delta_avg)
                  << " wall_s=" << fmt_double(r.managed.wall_seconds) << "\n";
    });
}

inline int cmd_compare(const CmdOptions& opt) {
    return guarded([&] {
        if (opt.policies.size() < 2)
            throw ConfigError("compare needs --policies with at least two entries");
        ExperimentConfig cfg = load_with_overrides(opt);
        const SpikeTrace trace = acquire_trace(cfg, opt.config_path);

        SimConfig base = cfg.sim;
        base.policy.kind = PolicyKind::None;
        base.sample_trajectory = false;
        const RunResult baseline = run(base, trace);
        const IsiStats baseline_isi = isi_stats(baseline.managed_log);

        const std::filesystem::path out_dir(cfg.output_dir);
        std::filesystem::create_directories(out_dir);
        const std::string hash = config_hash(cfg);
        auto out = report::open_out(out_dir / "compare.csv");
        report::stamp(out, hash, cfg.seed);
        out << "policy,chip_max_aging,vth_shift_pct,mean_delta_isi_s,"
               "aging_per_unit_isi_distortion,destress_count\n";

        for (const std::string& name : opt.policies) {
            SimConfig sim = cfg.sim;
            sim.policy.kind = policy_kind_from_string(name);
            const RunResult res =
                sim.policy.kind == PolicyKind::None ? baseline : run(sim, trace);
            const IsiDelta isi =
                isi_delta(baseline_isi, isi_stats(res.managed_log), res.destress_log);
            const AgingSummary aging =
                aging_summary(res.final_tiles, res.tile_spike_counts, sim.calibration);
            const double ratio =
                aging_per_isi_distortion(aging.chip_max_aging, isi.mean_delta_avg);
            out << name << ',' << fmt_double(aging.chip_max_aging) << ','
                << fmt_double(aging.chip_max_vth_shift_pct) << ','
                << fmt_double(isi.mean_delta_avg) << ',' << fmt_double(ratio) << ','
                << res.destress_log.size() << "\n";
        }
        save_config(cfg, (out_dir / "config_echo.json").string());
        std::cout << "compare: " << opt.policies.size() << " policies -> "
                  << (out_dir / "compare.csv").string() << "\n";
    });
}

inline int cmd_gen(const std::string& config_path, const std::string& out_path,
                   std::optional<std::uint64_t> seed_override = std::nullopt) {
    return guarded([&] {
        ExperimentConfig cfg = load_config(config_path);
        if (!cfg.workload.poisson)
            throw ConfigError("gen requires a workload.poisson block in the config");
        if (seed_override) cfg.workload.poisson->seed = *seed_override;
        SpikeTrace trace = generate_poisson(*cfg.workload.poisson, cfg.sim.chip);
        trace.trace_id = "poisson-seed" + std::to_string(cfg.workload.poisson->seed);
        trace.chip_hash = hex64(fnv1a(std::to_string(cfg.sim.chip.num_tiles) + "x" +
                                      std::to_string(cfg.sim.chip.neurons_per_tile)));
        save_trace(trace, out_path);
        std::cout << "gen: " << trace.events.size() << " events -> " << out_path << "\n";
    });
}

inline int cmd_calibrate(const CmdOptions& opt) {
    return guarded([&] {
        ExperimentConfig cfg = load_with_overrides(opt);
        const CalibrationResult cal = calibrate_a_fit(cfg.sim.aging, cfg.sim.env);
        cfg.sim.aging.a_fit = cal.a_fit;
        cfg.sim.calibration.baseline_aging = cal.baseline_aging;
        const std::filesystem::path out_dir(cfg.output_dir);
        std::filesystem::create_directories(out_dir);
        const std::string path = (out_dir / "calibrated_config.json").string();
        save_config(cfg, path);
        std::cout << "calibrate: a_fit=" << fmt_double(cal.a_fit)
                  << " baseline_aging=" << fmt_double(cal.baseline_aging)
                  << " vth_shift_pct=" << fmt_double(vth_shift_pct(cal.baseline_aging,
                                                                   cfg.sim.calibration))
                  << " iterations=" << cal.iterations << " -> " << path << "\n";
    });
}

inline int cmd_stats(const std::string& trace_path, const std::string& out_path) {
    return guarded([&] {
        const SpikeTrace trace = load_trace(trace_path);
        const TraceStats stats = trace_stats(trace);
        if (out_path.empty()) {
            report::write_stats_csv(std::cout, stats);
        } else {
            auto out = report::open_out(out_path);
            report::write_stats_csv(out, stats);
        }
        std::cerr << "stats: neurons=" << stats.per_neuron.size()
                  << " rate_min_hz=" << fmt_double(stats.rate_min)
                  << " rate_avg_hz=" << fmt_double(stats.rate_avg)
                  << " rate_max_hz=" << fmt_double(stats.rate_max) << "\n";
    });
}

}  // namespace neuroage
