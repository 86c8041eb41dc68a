// Experiment runner for the tiled-chip aging simulator. Subcommands: run,
// compare, gen, calibrate, stats. All heavy lifting lives in the headers;
// this file only parses arguments.
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neuroage/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Tiled neuromorphic-chip transistor-aging simulator"};
    app.require_subcommand(1);

    neuroage::CmdOptions opt;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "Run one experiment (or a sweep) from a config file");
    run->add_option("--config", opt.config_path, "Experiment config (JSON)")->required();
    run->add_option("--out", opt.out_override, "Override the output directory");
    run->add_option("--seed", seed, "Override the config seed");
    run->add_flag("--sample-trajectory", opt.sample_trajectory,
                  "Record the per-event aging trajectory and events.log");

    std::string policies_arg;
    auto* compare = app.add_subcommand("compare", "Run several policies on the identical trace");
    compare->add_option("--config", opt.config_path, "Experiment config (JSON)")->required();
    compare->add_option("--out", opt.out_override, "Override the output directory");
    compare->add_option("--seed", seed, "Override the config seed");
    compare->add_option("--policies", policies_arg,
                        "Comma-separated policy kinds (none,fixed_interval,dynamic)")
        ->required();

    std::string gen_out;
    auto* gen = app.add_subcommand("gen", "Generate a synthetic spike trace");
    gen->add_option("--config", opt.config_path, "Config with a workload.poisson block")
        ->required();
    gen->add_option("--out", gen_out, "Output trace file")->required();
    gen->add_option("--seed", seed, "Override the config seed");

    auto* calibrate = app.add_subcommand("calibrate",
                                         "Solve a_fit for the lifetime reliability target");
    calibrate->add_option("--config", opt.config_path, "Experiment config (JSON)")->required();
    calibrate->add_option("--out", opt.out_override, "Override the output directory");

    std::string stats_trace, stats_out;
    auto* stats = app.add_subcommand("stats", "Per-neuron firing statistics of a trace");
    stats->add_option("--trace", stats_trace, "Trace file")->required();
    stats->add_option("--out", stats_out, "Output CSV (stdout when omitted)");

    CLI11_PARSE(app, argc, argv);
    opt.seed_override = seed;

    if (run->parsed()) return neuroage::cmd_run(opt);
    if (compare->parsed()) {
        std::size_t pos = 0;
        while (pos <= policies_arg.size()) {
            const std::size_t comma = policies_arg.find(',', pos);
            const std::string item =
                policies_arg.substr(pos, comma == std::string::npos ? std::string::npos
                                                                    : comma - pos);
            if (!item.empty()) opt.policies.push_back(item);
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        return neuroage::cmd_compare(opt);
    }
    if (gen->parsed()) return neuroage::cmd_gen(opt.config_path, gen_out, seed);
    if (calibrate->parsed()) return neuroage::cmd_calibrate(opt);
    if (stats->parsed()) return neuroage::cmd_stats(stats_trace, stats_out);
    return neuroage::kExitUserError;
}
