// Command-line front end for the cellular tuning simulator: closed-loop VoLTE
// power control (indoor) and SON fault management (outdoor), each with train,
// evaluate and sweep subcommands.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "celltune/harness.hpp"

namespace {

using celltune::RunConfig;
using celltune::RunResult;

struct CommonArgs {
    std::string config_path;
    std::string out_dir = "out";
    std::string algorithm;
    std::string checkpoint;
    std::optional<long long> seed;
    std::optional<long long> episodes;
    bool emit_plot_data = false;
    std::string q_list = "5,10,50";
};

RunConfig build_config(const std::string& lane, const CommonArgs& args, bool for_train) {
    RunConfig cfg;
    if (!args.config_path.empty()) {
        cfg = RunConfig::load(args.config_path);
        const std::string want = lane == "volte-pc" ? "volte" : "son";
        if (cfg.env_kind != want)
            throw std::runtime_error("config env_kind '" + cfg.env_kind +
                                     "' does not match subcommand " + lane);
    } else {
        cfg = lane == "volte-pc" ? RunConfig::volte_defaults() : RunConfig::son_defaults();
    }
    if (args.seed) cfg.seed = *args.seed;
    if (!args.algorithm.empty()) cfg.algorithm = args.algorithm;
    if (args.episodes) {
        if (for_train)
            cfg.train_episodes = *args.episodes;
        else
            cfg.eval_episodes = *args.episodes;
    }
    cfg.validate();
    return cfg;
}

std::vector<long long> parse_q_list(const std::string& text) {
    std::vector<long long> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stoll(item));
    }
    if (out.empty()) throw std::runtime_error("--q list is empty");
    return out;
}

void print_metrics(const RunConfig& cfg, const RunResult& r) {
    const auto& m = r.metrics;
    std::printf("algorithm=%s retainability=%.4f mos=%.3f attainment=%.4f commands=%ld\n",
                cfg.algorithm.c_str(), m.retainability, m.mos, m.target_attainment,
                m.power_commands);
    std::printf("ue_thpt_mbps peak/avg/edge = %.4f/%.4f/%.4f cell=%.4f avg_se=%.4f\n",
                m.ue_throughput_peak_mbps, m.ue_throughput_avg_mbps, m.ue_throughput_edge_mbps,
                m.avg_cell_throughput_mbps, m.avg_spectral_efficiency);
    std::printf("trace=%s digest=%s wall=%.2fs\n", r.trace_path.c_str(), r.trace_digest.c_str(),
                r.wall_seconds);
}

int run_train(const std::string& lane, const CommonArgs& args) {
    const RunConfig cfg = build_config(lane, args, true);
    const RunResult r = celltune::train(cfg, args.out_dir);
    std::ofstream echo(std::filesystem::path(args.out_dir) / "config_used.cfg");
    echo << cfg.serialize();
    std::printf("trained %lld episodes -> %s\n", cfg.train_episodes, r.checkpoint_path.c_str());
    std::printf("trace=%s digest=%s wall=%.2fs\n", r.trace_path.c_str(), r.trace_digest.c_str(),
                r.wall_seconds);
    return 0;
}

int run_evaluate(const std::string& lane, const CommonArgs& args) {
    const RunConfig cfg = build_config(lane, args, false);
    if (cfg.algorithm == "proposed" && args.checkpoint.empty())
        throw std::runtime_error("evaluate with --algorithm proposed needs --checkpoint");
    const RunResult r = celltune::evaluate(cfg, args.checkpoint, args.out_dir,
                                           args.emit_plot_data);
    celltune::write_metrics_csv(
        (std::filesystem::path(args.out_dir) / "metrics.csv").string(),
        cfg.env_kind + "-eval", cfg.algorithm, cfg.q_ues, r.metrics, true);
    print_metrics(cfg, r);
    return 0;
}

int run_sweep(const std::string& lane, const CommonArgs& args) {
    if (lane == "son-fm") {
        const RunConfig cfg = build_config(lane, args, false);
        celltune::sweep_son(cfg, parse_q_list(args.q_list), {"random", "fifo", "proposed"},
                            args.out_dir);
        std::printf("sweep written to %s/sweep.csv\n", args.out_dir.c_str());
        return 0;
    }
    // volte-pc: sweep the three power-control algorithms on paired seeds
    RunConfig base = build_config(lane, args, false);
    const std::string train_dir = (std::filesystem::path(args.out_dir) / "train").string();
    RunConfig train_cfg = base;
    train_cfg.algorithm = "proposed";
    const RunResult trained = celltune::train(train_cfg, train_dir);
    const std::string metrics_path =
        (std::filesystem::path(args.out_dir) / "sweep_metrics.csv").string();
    bool first = true;
    for (const std::string algo : {"fpa", "proposed", "maxsinr"}) {
        RunConfig cfg = base;
        cfg.algorithm = algo;
        const RunResult r =
            celltune::evaluate(cfg, trained.checkpoint_path,
                               (std::filesystem::path(args.out_dir) / algo).string(),
                               args.emit_plot_data);
        celltune::write_metrics_csv(metrics_path, "volte-sweep", algo, cfg.q_ues, r.metrics,
                                    first);
        first = false;
        print_metrics(cfg, r);
    }
    return 0;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_q, bool with_eval_flags) {
    cmd->add_option("--config", args.config_path, "run configuration file");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_option("--episodes", args.episodes, "episode count");
    cmd->add_option("--out", args.out_dir, "output directory");
    if (with_eval_flags) {
        cmd->add_option("--algorithm", args.algorithm, "algorithm name");
        cmd->add_option("--checkpoint", args.checkpoint, "model checkpoint path");
        cmd->add_flag("--emit-plot-data", args.emit_plot_data,
                      "write per-TTI effective SINR series");
    }
    if (with_q) cmd->add_option("--q", args.q_list, "comma-separated users-per-BS sweep values");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellular cluster tuning simulator"};
    app.require_subcommand(1);

    struct Lane {
        CLI::App* train;
        CLI::App* evaluate;
        CLI::App* sweep;
        CommonArgs train_args, eval_args, sweep_args;
    };
    std::map<std::string, Lane> lanes;
    for (const std::string lane : {"volte-pc", "son-fm"}) {
        CLI::App* sub = app.add_subcommand(
            lane, lane == "volte-pc" ? "indoor VoLTE closed-loop power control"
                                     : "outdoor SON fault management");
        sub->require_subcommand(1);
        Lane& l = lanes[lane];
        l.train = sub->add_subcommand("train", "train the learning agent");
        l.evaluate = sub->add_subcommand("evaluate", "run a trained or baseline policy");
        l.sweep = sub->add_subcommand("sweep", "compare algorithms (and q values outdoors)");
        add_common(l.train, l.train_args, false, false);
        add_common(l.evaluate, l.eval_args, false, true);
        add_common(l.sweep, l.sweep_args, lane == "son-fm", true);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << std::flush;
        return 2;
    }

    try {
        for (auto& [lane, l] : lanes) {
            if (l.train->parsed()) return run_train(lane, l.train_args);
            if (l.evaluate->parsed()) return run_evaluate(lane, l.eval_args);
            if (l.sweep->parsed()) return run_sweep(lane, l.sweep_args);
        }
        std::cerr << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "celltune: error: " << e.what() << "\n";
        return 1;
    }
}
