#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "celltune/agents.hpp"
#include "celltune/baselines.hpp"
#include "celltune/config.hpp"
#include "celltune/env.hpp"
#include "celltune/metrics.hpp"

namespace celltune {

// Evaluation episodes index from here so they never reuse training streams.
inline constexpr std::uint64_t kEvalEpisodeBase = 1u << 20;

inline std::uint64_t fnv64_bytes(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv64_file: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv64_bytes(ss.str())));
    return buf;
}

// Streams one CSV row per environment transition.
class TraceWriter {
  public:
    TraceWriter() = default;
    explicit TraceWriter(const std::string& path, const std::string& observable_name)
        : out_(std::make_unique<std::ofstream>(path)) {
        if (!*out_) throw std::runtime_error("TraceWriter: cannot write " + path);
        *out_ << "run_id,episode,tti,state,action,event_id,delta_db," << observable_name
              << ",reward,epsilon\n";
    }

    void row(const std::string& run_id, std::uint64_t episode, const StepOutcome& o,
             double observable, double epsilon) {
        if (!out_) return;
        char buf[64], dbuf[64];
        std::snprintf(buf, sizeof buf, "%.9f", observable);
        std::snprintf(dbuf, sizeof dbuf, "%.9f", o.event_delta_db);
        *out_ << run_id << "," << episode << "," << o.tti << "," << o.state << "," << o.action
              << "," << o.event_id << "," << dbuf << "," << buf << "," << o.reward << ","
              << epsilon << "\n";
    }

    void close() { out_.reset(); }

  private:
    std::unique_ptr<std::ofstream> out_;
};

struct RunResult {
    MetricsReport metrics;
    std::string trace_path;
    std::string checkpoint_path;
    std::string trace_digest;
    double wall_seconds = 0.0;
};

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// VoLTE power control
// ---------------------------------------------------------------------------

struct VolteEpisodeStats {
    std::vector<double> ue_sinr_db;  // one entry per executed (tti, ue) cell
    std::vector<double> ue_mean_thpt_mbps;
    long below_threshold = 0;  // executed samples at or below gamma_min
    long frame_slots = 0;      // tau * N_UE; post-target TTIs count as retained
    double cell_thpt_mbps = 0.0;
    double mean_per = 0.0;
    bool target_met = false;
    long power_commands = 0;
};

inline int voice_symbols_per_tti(const RunConfig& cfg) {
    // one TTI carries bitrate * 1 ms of QPSK payload
    const double bits = cfg.voice_bitrate_kbps * 1000.0 * 1e-3;
    return std::max(1, static_cast<int>(std::lround(bits / 2.0)));
}

// Runs one evaluation episode of the indoor environment under the given
// algorithm and collects the per-UE samples the metrics need.
inline VolteEpisodeStats run_volte_episode(VolteEnv& env, std::uint64_t episode,
                                           const std::string& algorithm, const QTable* table,
                                           const RunConfig& cfg, TraceWriter* trace,
                                           const std::string& run_id,
                                           std::vector<std::pair<int, double>>* gamma_series) {
    env.reset(episode);
    RngStream agent_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "agent-eval", episode);
    EpsilonSchedule greedy = EpsilonSchedule::greedy(cfg.epsilon_min);

    // FPA pins every user to the equal-split power before the frame starts.
    if (algorithm == "fpa") {
        const double p =
            fpa_tx_power_dbm(env.params().radio, static_cast<int>(cfg.n_prb_per_ue));
        for (int i = 0; i < env.n_ues(); ++i) env.override_tx_power_dbm(i, p);
    }

    // The foresight baseline replays the same episode (same streams) with
    // no-op actions to observe the SINR it should compensate for.
    std::unique_ptr<VolteEnv> shadow;
    if (algorithm == "maxsinr") {
        shadow = std::make_unique<VolteEnv>(env.params(), static_cast<std::uint64_t>(cfg.seed));
        shadow->reset(episode);
    }

    VolteEpisodeStats stats;
    const int symbols = voice_symbols_per_tti(cfg);
    std::vector<double> ue_thpt_acc(static_cast<std::size_t>(env.n_ues()), 0.0);
    double per_acc = 0.0;
    long per_count = 0;
    const double log2m_cap = 2.0;  // QPSK voice bearer
    int state = env.state();

    if (gamma_series) gamma_series->push_back({0, env.gamma_eff_db()});

    while (!env.terminal()) {
        int action = 0;
        if (algorithm == "proposed") {
            action = select_action(table->row(state), greedy, agent_rng);
        } else if (algorithm == "maxsinr") {
            if (!shadow->terminal()) {
                shadow->step(0);
                const auto foreseen = shadow->per_ue_sinr_db();
                for (int i = 0; i < env.n_ues(); ++i) {
                    const double boost = cfg.target_db - foreseen[static_cast<std::size_t>(i)];
                    env.override_tx_power_dbm(i, env.params().radio.initial_tx_power_dbm + boost);
                }
            } else {
                // the shadow replay reached the target on its own; out-margin
                // any single event from the live SINRs (power is unbounded)
                const auto current = env.per_ue_sinr_db();
                for (int i = 0; i < env.n_ues(); ++i) {
                    const double boost =
                        cfg.target_db + 20.0 - current[static_cast<std::size_t>(i)];
                    env.override_tx_power_dbm(i, env.tx_power_dbm(i) + boost);
                }
            }
            action = 0;
        }
        const StepOutcome out = env.step(action);
        state = out.state;
        if (trace) trace->row(run_id, episode, out, out.gamma_eff_db, greedy.epsilon);
        if (gamma_series) gamma_series->push_back({out.tti, out.gamma_eff_db});

        const auto sinrs = env.per_ue_sinr_db();
        for (std::size_t i = 0; i < sinrs.size(); ++i) {
            stats.ue_sinr_db.push_back(sinrs[i]);
            if (sinrs[i] <= cfg.gamma_min_db) ++stats.below_threshold;
            const double lin = db_to_linear(sinrs[i]);
            const double per = qpsk_packet_error_rate(lin, symbols, cfg.coding_gain_db);
            per_acc += per;
            ++per_count;
            const double se = std::min(std::log2(1.0 + lin), log2m_cap);
            const double thpt =
                se * 180e3 * static_cast<double>(cfg.n_prb_per_ue) * (1.0 - per) / 1e6;
            ue_thpt_acc[i] += thpt;
        }
    }

    stats.frame_slots = static_cast<long>(env.params().horizon) * env.n_ues();
    const double steps = static_cast<double>(std::max(env.tti(), 1));
    for (std::size_t i = 0; i < ue_thpt_acc.size(); ++i) {
        stats.ue_mean_thpt_mbps.push_back(ue_thpt_acc[i] / steps);
        stats.cell_thpt_mbps += ue_thpt_acc[i] / steps;
    }
    stats.mean_per = per_count ? per_acc / static_cast<double>(per_count) : 0.0;
    stats.target_met = env.target_met();
    stats.power_commands = env.power_commands();
    return stats;
}

struct VolteTrainArtifacts {
    QTable table;
    std::string trace_path;
    std::string trace_digest;
};

inline VolteTrainArtifacts train_volte(const RunConfig& cfg, const std::string& out_dir,
                                       const std::string& run_id) {
    std::filesystem::create_directories(out_dir);
    VolteEnv env(cfg.to_volte_params(), static_cast<std::uint64_t>(cfg.seed));
    QTable table(env.spec().state_count, env.spec().action_count, cfg.alpha, cfg.discount);
    EpsilonSchedule sched{cfg.epsilon, cfg.epsilon_decay, cfg.epsilon_min};
    sched.validate();
    RngStream agent_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "agent", 0);

    const std::string trace_path = detail::join_path(out_dir, "train_trace.csv");
    TraceWriter trace(trace_path, "gamma_eff_db");
    for (std::uint64_t ep = 0; ep < static_cast<std::uint64_t>(cfg.train_episodes); ++ep) {
        int state = env.reset(ep);
        while (!env.terminal()) {
            const int action = select_action(table.row(state), sched, agent_rng);
            const StepOutcome out = env.step(action);
            if (out.terminal)
                tabular_update_terminal(table, state, action, out.reward);
            else
                tabular_update(table, state, action, out.reward, out.state);
            trace.row(run_id, ep, out, out.gamma_eff_db, sched.epsilon);
            state = out.state;
        }
    }
    trace.close();
    return {std::move(table), trace_path, fnv64_file(trace_path)};
}

inline RunResult evaluate_volte(const RunConfig& cfg, const QTable* table,
                                const std::string& out_dir, const std::string& run_id,
                                bool emit_plot_data = false) {
    if (cfg.algorithm == "proposed" && table == nullptr)
        throw std::invalid_argument("evaluate_volte: proposed needs a checkpoint");
    std::filesystem::create_directories(out_dir);
    detail::Stopwatch clock;
    VolteEnv env(cfg.to_volte_params(), static_cast<std::uint64_t>(cfg.seed));

    const std::string trace_path = detail::join_path(out_dir, "eval_trace.csv");
    TraceWriter trace(trace_path, "gamma_eff_db");

    const MosTable mos_table =
        cfg.mos_table_file.empty() ? MosTable() : MosTable::from_file(cfg.mos_table_file);
    std::vector<double> pooled_sinr;
    std::vector<double> pooled_ue_thpt;
    std::vector<double> episode_mos;
    double cell_thpt_acc = 0.0;
    long met = 0;
    long commands = 0;
    long below = 0;
    long slots = 0;
    std::ofstream plot;
    if (emit_plot_data) {
        plot.open(detail::join_path(out_dir, "plot_gamma_vs_tti.csv"));
        plot << "algorithm,episode,tti,gamma_eff_db\n";
    }

    for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(cfg.eval_episodes); ++k) {
        const std::uint64_t ep = kEvalEpisodeBase + k;
        std::vector<std::pair<int, double>> series;
        VolteEpisodeStats st =
            run_volte_episode(env, ep, cfg.algorithm, table, cfg, &trace, run_id,
                              emit_plot_data && k == 0 ? &series : nullptr);
        pooled_sinr.insert(pooled_sinr.end(), st.ue_sinr_db.begin(), st.ue_sinr_db.end());
        pooled_ue_thpt.insert(pooled_ue_thpt.end(), st.ue_mean_thpt_mbps.begin(),
                              st.ue_mean_thpt_mbps.end());
        episode_mos.push_back(mos(std::min(st.mean_per, 1.0), cfg.activity_factor,
                                  cfg.voice_bitrate_kbps, mos_table));
        cell_thpt_acc += st.cell_thpt_mbps;
        met += st.target_met ? 1 : 0;
        commands += st.power_commands;
        below += st.below_threshold;
        slots += st.frame_slots;
        for (auto& [tti, g] : series) plot << cfg.algorithm << "," << ep << "," << tti << "," << g
                                           << "\n";
    }
    trace.close();

    RunResult res;
    // drop fraction over the full tau-by-N_UE frame; TTIs after the target is
    // met carry no drops (the loop has converged and holds the grant)
    res.metrics.retainability = 1.0 - static_cast<double>(below) / static_cast<double>(slots);
    double mos_acc = 0.0;
    for (double m : episode_mos) mos_acc += m;
    res.metrics.mos = mos_acc / static_cast<double>(episode_mos.size());
    const auto pct = throughput_percentiles(pooled_ue_thpt);
    res.metrics.ue_throughput_peak_mbps = pct.peak_mbps;
    res.metrics.ue_throughput_avg_mbps = pct.avg_mbps;
    res.metrics.ue_throughput_edge_mbps = pct.edge_mbps;
    res.metrics.avg_cell_throughput_mbps = cell_thpt_acc / static_cast<double>(cfg.eval_episodes);
    double se_acc = 0.0;
    for (double s : pooled_sinr) se_acc += std::min(std::log2(1.0 + db_to_linear(s)), 2.0);
    res.metrics.avg_spectral_efficiency = se_acc / static_cast<double>(pooled_sinr.size());
    res.metrics.target_attainment =
        static_cast<double>(met) / static_cast<double>(cfg.eval_episodes);
    res.metrics.power_commands = commands;
    res.trace_path = trace_path;
    res.trace_digest = fnv64_file(trace_path);
    res.wall_seconds = clock.seconds();
    return res;
}

// ---------------------------------------------------------------------------
// SON fault management
// ---------------------------------------------------------------------------

// Picks the proposed agent's action. The SON dispatcher validates corrective
// commands against the live alarm register before execution: a command whose
// alarm is not raised is replaced by the best valid one.
inline int son_proposed_action(const DqnModel& model, const SonEnv& env, EpsilonSchedule& sched,
                               RngStream& rng, bool validate) {
    std::vector<double> row = model.forward_state(env.state());
    std::vector<int> valid;
    for (int a = 1; a < 5; ++a)
        if (env.events().fault_active(son_actions::kFaultForAction[a])) valid.push_back(a);
    if (!validate || valid.empty()) return select_action(row, sched, rng);

    std::vector<double> masked(row.size(), -1e300);
    for (int a : valid) masked[static_cast<std::size_t>(a)] = row[static_cast<std::size_t>(a)];
    const int chosen = select_action(masked, sched, rng);
    bool ok = false;
    for (int a : valid) ok |= (a == chosen);
    return ok ? chosen : argmax_lowest(masked);
}

struct SonTrainArtifacts {
    DqnModel model;
    std::string trace_path;
    std::string trace_digest;
};

inline SonTrainArtifacts train_son(const RunConfig& cfg, const std::string& out_dir,
                                   const std::string& run_id) {
    std::filesystem::create_directories(out_dir);
    SonEnv env(cfg.to_son_params(), static_cast<std::uint64_t>(cfg.seed));
    DqnModel model(env.spec().state_count, static_cast<int>(cfg.hidden_width),
                   env.spec().action_count, cfg.eta, cfg.discount);
    model.set_moment_constants(cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    RngStream init_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "agent-init", 0);
    model.init_weights(init_rng);
    ReplayMemory replay(static_cast<std::size_t>(cfg.replay_capacity),
                        static_cast<std::size_t>(cfg.batch_size));
    EpsilonSchedule sched{cfg.epsilon, cfg.epsilon_decay, cfg.epsilon_min};
    sched.validate();
    RngStream agent_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "agent", 0);

    const std::string trace_path = detail::join_path(out_dir, "train_trace.csv");
    TraceWriter trace(trace_path, "popcount");
    for (std::uint64_t ep = 0; ep < static_cast<std::uint64_t>(cfg.train_episodes); ++ep) {
        int state = env.reset(ep);
        while (!env.terminal()) {
            const auto row = model.forward_state(state);
            const int action = select_action(row, sched, agent_rng);
            const StepOutcome out = env.step(action);
            replay.push({state, action, out.reward, out.state, out.terminal});
            if (replay.size() >= replay.batch_size()) model.train_step(replay, agent_rng);
            trace.row(run_id, ep, out, static_cast<double>(out.popcount), sched.epsilon);
            state = out.state;
        }
    }
    trace.close();
    return {std::move(model), trace_path, fnv64_file(trace_path)};
}

struct SonEpisodeStats {
    std::vector<double> ue_sinr_db;
    std::vector<double> se_samples;
    std::vector<double> ue_mean_thpt_mbps;
    double cell_thpt_mbps = 0.0;
    bool cleared = false;
};

inline SonEpisodeStats run_son_episode(SonEnv& env, std::uint64_t episode,
                                       const std::string& algorithm, const DqnModel* model,
                                       const RunConfig& cfg, TraceWriter* trace,
                                       const std::string& run_id) {
    env.reset(episode);
    RngStream agent_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "agent-eval", episode);
    RngStream channel_rng = make_stream(static_cast<std::uint64_t>(cfg.seed), "channel", episode);
    EpsilonSchedule greedy = EpsilonSchedule::greedy(cfg.epsilon_min);
    FifoClear fifo(env.fault_register().size());

    const int q = env.n_ues();
    const int n_rx = static_cast<int>(cfg.n_rx_antennas);
    const int n_tx = static_cast<int>(cfg.n_tx_antennas);
    const double share_hz = cfg.bandwidth_hz / static_cast<double>(q);
    SonEpisodeStats stats;
    std::vector<double> thpt_acc(static_cast<std::size_t>(q), 0.0);

    auto sample_tti = [&](const std::vector<double>& sinr_db) {
        for (int i = 0; i < q; ++i) {
            const double db = sinr_db[static_cast<std::size_t>(i)];
            const double lin = db_to_linear(db);
            stats.ue_sinr_db.push_back(db);
            std::vector<std::vector<double>> h(static_cast<std::size_t>(n_rx),
                                               std::vector<double>(static_cast<std::size_t>(n_tx)));
            const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
            for (auto& rowv : h)
                for (auto& x : rowv) x = scale * channel_rng.gaussian();
            const double se =
                spectral_efficiency(h, lin, 1.0, static_cast<int>(cfg.modulation_order));
            stats.se_samples.push_back(se);
            const double per =
                qpsk_packet_error_rate(lin, static_cast<int>(cfg.data_symbols_per_packet));
            thpt_acc[static_cast<std::size_t>(i)] += se * share_hz * (1.0 - per) / 1e6;
        }
    };

    while (!env.terminal()) {
        int action = 0;
        if (algorithm == "proposed") {
            action = son_proposed_action(*model, env, greedy, agent_rng, cfg.validate_son_actions);
        } else if (algorithm == "random") {
            const int fault = random_clear(env.fault_register(), agent_rng);
            action = fault < 0 ? 0 : son_actions::action_for_fault(fault);
        } else if (algorithm == "fifo") {
            const int fault = fifo.next(env.fault_register());
            action = fault < 0 ? 0 : son_actions::action_for_fault(fault);
        }
        const StepOutcome out = env.step(action);
        if (trace) trace->row(run_id, episode, out, static_cast<double>(out.popcount),
                              greedy.epsilon);
        sample_tti(env.per_ue_sinr_db());
    }
    stats.cleared = env.popcount() == 0;

    // The corrective objective is met; the rest of the frame runs fault-free.
    for (int t = env.tti() + 1; t <= env.params().horizon; ++t) sample_tti(env.per_ue_sinr_db());

    const double horizon = static_cast<double>(env.params().horizon);
    for (int i = 0; i < q; ++i) {
        stats.ue_mean_thpt_mbps.push_back(thpt_acc[static_cast<std::size_t>(i)] / horizon);
        stats.cell_thpt_mbps += thpt_acc[static_cast<std::size_t>(i)] / horizon;
    }
    return stats;
}

inline RunResult evaluate_son(const RunConfig& cfg, const DqnModel* model,
                              const std::string& out_dir, const std::string& run_id) {
    if (cfg.algorithm == "proposed" && model == nullptr)
        throw std::invalid_argument("evaluate_son: proposed needs a checkpoint");
    std::filesystem::create_directories(out_dir);
    detail::Stopwatch clock;
    SonEnv env(cfg.to_son_params(), static_cast<std::uint64_t>(cfg.seed));

    const std::string trace_path = detail::join_path(out_dir, "eval_trace.csv");
    TraceWriter trace(trace_path, "popcount");

    std::vector<double> pooled_sinr;
    std::vector<double> pooled_thpt;
    double se_acc = 0.0;
    long se_count = 0;
    double cell_acc = 0.0;
    double per_acc = 0.0;
    long per_count = 0;

    for (std::uint64_t k = 0; k < static_cast<std::uint64_t>(cfg.eval_episodes); ++k) {
        const std::uint64_t ep = kEvalEpisodeBase + k;
        SonEpisodeStats st = run_son_episode(env, ep, cfg.algorithm, model, cfg, &trace, run_id);
        pooled_sinr.insert(pooled_sinr.end(), st.ue_sinr_db.begin(), st.ue_sinr_db.end());
        pooled_thpt.insert(pooled_thpt.end(), st.ue_mean_thpt_mbps.begin(),
                           st.ue_mean_thpt_mbps.end());
        for (double s : st.se_samples) se_acc += s;
        se_count += static_cast<long>(st.se_samples.size());
        cell_acc += st.cell_thpt_mbps;
        for (double s : st.ue_sinr_db) {
            per_acc += qpsk_packet_error_rate(db_to_linear(s),
                                              static_cast<int>(cfg.data_symbols_per_packet));
            ++per_count;
        }
    }
    trace.close();

    RunResult res;
    res.metrics.retainability = retainability(pooled_sinr, cfg.gamma_min_db);
    const MosTable mos_table =
        cfg.mos_table_file.empty() ? MosTable() : MosTable::from_file(cfg.mos_table_file);
    res.metrics.mos = mos(std::min(per_acc / static_cast<double>(per_count), 1.0),
                          cfg.activity_factor, cfg.voice_bitrate_kbps, mos_table);
    const auto pct = throughput_percentiles(pooled_thpt);
    res.metrics.ue_throughput_peak_mbps = pct.peak_mbps;
    res.metrics.ue_throughput_avg_mbps = pct.avg_mbps;
    res.metrics.ue_throughput_edge_mbps = pct.edge_mbps;
    res.metrics.avg_cell_throughput_mbps = cell_acc / static_cast<double>(cfg.eval_episodes);
    res.metrics.avg_spectral_efficiency = se_acc / static_cast<double>(se_count);
    res.metrics.target_attainment = 0.0;
    res.trace_path = trace_path;
    res.trace_digest = fnv64_file(trace_path);
    res.wall_seconds = clock.seconds();
    return res;
}

// ---------------------------------------------------------------------------
// Entry points shared by the CLI and the acceptance suite
// ---------------------------------------------------------------------------

inline RunResult train(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    detail::Stopwatch clock;
    const std::string run_id = cfg.env_kind + "-train-seed" + std::to_string(cfg.seed);
    RunResult res;
    if (cfg.env_kind == "volte") {
        VolteTrainArtifacts art = train_volte(cfg, out_dir, run_id);
        res.checkpoint_path = detail::join_path(out_dir, "qtable.csv");
        art.table.save_csv(res.checkpoint_path, cfg.seed);
        res.trace_path = art.trace_path;
        res.trace_digest = art.trace_digest;
    } else {
        SonTrainArtifacts art = train_son(cfg, out_dir, run_id);
        res.checkpoint_path = detail::join_path(out_dir, "dqn.txt");
        art.model.save(res.checkpoint_path, cfg.seed);
        res.trace_path = art.trace_path;
        res.trace_digest = art.trace_digest;
    }
    res.wall_seconds = clock.seconds();
    return res;
}

inline RunResult evaluate(const RunConfig& cfg, const std::string& checkpoint_path,
                          const std::string& out_dir, bool emit_plot_data = false) {
    cfg.validate();
    const std::string run_id = cfg.env_kind + "-eval-" + cfg.algorithm;
    if (cfg.env_kind == "volte") {
        std::unique_ptr<QTable> table;
        if (cfg.algorithm == "proposed") {
            table = std::make_unique<QTable>(QTable::load_csv(checkpoint_path));
            if (table->n_states() != 3 || table->n_actions() != 5)
                throw std::invalid_argument("evaluate: Q-table shape does not match the environment");
        }
        return evaluate_volte(cfg, table.get(), out_dir, run_id, emit_plot_data);
    }
    std::unique_ptr<DqnModel> model;
    if (cfg.algorithm == "proposed") {
        model = std::make_unique<DqnModel>(DqnModel::load(checkpoint_path));
        if (model->n_inputs() != 3 || model->n_outputs() != 5 ||
            model->n_hidden() != static_cast<int>(cfg.hidden_width))
            throw std::invalid_argument("evaluate: DQN shape does not match the configuration");
    }
    return evaluate_son(cfg, model.get(), out_dir, run_id);
}

inline void write_metrics_csv(const std::string& path, const std::string& run_id,
                              const std::string& algorithm, long long q,
                              const MetricsReport& m, bool header) {
    std::ofstream out(path, header ? std::ios::trunc : std::ios::app);
    if (!out) throw std::runtime_error("write_metrics_csv: cannot write " + path);
    if (header)
        out << "run_id,algorithm,q,retainability,mos,target_attainment,power_commands,"
               "ue_thpt_peak_mbps,ue_thpt_avg_mbps,ue_thpt_edge_mbps,cell_thpt_mbps,avg_se\n";
    out << run_id << "," << algorithm << "," << q << "," << m.retainability << "," << m.mos << ","
        << m.target_attainment << "," << m.power_commands << "," << m.ue_throughput_peak_mbps
        << "," << m.ue_throughput_avg_mbps << "," << m.ue_throughput_edge_mbps << ","
        << m.avg_cell_throughput_mbps << "," << m.avg_spectral_efficiency << "\n";
}

// One row per (algorithm, q, metric) in sweep.csv, plus a formatted side
// table with one algorithm block per column.
inline void sweep_son(const RunConfig& base, const std::vector<long long>& q_values,
                      const std::vector<std::string>& algorithms, const std::string& out_dir) {
    base.validate();
    std::filesystem::create_directories(out_dir);
    RunConfig train_cfg = base;
    train_cfg.algorithm = "proposed";
    const RunResult trained = train(train_cfg, out_dir);

    std::ofstream out(detail::join_path(out_dir, "sweep.csv"));
    if (!out) throw std::runtime_error("sweep_son: cannot write sweep.csv");
    out << "algorithm,q,metric,value\n";
    std::map<std::pair<long long, std::string>, MetricsReport> grid;
    for (long long q : q_values) {
        for (const auto& algo : algorithms) {
            RunConfig cfg = base;
            cfg.q_ues = q;
            cfg.algorithm = algo;
            const std::string dir =
                detail::join_path(out_dir, algo + "_q" + std::to_string(q));
            const RunResult r = evaluate(cfg, trained.checkpoint_path, dir);
            const auto& m = r.metrics;
            grid[{q, algo}] = m;
            out << algo << "," << q << ",ue_thpt_peak_mbps," << m.ue_throughput_peak_mbps << "\n";
            out << algo << "," << q << ",ue_thpt_avg_mbps," << m.ue_throughput_avg_mbps << "\n";
            out << algo << "," << q << ",ue_thpt_edge_mbps," << m.ue_throughput_edge_mbps << "\n";
            out << algo << "," << q << ",cell_thpt_mbps," << m.avg_cell_throughput_mbps << "\n";
            out << algo << "," << q << ",avg_se," << m.avg_spectral_efficiency << "\n";
        }
    }

    std::ofstream tab(detail::join_path(out_dir, "sweep_table.txt"));
    tab << "UEs  metric                        ";
    for (const auto& algo : algorithms) {
        char head[64];
        std::snprintf(head, sizeof head, " | %-8s peak    avg   edge", algo.c_str());
        tab << head;
    }
    tab << "\n";
    for (long long q : q_values) {
        auto line = [&](const char* label, auto pick3) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "q=%-3lld %-28s", q, label);
            tab << buf;
            for (const auto& algo : algorithms) {
                const auto& m = grid[{q, algo}];
                const auto [peak, avg, edge] = pick3(m);
                if (std::isnan(peak))
                    std::snprintf(buf, sizeof buf, " | %8s  -  %6.2f    -  ", "", avg);
                else
                    std::snprintf(buf, sizeof buf, " | %8s %5.2f %6.2f %5.2f", "", peak, avg,
                                  edge);
                tab << buf;
            }
            tab << "\n";
        };
        const double nan = std::nan("");
        line("UE throughput [Mbps]", [](const MetricsReport& m) {
            return std::tuple{m.ue_throughput_peak_mbps, m.ue_throughput_avg_mbps,
                              m.ue_throughput_edge_mbps};
        });
        line("avg cell throughput [Mbps]", [nan](const MetricsReport& m) {
            return std::tuple{nan, m.avg_cell_throughput_mbps, nan};
        });
        line("avg SE of UEs [bits/c.u.]", [nan](const MetricsReport& m) {
            return std::tuple{nan, m.avg_spectral_efficiency, nan};
        });
    }
}

}  // namespace celltune
