#pragma once

#include <cmath>
#include <deque>
#include <span>
#include <stdexcept>
#include <vector>

#include "celltune/env.hpp"
#include "celltune/events.hpp"
#include "celltune/radio.hpp"
#include "celltune/rng.hpp"

namespace celltune {

enum class BaselineKind { FPA, MaxSinr, RandomClear, FifoClear };

// Fixed power allocation: the total BS power split equally across PRBs, so a
// user holding n of them gets P_max - 10 log10(N_PRB) + 10 log10(n). Constant
// over the episode; no power commands are ever issued.
inline double fpa_tx_power_dbm(const RadioConfig& config, int n_prb_ue) {
    if (n_prb_ue < 1 || n_prb_ue > config.n_prb)
        throw std::invalid_argument("fpa_tx_power_dbm: PRB allocation outside [1, N_PRB]");
    return config.max_bs_power_dbm - 10.0 * std::log10(static_cast<double>(config.n_prb)) +
           10.0 * std::log10(static_cast<double>(n_prb_ue));
}

struct MaxSinrSolution {
    double p_star_dbm = 0.0;
    int t_star = 0;
    double xi_db = 0.0;  // foreseen SINR improvement above the baseline
};

// Foresight power for the infeasible greedy upper bound: with the episode's
// SINR trajectory known ahead of time, pick the best improvement over t=0 and
// raise the starting power by exactly that margin (no upper clamp applies).
inline MaxSinrSolution max_sinr_power(std::span<const double> foreseen_sinr_db,
                                      double initial_power_dbm) {
    if (foreseen_sinr_db.empty()) throw std::invalid_argument("max_sinr_power: empty trace");
    int t_star = 0;
    for (int t = 1; t < static_cast<int>(foreseen_sinr_db.size()); ++t)
        if (foreseen_sinr_db[static_cast<std::size_t>(t)] >
            foreseen_sinr_db[static_cast<std::size_t>(t_star)])
            t_star = t;
    MaxSinrSolution out;
    out.t_star = t_star;
    out.xi_db = foreseen_sinr_db[static_cast<std::size_t>(t_star)] - foreseen_sinr_db[0];
    out.p_star_dbm = initial_power_dbm + out.xi_db;
    return out;
}

// Uniform draw over the active alarms; -1 when the register is empty.
inline int random_clear(const FaultRegister& reg, RngStream& rng) {
    const auto active = reg.active_ids();
    if (active.empty()) return -1;
    return active[rng.uniform_index(active.size())];
}

// First-in first-out fault handling: clears the oldest still-active alarm in
// the next TTI; alarms cleared by other means are skipped as the queue pops.
class FifoClear {
  public:
    explicit FifoClear(int n_slots) : seen_(static_cast<std::size_t>(n_slots), 0) {}

    // Returns the fault id to clear next, or -1 when nothing is pending.
    int next(const FaultRegister& reg) {
        sync(reg);
        while (!queue_.empty() && !reg.test(queue_.front())) queue_.pop_front();
        for (int id : reg.active_ids()) {
            bool queued = false;
            for (int q : queue_) queued |= (q == id);
            if (!queued)
                throw std::logic_error("FifoClear: register and arrival queue out of sync");
        }
        return queue_.empty() ? -1 : queue_.front();
    }

  private:
    void sync(const FaultRegister& reg) {
        for (int id = 0; id < reg.size(); ++id) {
            const bool now = reg.test(id);
            if (now && !seen_[static_cast<std::size_t>(id)]) queue_.push_back(id);
            seen_[static_cast<std::size_t>(id)] = now ? 1 : 0;
        }
    }

    std::deque<int> queue_;
    std::vector<std::uint8_t> seen_;
};

}  // namespace celltune
