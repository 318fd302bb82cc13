#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "celltune/events.hpp"
#include "celltune/placement.hpp"
#include "celltune/radio.hpp"
#include "celltune/rng.hpp"

namespace celltune {

// Both environments share the same contract: 3 states, 5 actions, a fixed
// TTI horizon, reset() -> state, step(action) -> (state, reward, terminal).
struct EnvSpec {
    int state_count = 3;
    int action_count = 5;
    int horizon = 20;
};

struct StepOutcome {
    int state = 0;
    double reward = 0.0;
    bool terminal = false;
    bool target_met = false;
    int event_id = 0;
    double event_delta_db = 0.0;
    double gamma_eff_db = 0.0;
    int popcount = 0;
    int action = 0;
    int tti = 0;
};

namespace volte_actions {
// Table of (repetition count kappa, power command direction).
inline constexpr int kKappa[5] = {0, 3, 1, 1, 3};
inline constexpr int kCommand[5] = {0, -1, -1, +1, +1};
// State after executing an action: none -> s0, down -> s2, up -> s1.
inline constexpr int kNextState[5] = {0, 2, 2, 1, 1};
}  // namespace volte_actions

struct VolteParams {
    RadioConfig radio{};
    double cell_size_m = 10.0;
    double ppp_intensity = 0.5;
    int ue_cap = 10;
    EventRates rates = EventRates::indoor_default();
    int horizon = 20;
    int scheduler_period = 20;
    int reward_lag_ttis = 1;  // the per-TTI loop compares one step back
    double gamma0_db = 4.0;
    double target_db = 6.0;
    double r_min = -50.0;
    double r_max = 50.0;
    double vswr_nominal = 1.5;
    double vswr_max = 3.0;
    int n_prb_per_ue = 1;
};

// Indoor VoLTE closed-loop power control environment. Per TTI one user is
// scheduled round-robin; the action adjusts that user's transmit power under
// the max-power clamp, one network event fires, and the reward follows the
// effective-SINR change against the lagged reference sample.
class VolteEnv {
  public:
    VolteEnv(VolteParams params, std::uint64_t master_seed)
        : params_(std::move(params)), seed_(master_seed),
          topology_(Topology::indoor_square(params_.cell_size_m)),
          engine_(EventCatalog::indoor(), params_.rates) {
        params_.radio.validate();
        topology_.validate();
    }

    EnvSpec spec() const { return {3, 5, params_.horizon}; }

    int reset(std::uint64_t episode) {
        episode_ = episode;
        events_rng_ = make_stream(seed_, "events", episode);
        RngStream placement_rng = make_stream(seed_, "placement", episode);
        ue_positions_ = place_users_indoor(params_.ppp_intensity, params_.cell_size_m,
                                           params_.ue_cap, placement_rng);
        const std::size_t n = ue_positions_.size();
        serving_pl_db_.assign(n, 0.0);
        interferer_rx_mw_.assign(n, {});
        tx_power_dbm_.assign(n, params_.radio.initial_tx_power_dbm);

        // Neighbors stay at the equal-split per-allocation power.
        const double neighbor_tx_dbm = params_.radio.max_bs_power_dbm -
                                       10.0 * std::log10(static_cast<double>(params_.radio.n_prb)) +
                                       10.0 * std::log10(static_cast<double>(params_.n_prb_per_ue));
        noise_mw_ = params_.radio.noise_mw_over(180e3 * params_.n_prb_per_ue);
        for (std::size_t i = 0; i < n; ++i) {
            serving_pl_db_[i] = path_loss_db(PropagationEnv::Indoor,
                                             std::max(distance_m(ue_positions_[i], {0, 0}), 1.0),
                                             params_.radio);
            for (const auto& nbr : topology_.neighbor_positions) {
                const double pl = path_loss_db(
                    PropagationEnv::Indoor, std::max(distance_m(ue_positions_[i], nbr), 1.0),
                    params_.radio);
                interferer_rx_mw_[i].push_back(
                    dbm_to_mw(received_power_dbm(neighbor_tx_dbm, pl, params_.radio)));
            }
        }

        engine_ = EventEngine(EventCatalog::indoor(), params_.rates);
        event_shift_db_ = 0.0;
        calibration_db_ = 0.0;
        calibration_db_ = params_.gamma0_db - effective_sinr_now();

        tti_ = 0;
        cursor_ = 0;
        state_ = 0;
        terminal_ = false;
        target_met_ = false;
        power_commands_ = 0;
        history_.assign(1, params_.gamma0_db);
        return state_;
    }

    StepOutcome step(int action) {
        if (terminal_) throw std::logic_error("VolteEnv: step after terminal");
        if (action < 0 || action >= 5) throw std::invalid_argument("VolteEnv: invalid action id");
        ++tti_;

        const int kappa = volte_actions::kKappa[action];
        const int pc = volte_actions::kCommand[action];
        const int ue = cursor_;
        cursor_ = (cursor_ + 1) % static_cast<int>(ue_positions_.size());
        if (pc != 0) {
            const double requested = tx_power_dbm_[static_cast<std::size_t>(ue)] + kappa * pc;
            tx_power_dbm_[static_cast<std::size_t>(ue)] =
                std::min(params_.radio.max_bs_power_dbm, requested);
            ++power_commands_;
        }
        // target infeasible by power: every user already rides the cap
        bool exhausted = true;
        for (double p : tx_power_dbm_)
            exhausted &= p >= params_.radio.max_bs_power_dbm - 1e-12;

        const NetworkEvent& ev = engine_.sample(events_rng_);
        const double param_u = events_rng_.uniform();  // fixed draw budget per TTI
        EventContext ctx = make_context(param_u);
        const double event_delta = engine_.apply(ev, ctx);
        event_shift_db_ += event_delta;

        const double gamma = effective_sinr_now();
        const int lag_index = std::max(tti_ - params_.reward_lag_ttis, 0);
        const double gamma_lag = history_[static_cast<std::size_t>(lag_index)];

        double reward;
        if (gamma >= params_.target_db - 1e-12) {
            reward = params_.r_max;
            target_met_ = true;
            terminal_ = true;
        } else if (exhausted) {
            reward = params_.r_min;  // power exhausted below target
        } else if (tti_ >= params_.scheduler_period && 2 * tti_ < params_.horizon &&
                   std::fabs(gamma - history_[static_cast<std::size_t>(
                                 tti_ - params_.scheduler_period)]) < 1e-12) {
            reward = params_.r_min;  // no net progress over a full scheduler period
        } else if (gamma > gamma_lag + 1e-12) {
            reward = 1.0;
        } else if (gamma < gamma_lag - 1e-12) {
            reward = -1.0;
        } else {
            reward = 0.0;
        }
        if (tti_ >= params_.horizon) terminal_ = true;

        state_ = volte_actions::kNextState[action];
        history_.push_back(gamma);

        StepOutcome out;
        out.state = state_;
        out.reward = reward;
        out.terminal = terminal_;
        out.target_met = target_met_;
        out.event_id = ev.event_id;
        out.event_delta_db = event_delta;
        out.gamma_eff_db = gamma;
        out.popcount = engine_.popcount();
        out.action = action;
        out.tti = tti_;
        return out;
    }

    // Direct power setting used by the foresight baseline; bypasses the
    // closed-loop clamp (its power is unbounded above).
    void override_tx_power_dbm(int ue, double dbm) {
        if (tti_ > 0 && std::fabs(tx_power_dbm_.at(static_cast<std::size_t>(ue)) - dbm) > 1e-12)
            ++power_commands_;
        tx_power_dbm_.at(static_cast<std::size_t>(ue)) = dbm;
    }

    std::vector<double> per_ue_sinr_db() const {
        std::vector<double> out(ue_positions_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = ue_sinr_db(static_cast<int>(i));
        return out;
    }

    double ue_sinr_db(int i) const {
        const auto idx = static_cast<std::size_t>(i);
        const double rx_dbm =
            received_power_dbm(tx_power_dbm_[idx], serving_pl_db_[idx], params_.radio);
        const SinrSample s = sinr(i, dbm_to_mw(rx_dbm), interferer_rx_mw_[idx], noise_mw_,
                                  params_.radio, tti_);
        return s.sinr_db + calibration_db_ + event_shift_db_;
    }

    double gamma_eff_db() const { return history_.back(); }
    int state() const { return state_; }
    int tti() const { return tti_; }
    bool terminal() const { return terminal_; }
    bool target_met() const { return target_met_; }
    int n_ues() const { return static_cast<int>(ue_positions_.size()); }
    long power_commands() const { return power_commands_; }
    double tx_power_dbm(int ue) const { return tx_power_dbm_.at(static_cast<std::size_t>(ue)); }
    double event_shift_db() const { return event_shift_db_; }
    const EventEngine& events() const { return engine_; }
    const VolteParams& params() const { return params_; }

  private:
    double effective_sinr_now() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < ue_positions_.size(); ++i)
            acc += db_to_linear(ue_sinr_db(static_cast<int>(i)));
        return linear_to_db(acc / static_cast<double>(ue_positions_.size()));
    }

    double mean_serving_rx_mw() const {
        double acc = 0.0;
        for (std::size_t i = 0; i < ue_positions_.size(); ++i)
            acc += dbm_to_mw(
                received_power_dbm(tx_power_dbm_[i], serving_pl_db_[i], params_.radio));
        return acc / static_cast<double>(ue_positions_.size());
    }

    EventContext make_context(double param_u) const {
        EventContext ctx;
        const int lag_index = std::max(tti_ - params_.scheduler_period, 0);
        ctx.gamma_eff_lag_db = history_[static_cast<std::size_t>(lag_index)];
        ctx.serving_rx_power_mw = mean_serving_rx_mw();
        ctx.noise_mw = noise_mw_;
        ctx.n_cells = topology_.n_cells();
        ctx.radio = &params_.radio;
        ctx.vswr_nominal = params_.vswr_nominal;
        ctx.vswr_drawn =
            params_.vswr_nominal + (params_.vswr_max - params_.vswr_nominal) * param_u;
        const std::size_t n_nbr = topology_.neighbor_positions.size();
        const auto downed = std::min(n_nbr - 1, static_cast<std::size_t>(param_u * n_nbr));
        ctx.neighbor_removal_gain_db = neighbor_removal_gain_db(downed);
        return ctx;
    }

    // Effective-SINR gain if neighbor j stopped transmitting, at the current
    // powers. Uniform calibration and event shifts cancel in the difference.
    double neighbor_removal_gain_db(std::size_t j) const {
        double with_acc = 0.0;
        double without_acc = 0.0;
        for (std::size_t i = 0; i < ue_positions_.size(); ++i) {
            const double rx_dbm =
                received_power_dbm(tx_power_dbm_[i], serving_pl_db_[i], params_.radio);
            const double serving_mw = dbm_to_mw(rx_dbm);
            const SinrSample with_all =
                sinr(static_cast<int>(i), serving_mw, interferer_rx_mw_[i], noise_mw_,
                     params_.radio);
            std::vector<double> rest = interferer_rx_mw_[i];
            rest.erase(rest.begin() + static_cast<long>(j));
            const SinrSample without =
                sinr(static_cast<int>(i), serving_mw, rest, noise_mw_, params_.radio);
            with_acc += with_all.sinr_linear;
            without_acc += without.sinr_linear;
        }
        return linear_to_db(without_acc) - linear_to_db(with_acc);
    }

    VolteParams params_;
    std::uint64_t seed_;
    std::uint64_t episode_ = 0;
    Topology topology_;
    EventEngine engine_;
    RngStream events_rng_;

    std::vector<Position> ue_positions_;
    std::vector<double> serving_pl_db_;
    std::vector<std::vector<double>> interferer_rx_mw_;
    std::vector<double> tx_power_dbm_;
    std::vector<double> history_;
    double noise_mw_ = 1.0;
    double calibration_db_ = 0.0;
    double event_shift_db_ = 0.0;
    int tti_ = 0;
    int cursor_ = 0;
    int state_ = 0;
    bool terminal_ = false;
    bool target_met_ = false;
    long power_commands_ = 0;
};

namespace son_actions {
// Corrective action -> fault class it clears (0 is the no-op).
inline constexpr int kFaultForAction[5] = {-1, 2, 3, 4, 1};

inline int action_for_fault(int fault_id) {
    for (int a = 1; a < 5; ++a)
        if (kFaultForAction[a] == fault_id) return a;
    throw std::invalid_argument("son_actions: no corrective action for fault id");
}
}  // namespace son_actions

struct SonParams {
    RadioConfig radio{};
    double inter_site_distance_m = 200.0;
    AntennaPattern pattern{65.0, 20.0, 0.0};
    double shadow_sigma_db = 8.0;
    int q_ues = 10;
    EventRates rates = EventRates::outdoor_default();
    int horizon = 10;
    double r_max = 50.0;
    bool seed_initial_fault = true;
    double azimuth_draw_deg = 30.0;
    int rank_reduced = 2;
    double min_ue_distance_m = 10.0;

    static RadioConfig default_radio() {
        RadioConfig r;
        r.max_bs_power_dbm = 46.0;
        r.initial_tx_power_dbm = 46.0;
        r.tx_antenna_gain_dbi = 17.0;
        r.ue_antenna_gain_dbi = -1.0;
        r.misc_loss_db = 2.0;  // feeder plus fixed electrical tilt
        r.noise_density_dbm_per_hz = -174.0;
        r.bandwidth_hz = 10e6;
        r.n_prb = 50;
        r.carrier_freq_mhz = 2100.0;
        r.bs_height_m = 25.0;
        r.ue_height_m = 1.5;
        r.n_tx_antennas = 4;
        r.n_rx_antennas = 2;
        return r;
    }
};

// Outdoor SON fault-management environment over a 7-site, 3-sector cluster.
// Actions clear one fault class each; one background event fires per TTI;
// rewards follow the alarm count, the episode ends on an empty register.
class SonEnv {
  public:
    SonEnv(SonParams params, std::uint64_t master_seed)
        : params_(std::move(params)), seed_(master_seed),
          topology_(Topology::outdoor_hex(params_.inter_site_distance_m)),
          engine_(EventCatalog::outdoor(), params_.rates) {
        params_.radio.validate();
        topology_.validate();
        params_.pattern.validate();
    }

    EnvSpec spec() const { return {3, 5, params_.horizon}; }

    int n_sectors_total() const { return topology_.n_cells() * 3; }

    int reset(std::uint64_t episode) {
        episode_ = episode;
        events_rng_ = make_stream(seed_, "events", episode);
        RngStream placement_rng = make_stream(seed_, "placement", episode);
        RngStream shadow_rng = make_stream(seed_, "shadow", episode);

        const double cell_radius = params_.inter_site_distance_m / std::sqrt(3.0);
        ue_positions_ = place_users_hex_sector(params_.q_ues, cell_radius,
                                               params_.min_ue_distance_m, 0.0, placement_rng);

        // Sites: serving at the origin plus six neighbors; three sectors each.
        std::vector<Position> sites = {topology_.serving_position};
        sites.insert(sites.end(), topology_.neighbor_positions.begin(),
                     topology_.neighbor_positions.end());

        const double per_prb_tx_dbm = params_.radio.max_bs_power_dbm -
                                      10.0 * std::log10(static_cast<double>(params_.radio.n_prb));
        noise_mw_ = params_.radio.noise_mw_over(180e3);

        const std::size_t n = ue_positions_.size();
        base_sinr_db_.assign(n, 0.0);
        base_serving_rx_mw_.assign(n, 0.0);
        interferer_rx_mw_.assign(n, {});
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double>& interferers = interferer_rx_mw_[i];
            double serving_rx_mw = 0.0;
            for (std::size_t s = 0; s < sites.size(); ++s) {
                const double shadow_db = params_.shadow_sigma_db * shadow_rng.gaussian();
                const double d = std::max(distance_m(ue_positions_[i], sites[s]), 1.0);
                const double pl = path_loss_db(PropagationEnv::Outdoor, d, params_.radio);
                const double bearing_deg =
                    std::atan2(ue_positions_[i].y - sites[s].y, ue_positions_[i].x - sites[s].x) *
                    180.0 / 3.14159265358979323846;
                for (int sec = 0; sec < 3; ++sec) {
                    const double boresight = 120.0 * sec;
                    double off = std::fmod(bearing_deg - boresight + 540.0, 360.0) - 180.0;
                    const double gain = azimuth_gain_db(params_.pattern, off);
                    const double rx = per_prb_tx_dbm + params_.radio.tx_antenna_gain_dbi + gain -
                                      params_.radio.misc_loss_db - pl +
                                      params_.radio.ue_antenna_gain_dbi - shadow_db;
                    if (s == 0 && sec == 0) {
                        serving_rx_mw = dbm_to_mw(rx);
                    } else {
                        interferers.push_back(dbm_to_mw(rx));
                    }
                }
            }
            base_serving_rx_mw_[i] = serving_rx_mw;
            base_sinr_db_[i] =
                sinr(static_cast<int>(i), serving_rx_mw, interferers, noise_mw_, params_.radio)
                    .sinr_db;
        }

        engine_ = EventEngine(EventCatalog::outdoor(), params_.rates);
        event_shift_db_ = 0.0;
        tti_ = 0;
        state_ = 0;
        terminal_ = false;
        history_.assign(1, effective_sinr_now());

        if (params_.seed_initial_fault) {
            const int fault_id = 1 + static_cast<int>(events_rng_.uniform_index(4));
            const double param_u = events_rng_.uniform();
            EventContext ctx = make_context(param_u);
            event_shift_db_ += engine_.apply(engine_.catalog().by_id(fault_id), ctx);
            history_.back() = effective_sinr_now();
        }
        prev_popcount_ = engine_.popcount();
        return state_;
    }

    StepOutcome step(int action) {
        if (terminal_) throw std::logic_error("SonEnv: step after terminal");
        if (action < 0 || action >= 5) throw std::invalid_argument("SonEnv: invalid action id");
        ++tti_;

        if (action != 0) {
            const int fault_id = son_actions::kFaultForAction[action];
            if (engine_.fault_active(fault_id)) {
                event_shift_db_ += engine_.clear_fault(fault_id);
            }
            // otherwise the corrective command targets a healthy subsystem: wasted
        }

        const NetworkEvent& ev = engine_.sample(events_rng_);
        const double param_u = events_rng_.uniform();
        EventContext ctx = make_context(param_u);
        const double event_delta = engine_.apply(ev, ctx);
        event_shift_db_ += event_delta;

        const int pop = engine_.popcount();
        double reward;
        if (pop == 0) {
            reward = params_.r_max;
            terminal_ = true;
            state_ = 2;
        } else if (pop < prev_popcount_) {
            reward = 1.0;
            state_ = 2;
        } else {
            reward = -1.0;
            state_ = 1;
        }
        if (tti_ >= params_.horizon) terminal_ = true;
        prev_popcount_ = pop;
        history_.push_back(effective_sinr_now());

        StepOutcome out;
        out.state = state_;
        out.reward = reward;
        out.terminal = terminal_;
        out.target_met = pop == 0;
        out.event_id = ev.event_id;
        out.event_delta_db = event_delta;
        out.gamma_eff_db = history_.back();
        out.popcount = pop;
        out.action = action;
        out.tti = tti_;
        return out;
    }

    std::vector<double> per_ue_sinr_db() const {
        std::vector<double> out(base_sinr_db_.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = base_sinr_db_[i] + event_shift_db_;
        return out;
    }

    double gamma_eff_db() const { return history_.back(); }
    int state() const { return state_; }
    int tti() const { return tti_; }
    bool terminal() const { return terminal_; }
    int popcount() const { return engine_.popcount(); }
    const FaultRegister& fault_register() const { return engine_.fault_register(); }
    const EventEngine& events() const { return engine_; }
    int n_ues() const { return static_cast<int>(ue_positions_.size()); }
    const SonParams& params() const { return params_; }
    double event_shift_db() const { return event_shift_db_; }

  private:
    double effective_sinr_now() const {
        double acc = 0.0;
        for (double s : base_sinr_db_) acc += db_to_linear(s + event_shift_db_);
        return linear_to_db(acc / static_cast<double>(base_sinr_db_.size()));
    }

    double mean_serving_rx_mw() const {
        double acc = 0.0;
        for (double p : base_serving_rx_mw_) acc += p;
        return acc / static_cast<double>(base_serving_rx_mw_.size());
    }

    EventContext make_context(double param_u) const {
        EventContext ctx;
        ctx.gamma_eff_lag_db = history_.back();
        ctx.serving_rx_power_mw = mean_serving_rx_mw();
        ctx.noise_mw = noise_mw_;
        ctx.n_cells = n_sectors_total();
        ctx.radio = &params_.radio;
        ctx.pattern = &params_.pattern;
        ctx.azimuth_theta_deg = -params_.azimuth_draw_deg + 2.0 * params_.azimuth_draw_deg * param_u;
        ctx.n_tx_full = params_.radio.n_tx_antennas;
        ctx.n_tx_reduced = params_.rank_reduced;
        if (!interferer_rx_mw_.empty()) {
            const std::size_t m = interferer_rx_mw_.front().size();
            const auto downed = std::min(m - 1, static_cast<std::size_t>(param_u * m));
            ctx.neighbor_removal_gain_db = neighbor_removal_gain_db(downed);
        }
        return ctx;
    }

    double neighbor_removal_gain_db(std::size_t j) const {
        double with_acc = 0.0;
        double without_acc = 0.0;
        for (std::size_t i = 0; i < ue_positions_.size(); ++i) {
            const SinrSample with_all =
                sinr(static_cast<int>(i), base_serving_rx_mw_[i], interferer_rx_mw_[i],
                     noise_mw_, params_.radio);
            std::vector<double> rest = interferer_rx_mw_[i];
            rest.erase(rest.begin() + static_cast<long>(j));
            const SinrSample without = sinr(static_cast<int>(i), base_serving_rx_mw_[i], rest,
                                            noise_mw_, params_.radio);
            with_acc += with_all.sinr_linear;
            without_acc += without.sinr_linear;
        }
        return linear_to_db(without_acc) - linear_to_db(with_acc);
    }

    SonParams params_;
    std::uint64_t seed_;
    std::uint64_t episode_ = 0;
    Topology topology_;
    EventEngine engine_;
    RngStream events_rng_;

    std::vector<Position> ue_positions_;
    std::vector<double> base_sinr_db_;
    std::vector<double> base_serving_rx_mw_;
    std::vector<std::vector<double>> interferer_rx_mw_;
    std::vector<double> history_;
    double noise_mw_ = 1.0;
    double event_shift_db_ = 0.0;
    int tti_ = 0;
    int state_ = 0;
    int prev_popcount_ = 0;
    bool terminal_ = false;
};

}  // namespace celltune
