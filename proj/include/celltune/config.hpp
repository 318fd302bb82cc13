#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "celltune/agents.hpp"
#include "celltune/env.hpp"
#include "celltune/events.hpp"
#include "celltune/radio.hpp"

namespace celltune {

// Flat, human-editable run configuration. Out-of-box values reproduce the
// reference indoor (VoLTE PC) and outdoor (SON FM) setups; unknown keys in a
// config file are hard errors.
struct RunConfig {
    std::string env_kind = "volte";  // volte | son
    std::string algorithm = "proposed";
    long long seed = 1;
    long long train_episodes = 1000;
    long long eval_episodes = 500;

    // radio
    double max_bs_power_dbm = 33.0;
    double initial_tx_power_dbm = 13.0;
    double tx_antenna_gain_dbi = 4.0;
    double ue_antenna_gain_dbi = -1.0;
    double misc_loss_db = 0.0;
    double noise_density_dbm_per_hz = -174.0;
    double bandwidth_hz = 20e6;
    long long n_prb = 100;
    double carrier_freq_mhz = 2600.0;
    double bs_height_m = 10.0;
    double ue_height_m = 1.5;
    long long n_tx_antennas = 2;
    long long n_rx_antennas = 2;
    double indoor_path_exponent = 1.8;
    double cell_size_m = 10.0;

    // events
    double p_fault = 1.0 / 11.0;
    double p_clear = 1.0 / 11.0;

    // episode structure
    long long horizon_ttis = 20;
    long long scheduler_period = 20;
    long long reward_lag_ttis = 1;
    double gamma0_db = 4.0;
    double target_db = 6.0;
    double gamma_min_db = 0.0;
    double r_min = -50.0;
    double r_max = 50.0;

    // indoor specifics
    double ppp_intensity = 0.5;
    long long ue_cap = 10;
    long long n_prb_per_ue = 1;
    double vswr_nominal = 1.5;
    double vswr_max = 3.0;
    double voice_bitrate_kbps = 23.85;
    double activity_factor = 0.7;
    double coding_gain_db = 0.0;

    // outdoor specifics
    long long q_ues = 10;
    bool seed_initial_fault = true;
    bool validate_son_actions = true;
    long long modulation_order = 64;
    double theta_3db_deg = 65.0;
    double max_attenuation_db = 20.0;
    double shadow_sigma_db = 8.0;
    long long rank_reduced = 2;
    double min_ue_distance_m = 10.0;
    double azimuth_draw_deg = 30.0;
    long long data_symbols_per_packet = 1;

    // agent hyperparameters
    double alpha = 0.2;
    double discount = 0.995;
    double epsilon = 1.0;
    double epsilon_min = 0.01;
    double epsilon_decay = 0.99;
    double eta = 0.2;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    long long hidden_width = 24;
    long long batch_size = 32;
    long long replay_capacity = 10000;
    std::string mos_table_file;  // empty selects the built-in mapping

    static RunConfig volte_defaults() { return RunConfig{}; }

    static RunConfig son_defaults() {
        RunConfig c;
        c.env_kind = "son";
        c.algorithm = "proposed";
        c.max_bs_power_dbm = 46.0;
        c.initial_tx_power_dbm = 46.0;
        c.tx_antenna_gain_dbi = 17.0;
        c.ue_antenna_gain_dbi = -1.0;
        c.misc_loss_db = 2.0;
        c.bandwidth_hz = 10e6;
        c.n_prb = 50;
        c.carrier_freq_mhz = 2100.0;
        c.bs_height_m = 25.0;
        c.ue_height_m = 1.5;
        c.n_tx_antennas = 4;
        c.n_rx_antennas = 2;
        c.cell_size_m = 200.0;  // inter-site distance
        c.p_fault = 1.0 / 9.0;
        c.p_clear = 0.0;
        c.horizon_ttis = 10;
        c.scheduler_period = 1;
        c.epsilon_decay = 0.91;
        c.eval_episodes = 300;
        return c;
    }

    void validate() const {
        auto fail = [](const std::string& what) {
            throw std::invalid_argument("RunConfig: " + what);
        };
        if (env_kind != "volte" && env_kind != "son") fail("env_kind must be volte or son");
        const bool volte = env_kind == "volte";
        if (volte) {
            if (algorithm != "proposed" && algorithm != "fpa" && algorithm != "maxsinr")
                fail("volte algorithm must be proposed|fpa|maxsinr");
        } else {
            if (algorithm != "proposed" && algorithm != "random" && algorithm != "fifo")
                fail("son algorithm must be proposed|random|fifo");
        }
        if (train_episodes < 0 || eval_episodes < 1) fail("bad episode counts");
        if (!(alpha > 0.0 && alpha < 1.0)) fail("alpha must lie in (0,1)");
        if (!(discount >= 0.0 && discount < 1.0)) fail("discount must lie in [0,1)");
        if (epsilon < epsilon_min || epsilon > 1.0 || epsilon_min < 0.0)
            fail("need epsilon_min <= epsilon <= 1");
        if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) fail("epsilon_decay in (0,1]");
        if (!(eta > 0.0 && eta <= 1.0)) fail("eta must lie in (0,1]");
        if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0) ||
            !(adam_eps > 0.0))
            fail("bad adaptive-moments constants");
        if (hidden_width < 1 || batch_size < 1 || replay_capacity <= batch_size)
            fail("bad DQN sizes");
        if (horizon_ttis < 1 || scheduler_period < 1 || reward_lag_ttis < 1)
            fail("bad episode horizon");
        if (p_fault < 0.0 || p_fault >= 1.0 || p_clear < 0.0 || p_clear >= 1.0)
            fail("event rates outside [0,1)");
        if (q_ues < 1 || ue_cap < 1) fail("bad user counts");
        if (modulation_order < 2) fail("modulation_order must be >= 2");
        if (!(activity_factor > 0.0 && activity_factor <= 1.0)) fail("bad activity factor");
        if (!(voice_bitrate_kbps > 0.0)) fail("bad voice bitrate");
        to_radio().validate();
    }

    RadioConfig to_radio() const {
        RadioConfig r;
        r.max_bs_power_dbm = max_bs_power_dbm;
        r.initial_tx_power_dbm = initial_tx_power_dbm;
        r.tx_antenna_gain_dbi = tx_antenna_gain_dbi;
        r.ue_antenna_gain_dbi = ue_antenna_gain_dbi;
        r.misc_loss_db = misc_loss_db;
        r.noise_density_dbm_per_hz = noise_density_dbm_per_hz;
        r.bandwidth_hz = bandwidth_hz;
        r.n_prb = static_cast<int>(n_prb);
        r.carrier_freq_mhz = carrier_freq_mhz;
        r.bs_height_m = bs_height_m;
        r.ue_height_m = ue_height_m;
        r.n_tx_antennas = static_cast<int>(n_tx_antennas);
        r.n_rx_antennas = static_cast<int>(n_rx_antennas);
        r.indoor_path_exponent = indoor_path_exponent;
        return r;
    }

    VolteParams to_volte_params() const {
        VolteParams p;
        p.radio = to_radio();
        p.cell_size_m = cell_size_m;
        p.ppp_intensity = ppp_intensity;
        p.ue_cap = static_cast<int>(ue_cap);
        p.rates = EventRates{p_fault, p_clear};
        p.horizon = static_cast<int>(horizon_ttis);
        p.scheduler_period = static_cast<int>(scheduler_period);
        p.reward_lag_ttis = static_cast<int>(reward_lag_ttis);
        p.gamma0_db = gamma0_db;
        p.target_db = target_db;
        p.r_min = r_min;
        p.r_max = r_max;
        p.vswr_nominal = vswr_nominal;
        p.vswr_max = vswr_max;
        p.n_prb_per_ue = static_cast<int>(n_prb_per_ue);
        return p;
    }

    SonParams to_son_params() const {
        SonParams p;
        p.radio = to_radio();
        p.inter_site_distance_m = cell_size_m;
        p.pattern = AntennaPattern{theta_3db_deg, max_attenuation_db, 0.0};
        p.shadow_sigma_db = shadow_sigma_db;
        p.q_ues = static_cast<int>(q_ues);
        p.rates = EventRates{p_fault, p_clear};
        p.horizon = static_cast<int>(horizon_ttis);
        p.r_max = r_max;
        p.seed_initial_fault = seed_initial_fault;
        p.azimuth_draw_deg = azimuth_draw_deg;
        p.rank_reduced = static_cast<int>(rank_reduced);
        p.min_ue_distance_m = min_ue_distance_m;
        return p;
    }

    std::string serialize() const;
    static RunConfig parse_text(const std::string& text);
    static RunConfig load(const std::string& path);
};

namespace detail {

struct ConfigField {
    enum class Type { Double, Int, Bool, String } type;
    double RunConfig::* d = nullptr;
    long long RunConfig::* i = nullptr;
    bool RunConfig::* b = nullptr;
    std::string RunConfig::* s = nullptr;
};

inline const std::map<std::string, ConfigField>& config_fields() {
    using F = ConfigField;
    using T = ConfigField::Type;
    static const std::map<std::string, ConfigField> fields = {
        {"env_kind", F{T::String, nullptr, nullptr, nullptr, &RunConfig::env_kind}},
        {"algorithm", F{T::String, nullptr, nullptr, nullptr, &RunConfig::algorithm}},
        {"seed", F{T::Int, nullptr, &RunConfig::seed}},
        {"train_episodes", F{T::Int, nullptr, &RunConfig::train_episodes}},
        {"eval_episodes", F{T::Int, nullptr, &RunConfig::eval_episodes}},
        {"max_bs_power_dbm", F{T::Double, &RunConfig::max_bs_power_dbm}},
        {"initial_tx_power_dbm", F{T::Double, &RunConfig::initial_tx_power_dbm}},
        {"tx_antenna_gain_dbi", F{T::Double, &RunConfig::tx_antenna_gain_dbi}},
        {"ue_antenna_gain_dbi", F{T::Double, &RunConfig::ue_antenna_gain_dbi}},
        {"misc_loss_db", F{T::Double, &RunConfig::misc_loss_db}},
        {"noise_density_dbm_per_hz", F{T::Double, &RunConfig::noise_density_dbm_per_hz}},
        {"bandwidth_hz", F{T::Double, &RunConfig::bandwidth_hz}},
        {"n_prb", F{T::Int, nullptr, &RunConfig::n_prb}},
        {"carrier_freq_mhz", F{T::Double, &RunConfig::carrier_freq_mhz}},
        {"bs_height_m", F{T::Double, &RunConfig::bs_height_m}},
        {"ue_height_m", F{T::Double, &RunConfig::ue_height_m}},
        {"n_tx_antennas", F{T::Int, nullptr, &RunConfig::n_tx_antennas}},
        {"n_rx_antennas", F{T::Int, nullptr, &RunConfig::n_rx_antennas}},
        {"indoor_path_exponent", F{T::Double, &RunConfig::indoor_path_exponent}},
        {"cell_size_m", F{T::Double, &RunConfig::cell_size_m}},
        {"p_fault", F{T::Double, &RunConfig::p_fault}},
        {"p_clear", F{T::Double, &RunConfig::p_clear}},
        {"horizon_ttis", F{T::Int, nullptr, &RunConfig::horizon_ttis}},
        {"scheduler_period", F{T::Int, nullptr, &RunConfig::scheduler_period}},
        {"reward_lag_ttis", F{T::Int, nullptr, &RunConfig::reward_lag_ttis}},
        {"gamma0_db", F{T::Double, &RunConfig::gamma0_db}},
        {"target_db", F{T::Double, &RunConfig::target_db}},
        {"gamma_min_db", F{T::Double, &RunConfig::gamma_min_db}},
        {"r_min", F{T::Double, &RunConfig::r_min}},
        {"r_max", F{T::Double, &RunConfig::r_max}},
        {"ppp_intensity", F{T::Double, &RunConfig::ppp_intensity}},
        {"ue_cap", F{T::Int, nullptr, &RunConfig::ue_cap}},
        {"n_prb_per_ue", F{T::Int, nullptr, &RunConfig::n_prb_per_ue}},
        {"vswr_nominal", F{T::Double, &RunConfig::vswr_nominal}},
        {"vswr_max", F{T::Double, &RunConfig::vswr_max}},
        {"voice_bitrate_kbps", F{T::Double, &RunConfig::voice_bitrate_kbps}},
        {"activity_factor", F{T::Double, &RunConfig::activity_factor}},
        {"coding_gain_db", F{T::Double, &RunConfig::coding_gain_db}},
        {"q_ues", F{T::Int, nullptr, &RunConfig::q_ues}},
        {"seed_initial_fault", F{T::Bool, nullptr, nullptr, &RunConfig::seed_initial_fault}},
        {"validate_son_actions", F{T::Bool, nullptr, nullptr, &RunConfig::validate_son_actions}},
        {"modulation_order", F{T::Int, nullptr, &RunConfig::modulation_order}},
        {"theta_3db_deg", F{T::Double, &RunConfig::theta_3db_deg}},
        {"max_attenuation_db", F{T::Double, &RunConfig::max_attenuation_db}},
        {"shadow_sigma_db", F{T::Double, &RunConfig::shadow_sigma_db}},
        {"rank_reduced", F{T::Int, nullptr, &RunConfig::rank_reduced}},
        {"min_ue_distance_m", F{T::Double, &RunConfig::min_ue_distance_m}},
        {"azimuth_draw_deg", F{T::Double, &RunConfig::azimuth_draw_deg}},
        {"data_symbols_per_packet", F{T::Int, nullptr, &RunConfig::data_symbols_per_packet}},
        {"alpha", F{T::Double, &RunConfig::alpha}},
        {"discount", F{T::Double, &RunConfig::discount}},
        {"epsilon", F{T::Double, &RunConfig::epsilon}},
        {"epsilon_min", F{T::Double, &RunConfig::epsilon_min}},
        {"epsilon_decay", F{T::Double, &RunConfig::epsilon_decay}},
        {"eta", F{T::Double, &RunConfig::eta}},
        {"adam_beta1", F{T::Double, &RunConfig::adam_beta1}},
        {"adam_beta2", F{T::Double, &RunConfig::adam_beta2}},
        {"adam_eps", F{T::Double, &RunConfig::adam_eps}},
        {"mos_table_file", F{T::String, nullptr, nullptr, nullptr, &RunConfig::mos_table_file}},
        {"hidden_width", F{T::Int, nullptr, &RunConfig::hidden_width}},
        {"batch_size", F{T::Int, nullptr, &RunConfig::batch_size}},
        {"replay_capacity", F{T::Int, nullptr, &RunConfig::replay_capacity}},
    };
    return fields;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace detail

inline std::string RunConfig::serialize() const {
    std::ostringstream out;
    out << "# celltune run configuration\n";
    const EventCatalog catalog =
        env_kind == "son" ? EventCatalog::outdoor() : EventCatalog::indoor();
    out << "# event catalog (" << env_kind << "):\n";
    for (const auto& e : catalog.events) {
        out << "#   " << e.event_id << ": " << e.description;
        if (e.is_clearing) out << " [clears " << e.paired_fault_id << "]";
        out << "\n";
    }
    for (const auto& [name, field] : detail::config_fields()) {
        out << name << " = ";
        switch (field.type) {
            case detail::ConfigField::Type::Double:
                out << QTable::format_double(this->*(field.d));
                break;
            case detail::ConfigField::Type::Int:
                out << this->*(field.i);
                break;
            case detail::ConfigField::Type::Bool:
                out << (this->*(field.b) ? "true" : "false");
                break;
            case detail::ConfigField::Type::String:
                out << this->*(field.s);
                break;
        }
        out << "\n";
    }
    return out.str();
}

inline RunConfig RunConfig::parse_text(const std::string& text) {
    // First pass only picks up env_kind so the right defaults apply.
    std::string kind = "volte";
    {
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            if (detail::trim(line.substr(0, eq)) == "env_kind")
                kind = detail::trim(line.substr(eq + 1));
        }
    }
    RunConfig cfg = (kind == "son") ? son_defaults() : volte_defaults();

    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        if (detail::trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        const auto& fields = detail::config_fields();
        const auto it = fields.find(key);
        if (it == fields.end())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": unknown key '" + key + "'");
        const auto& f = it->second;
        try {
            switch (f.type) {
                case detail::ConfigField::Type::Double:
                    cfg.*(f.d) = std::stod(value);
                    break;
                case detail::ConfigField::Type::Int:
                    cfg.*(f.i) = std::stoll(value);
                    break;
                case detail::ConfigField::Type::Bool:
                    if (value == "true" || value == "1")
                        cfg.*(f.b) = true;
                    else if (value == "false" || value == "0")
                        cfg.*(f.b) = false;
                    else
                        throw std::invalid_argument("bool");
                    break;
                case detail::ConfigField::Type::String:
                    cfg.*(f.s) = value;
                    break;
            }
        } catch (const std::exception&) {
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": bad value for '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("RunConfig: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str());
}

}  // namespace celltune
