#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "celltune/units.hpp"

namespace celltune {

// Static link-budget, antenna, and propagation parameters of one cluster.
struct RadioConfig {
    double max_bs_power_dbm = 33.0;
    double initial_tx_power_dbm = 13.0;
    double tx_antenna_gain_dbi = 4.0;
    double ue_antenna_gain_dbi = -1.0;
    double misc_loss_db = 0.0;
    double noise_density_dbm_per_hz = -174.0;
    double bandwidth_hz = 20e6;
    int n_prb = 100;
    double carrier_freq_mhz = 2600.0;
    double bs_height_m = 10.0;
    double ue_height_m = 1.5;
    int n_tx_antennas = 2;
    int n_rx_antennas = 2;
    double indoor_path_exponent = 1.8;

    void validate() const {
        if (max_bs_power_dbm < initial_tx_power_dbm)
            throw std::invalid_argument("RadioConfig: max power below initial power");
        if (n_prb < 1) throw std::invalid_argument("RadioConfig: n_prb must be >= 1");
        if (n_rx_antennas < 1 || n_tx_antennas < n_rx_antennas)
            throw std::invalid_argument("RadioConfig: need n_tx >= n_rx >= 1");
        if (!(bandwidth_hz > 0.0) || !(carrier_freq_mhz > 0.0))
            throw std::invalid_argument("RadioConfig: bandwidth and frequency must be > 0");
    }

    double noise_mw_over(double bandwidth) const {
        return dbm_to_mw(noise_density_dbm_per_hz + 10.0 * std::log10(bandwidth));
    }
};

struct Position {
    double x = 0.0;
    double y = 0.0;
};

inline double distance_m(const Position& a, const Position& b) {
    return std::hypot(a.x - b.x, a.y - b.y);
}

enum class Layout { IndoorSquare, OutdoorHex };

// Cluster geometry. The serving base station sits at the origin; an indoor
// square has 4 neighbors at distance L on the cardinal axes, a hex cluster
// has 6 neighbors at the inter-site distance.
struct Topology {
    Layout layout = Layout::IndoorSquare;
    double cell_size_m = 10.0;
    Position serving_position{};
    std::vector<Position> neighbor_positions;
    std::vector<Position> ue_positions;

    static Topology indoor_square(double cell_size) {
        Topology t;
        t.layout = Layout::IndoorSquare;
        t.cell_size_m = cell_size;
        t.neighbor_positions = {{cell_size, 0.0}, {-cell_size, 0.0},
                                {0.0, cell_size}, {0.0, -cell_size}};
        return t;
    }

    static Topology outdoor_hex(double inter_site_distance) {
        Topology t;
        t.layout = Layout::OutdoorHex;
        t.cell_size_m = inter_site_distance;
        const double d = inter_site_distance;
        for (int k = 0; k < 6; ++k) {
            const double ang = (60.0 * k) * 3.14159265358979323846 / 180.0;
            t.neighbor_positions.push_back({d * std::cos(ang), d * std::sin(ang)});
        }
        return t;
    }

    void validate() const {
        if (serving_position.x != 0.0 || serving_position.y != 0.0)
            throw std::invalid_argument("Topology: serving base station must be at the origin");
        const std::size_t want = layout == Layout::IndoorSquare ? 4u : 6u;
        if (neighbor_positions.size() != want)
            throw std::invalid_argument("Topology: wrong neighbor count for layout");
        for (const auto& p : neighbor_positions) {
            const double d = distance_m(p, serving_position);
            if (std::fabs(d - cell_size_m) > 1e-6 * cell_size_m)
                throw std::invalid_argument("Topology: neighbor not at the cell-size distance");
        }
    }

    int n_cells() const { return static_cast<int>(neighbor_positions.size()) + 1; }
};

// Horizontal-plane sector pattern A(theta) = -min(12 (theta/theta_3dB)^2, A_m).
struct AntennaPattern {
    double theta_3db_deg = 65.0;
    double max_attenuation_db = 20.0;
    double boresight_deg = 0.0;

    void validate() const {
        if (!(theta_3db_deg > 0.0)) throw std::invalid_argument("AntennaPattern: theta_3dB must be > 0");
        if (!(max_attenuation_db > 0.0)) throw std::invalid_argument("AntennaPattern: A_m must be > 0");
    }
};

struct SinrSample {
    int ue_index = 0;
    int tti = 0;
    double sinr_linear = 1.0;
    double sinr_db = 0.0;

    static SinrSample from_linear(double lin, int ue = 0, int tti = 0) {
        if (!(lin > 0.0)) throw std::domain_error("SinrSample: linear SINR must be > 0");
        return SinrSample{ue, tti, lin, linear_to_db(lin)};
    }

    static SinrSample from_db(double db, int ue = 0, int tti = 0) {
        return SinrSample{ue, tti, db_to_linear(db), db};
    }
};

enum class PropagationEnv { Indoor, Outdoor };

namespace detail {
// Declared validity of the propagation models, in MHz. Indoor is the
// log-distance LOS model for sub-6 GHz; outdoor is COST231-Hata, extended
// above its published 2000 MHz edge as system simulators commonly do.
inline constexpr double kIndoorFreqMinMhz = 150.0;
inline constexpr double kIndoorFreqMaxMhz = 6000.0;
inline constexpr double kOutdoorFreqMinMhz = 150.0;
inline constexpr double kOutdoorFreqMaxMhz = 2600.0;

inline double clamp_frequency(double f_mhz, double lo, double hi, const char* model) {
    if (f_mhz < lo || f_mhz > hi) {
        std::fprintf(stderr, "celltune: warning: %.1f MHz outside %s validity [%g, %g]; clamped\n",
                     f_mhz, model, lo, hi);
        return std::clamp(f_mhz, lo, hi);
    }
    return f_mhz;
}
}  // namespace detail

// Free-space path loss at 1 m, the intercept of the indoor log-distance model.
inline double free_space_intercept_db(double carrier_freq_mhz) {
    const double f_hz = carrier_freq_mhz * 1e6;
    return 20.0 * std::log10(4.0 * 3.14159265358979323846 * 1.0 * f_hz / kSpeedOfLightMps);
}

// COST231-Hata urban path loss (medium-city mobile correction, C = 0 dB).
inline double cost231_hata_urban_db(double f_mhz, double bs_height_m, double ue_height_m,
                                    double distance_m) {
    const double d_km = distance_m / 1000.0;
    const double lf = std::log10(f_mhz);
    const double a_ue = (1.1 * lf - 0.7) * ue_height_m - (1.56 * lf - 0.8);
    return 46.3 + 33.9 * lf - 13.82 * std::log10(bs_height_m) - a_ue +
           (44.9 - 6.55 * std::log10(bs_height_m)) * std::log10(d_km);
}

// Path loss in dB. Indoor: log-distance LOS, PL(d) = PL(1m) + 10 n log10(d).
// Outdoor: COST231-Hata urban. Distances below 1 m are clamped to 1 m;
// frequencies outside the model validity are clamped with a warning.
inline double path_loss_db(PropagationEnv env, double distance_m, const RadioConfig& config) {
    if (!(distance_m > 0.0)) throw std::invalid_argument("path_loss_db: distance must be > 0");
    const double d = std::max(distance_m, 1.0);
    if (env == PropagationEnv::Indoor) {
        const double f = detail::clamp_frequency(config.carrier_freq_mhz, detail::kIndoorFreqMinMhz,
                                                 detail::kIndoorFreqMaxMhz, "indoor log-distance");
        return free_space_intercept_db(f) + 10.0 * config.indoor_path_exponent * std::log10(d);
    }
    const double f = detail::clamp_frequency(config.carrier_freq_mhz, detail::kOutdoorFreqMinMhz,
                                             detail::kOutdoorFreqMaxMhz, "COST231-Hata");
    return cost231_hata_urban_db(f, config.bs_height_m, config.ue_height_m, d);
}

// Forward link budget: P_RX = P_TX + G_TX - L_m - L_p + G_UE.
inline double received_power_dbm(double tx_power_dbm, double path_loss_db,
                                 const RadioConfig& config) {
    if (!is_finite(tx_power_dbm) || !is_finite(path_loss_db))
        throw std::invalid_argument("received_power_dbm: inputs must be finite");
    return tx_power_dbm + config.tx_antenna_gain_dbi - config.misc_loss_db - path_loss_db +
           config.ue_antenna_gain_dbi;
}

// Downlink SINR with inter-cell interference treated as Gaussian noise. Each
// interfering co-PRB power is clamped to max BS power per PRB, so the ICI sum
// never exceeds (|C|-1) * P_max / N_PRB.
inline SinrSample sinr(int ue_index, double serving_rx_power_mw,
                       std::span<const double> interferer_rx_powers_mw, double noise_mw,
                       const RadioConfig& config, int tti = 0) {
    if (!(noise_mw > 0.0)) throw std::invalid_argument("sinr: noise power must be > 0");
    if (!(serving_rx_power_mw > 0.0)) throw std::invalid_argument("sinr: serving power must be > 0");
    const double per_prb_bound_mw = dbm_to_mw(config.max_bs_power_dbm) / config.n_prb;
    double ici = 0.0;
    for (double p : interferer_rx_powers_mw) {
        if (p < 0.0) throw std::invalid_argument("sinr: interferer power must be >= 0");
        ici += std::min(p, per_prb_bound_mw);
    }
    return SinrSample::from_linear(serving_rx_power_mw / (noise_mw + ici), ue_index, tti);
}

// Effective SINR: dB of the linear mean across samples.
inline double effective_sinr_db(std::span<const SinrSample> samples) {
    if (samples.empty()) throw std::invalid_argument("effective_sinr_db: empty sample list");
    double acc = 0.0;
    for (const auto& s : samples) acc += s.sinr_linear;
    return linear_to_db(acc / static_cast<double>(samples.size()));
}

// A(theta) relative to boresight; theta in [-180, 180].
inline double azimuth_gain_db(const AntennaPattern& pattern, double theta_deg) {
    pattern.validate();
    if (theta_deg < -180.0 || theta_deg > 180.0)
        throw std::invalid_argument("azimuth_gain_db: angle outside [-180, 180]");
    const double ratio = theta_deg / pattern.theta_3db_deg;
    return -std::min(12.0 * ratio * ratio, pattern.max_attenuation_db);
}

// Gain delta when the azimuth moves from theta0 to theta.
inline double azimuth_gain_delta_db(const AntennaPattern& pattern, double theta0_deg,
                                    double theta_deg) {
    return azimuth_gain_db(pattern, theta_deg) - azimuth_gain_db(pattern, theta0_deg);
}

// Change in loss when the VSWR moves from v0 to v:
// dL = 10 log10( (|(v0+1)/(v0-1)| * |(v-1)/(v+1)|)^2 ).
// VSWR of exactly 1 (perfect match) is excluded; the formula has a pole there.
inline double vswr_delta_loss_db(double v0, double v) {
    if (!(v0 > 1.0) || !(v > 1.0))
        throw std::invalid_argument("vswr_delta_loss_db: VSWR values must be > 1");
    const double ref0 = std::fabs((v0 + 1.0) / (v0 - 1.0));
    const double ref = std::fabs((v - 1.0) / (v + 1.0));
    return 20.0 * std::log10(ref0 * ref);
}

// Worst-case SINR once one of the |C|-1 neighbors is down: the remaining
// |C|-2 interferers are budgeted at full max BS power.
inline SinrSample neighbor_down_sinr_lower_bound(double serving_rx_power_mw, double noise_mw,
                                                 int n_cells, const RadioConfig& config) {
    if (n_cells < 2) throw std::invalid_argument("neighbor_down_sinr_lower_bound: need >= 2 cells");
    if (!(noise_mw > 0.0) || !(serving_rx_power_mw > 0.0))
        throw std::invalid_argument("neighbor_down_sinr_lower_bound: powers must be > 0");
    const double denom = noise_mw + (n_cells - 2) * dbm_to_mw(config.max_bs_power_dbm);
    return SinrSample::from_linear(serving_rx_power_mw / denom);
}

}  // namespace celltune
