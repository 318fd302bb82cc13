#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "celltune/units.hpp"

namespace celltune {

// Fraction of (TTI, UE) samples whose SINR stays above the drop threshold.
inline double retainability(std::span<const double> sinr_db_samples, double gamma_min_db) {
    if (sinr_db_samples.empty()) throw std::invalid_argument("retainability: empty trace");
    std::size_t below = 0;
    for (double s : sinr_db_samples) below += (s <= gamma_min_db) ? 1 : 0;
    return 1.0 - static_cast<double>(below) / static_cast<double>(sinr_db_samples.size());
}

// Per-symbol QPSK error p_s = 2 Q(sqrt(g)) (1 - Q(sqrt(g))/2), lifted to a
// packet of n symbols. The fixed-code-rate coding gain enters as a dB offset
// on the SINR before the mapping.
inline double qpsk_packet_error_rate(double sinr_linear, int symbols_per_packet,
                                     double coding_gain_db = 0.0) {
    if (!(sinr_linear > 0.0))
        throw std::invalid_argument("qpsk_packet_error_rate: SINR must be > 0");
    if (symbols_per_packet < 1)
        throw std::invalid_argument("qpsk_packet_error_rate: need >= 1 symbol");
    const double g = sinr_linear * db_to_linear(coding_gain_db);
    const double q = gaussian_q(std::sqrt(g));
    const double ps = 2.0 * q * (1.0 - 0.5 * q);
    return 1.0 - std::pow(1.0 - ps, static_cast<double>(symbols_per_packet));
}

// Monotone piecewise-linear map from effective voice loss to a mean opinion
// score on the 1.0..4.5 scale. The default anchors give MOS 4.2 at zero loss
// and the 1.0 floor from 50% loss on; a two-column text file (loss mos per
// line) can replace the curve.
class MosTable {
  public:
    MosTable() : anchors_(default_anchors()) {}

    explicit MosTable(std::vector<std::pair<double, double>> anchors)
        : anchors_(std::move(anchors)) {
        validate();
    }

    static MosTable from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("MosTable: cannot read " + path);
        std::vector<std::pair<double, double>> a;
        double loss = 0.0, mos = 0.0;
        while (in >> loss >> mos) a.emplace_back(loss, mos);
        return MosTable(std::move(a));
    }

    double operator()(double loss) const {
        if (loss <= anchors_.front().first) return anchors_.front().second;
        if (loss >= anchors_.back().first) return anchors_.back().second;
        for (std::size_t i = 1; i < anchors_.size(); ++i) {
            if (loss <= anchors_[i].first) {
                const auto& [x0, y0] = anchors_[i - 1];
                const auto& [x1, y1] = anchors_[i];
                const double w = (loss - x0) / (x1 - x0);
                return y0 + w * (y1 - y0);
            }
        }
        return anchors_.back().second;
    }

  private:
    static std::vector<std::pair<double, double>> default_anchors() {
        return {{0.00, 4.2}, {0.03, 4.0}, {0.10, 3.2}, {0.20, 2.2}, {0.35, 1.5}, {0.50, 1.0}};
    }

    void validate() const {
        if (anchors_.size() < 2) throw std::invalid_argument("MosTable: need >= 2 anchors");
        for (std::size_t i = 1; i < anchors_.size(); ++i) {
            if (anchors_[i].first <= anchors_[i - 1].first)
                throw std::invalid_argument("MosTable: loss anchors must increase");
            if (anchors_[i].second > anchors_[i - 1].second)
                throw std::invalid_argument("MosTable: MOS must be non-increasing in loss");
        }
        for (const auto& [l, m] : anchors_) {
            if (l < 0.0 || m < 1.0 || m > 4.5)
                throw std::invalid_argument("MosTable: anchors outside valid ranges");
        }
    }

    std::vector<std::pair<double, double>> anchors_;
};

// MOS from packet error rate at a given voice activity factor. The bitrate is
// the rate the mapping table was calibrated for.
inline double mos(double packet_error_rate, double activity_factor, double bitrate_kbps,
                  const MosTable& table = MosTable()) {
    if (packet_error_rate < 0.0 || packet_error_rate > 1.0)
        throw std::invalid_argument("mos: PER outside [0, 1]");
    if (!(activity_factor > 0.0 && activity_factor <= 1.0) || !(bitrate_kbps > 0.0))
        throw std::invalid_argument("mos: bad activity factor or bitrate");
    return table(packet_error_rate * activity_factor);
}

// Waterfilling power allocation across parallel subchannels: maximizes
// sum log2(1 + p_k g_k / noise) subject to sum p_k = power_budget.
inline std::vector<double> waterfill_powers(std::span<const double> gains, double power_budget,
                                            double noise) {
    if (gains.empty()) throw std::invalid_argument("waterfill: no subchannels");
    if (!(power_budget > 0.0) || !(noise > 0.0))
        throw std::invalid_argument("waterfill: power and noise must be > 0");
    std::vector<double> floor(gains.size());
    for (std::size_t k = 0; k < gains.size(); ++k) {
        if (!(gains[k] > 0.0)) throw std::invalid_argument("waterfill: gains must be > 0");
        floor[k] = noise / gains[k];
    }
    std::vector<std::size_t> order(gains.size());
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return floor[a] < floor[b]; });

    // Grow the active set while the implied water level clears the next floor.
    double sum_floor = 0.0;
    double level = 0.0;
    std::size_t active = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        sum_floor += floor[order[k]];
        const double candidate = (power_budget + sum_floor) / static_cast<double>(k + 1);
        if (candidate > floor[order[k]]) {
            level = candidate;
            active = k + 1;
        } else {
            break;
        }
    }
    std::vector<double> powers(gains.size(), 0.0);
    for (std::size_t k = 0; k < active; ++k)
        powers[order[k]] = level - floor[order[k]];
    return powers;
}

inline double waterfill_capacity_bits(std::span<const double> gains, double power_budget,
                                      double noise) {
    const auto p = waterfill_powers(gains, power_budget, noise);
    double c = 0.0;
    for (std::size_t k = 0; k < gains.size(); ++k)
        c += std::log2(1.0 + p[k] * gains[k] / noise);
    return c;
}

// Post-zero-forcing subchannel gains of a real-valued channel matrix with
// n_rx rows, n_tx columns and n_tx >= n_rx: g_k = 1 / [(H H^T)^-1]_kk.
// Singular channels fall back to the surviving (non-degenerate) streams with
// their matched-filter row gains.
inline std::vector<double> zero_forcing_gains(const std::vector<std::vector<double>>& channel) {
    const std::size_t n_rx = channel.size();
    if (n_rx == 0) throw std::invalid_argument("zero_forcing_gains: empty channel");
    const std::size_t n_tx = channel.front().size();
    if (n_tx < n_rx) throw std::invalid_argument("zero_forcing_gains: need n_tx >= n_rx");
    for (const auto& row : channel)
        if (row.size() != n_tx) throw std::invalid_argument("zero_forcing_gains: ragged matrix");

    // Gram matrix G = H H^T (n_rx x n_rx).
    std::vector<std::vector<double>> g(n_rx, std::vector<double>(n_rx, 0.0));
    for (std::size_t i = 0; i < n_rx; ++i)
        for (std::size_t j = 0; j < n_rx; ++j)
            for (std::size_t k = 0; k < n_tx; ++k) g[i][j] += channel[i][k] * channel[j][k];

    // Invert by Gauss-Jordan; tiny pivots mark a singular stream.
    const std::size_t n = n_rx;
    std::vector<std::vector<double>> a(g);
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) inv[i][i] = 1.0;
    bool singular = false;
    for (std::size_t col = 0; col < n && !singular; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        if (std::fabs(a[piv][col]) < 1e-12) {
            singular = true;
            break;
        }
        std::swap(a[piv], a[col]);
        std::swap(inv[piv], inv[col]);
        const double d = a[col][col];
        for (std::size_t c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }

    std::vector<double> gains;
    if (!singular) {
        for (std::size_t k = 0; k < n; ++k)
            if (inv[k][k] > 0.0 && std::isfinite(inv[k][k])) gains.push_back(1.0 / inv[k][k]);
    }
    if (gains.empty()) {
        for (std::size_t k = 0; k < n; ++k)
            if (g[k][k] > 1e-12) gains.push_back(g[k][k]);
    }
    if (gains.empty()) throw std::domain_error("zero_forcing_gains: channel has no usable stream");
    return gains;
}

// Spectral efficiency in bits per channel use: waterfilling over the post-ZF
// subchannel gains, each stream clamped at the log2(M) modulation ceiling,
// averaged across streams.
inline double spectral_efficiency(const std::vector<std::vector<double>>& channel,
                                  double tx_power, double noise, int modulation_order) {
    if (!(tx_power > 0.0)) throw std::invalid_argument("spectral_efficiency: power must be > 0");
    if (modulation_order < 2)
        throw std::invalid_argument("spectral_efficiency: modulation order must be >= 2");
    const auto gains = zero_forcing_gains(channel);
    const auto powers = waterfill_powers(gains, tx_power, noise);
    const double cap = std::log2(static_cast<double>(modulation_order));
    double acc = 0.0;
    for (std::size_t k = 0; k < gains.size(); ++k)
        acc += std::min(std::log2(1.0 + powers[k] * gains[k] / noise), cap);
    return acc / static_cast<double>(gains.size());
}

struct ThroughputPercentiles {
    double peak_mbps = 0.0;  // 95th percentile
    double avg_mbps = 0.0;
    double edge_mbps = 0.0;  // 5th percentile
};

// Linear interpolation between order statistics (index h = p (n-1)).
inline double percentile_linear(std::vector<double> sorted, double p) {
    const double h = p * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - std::floor(h);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline ThroughputPercentiles throughput_percentiles(std::span<const double> samples) {
    if (samples.empty()) throw std::invalid_argument("throughput_percentiles: empty input");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    ThroughputPercentiles out;
    out.peak_mbps = percentile_linear(sorted, 0.95);
    out.edge_mbps = percentile_linear(sorted, 0.05);
    out.avg_mbps =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    return out;
}

struct MetricsReport {
    double retainability = 1.0;
    double mos = 4.2;
    double avg_cell_throughput_mbps = 0.0;
    double ue_throughput_peak_mbps = 0.0;
    double ue_throughput_avg_mbps = 0.0;
    double ue_throughput_edge_mbps = 0.0;
    double avg_spectral_efficiency = 0.0;
    double target_attainment = 0.0;  // fraction of episodes meeting the SINR target
    long power_commands = 0;

    void validate(int modulation_order) const {
        if (retainability < 0.0 || retainability > 1.0)
            throw std::logic_error("MetricsReport: retainability outside [0,1]");
        if (ue_throughput_edge_mbps > ue_throughput_avg_mbps + 1e-9 ||
            ue_throughput_avg_mbps > ue_throughput_peak_mbps + 1e-9)
            throw std::logic_error("MetricsReport: percentile ordering violated");
        if (avg_spectral_efficiency >
            std::log2(static_cast<double>(modulation_order)) + 1e-9)
            throw std::logic_error("MetricsReport: spectral efficiency above log2(M)");
    }
};

}  // namespace celltune
