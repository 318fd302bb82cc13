#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "celltune/radio.hpp"
#include "celltune/rng.hpp"

namespace celltune {

// Homogeneous PPP drop on the indoor square: the user count is
// Poisson(lambda L^2) truncated at the per-BS cap (at least one user is
// forced), positions i.i.d. uniform on [-L/2, L/2]^2.
inline std::vector<Position> place_users_indoor(double lambda, double cell_size_m, int cap,
                                                RngStream& rng) {
    if (!(lambda > 0.0) || !(cell_size_m > 0.0) || cap < 1)
        throw std::invalid_argument("place_users_indoor: need lambda > 0, L > 0, cap >= 1");
    const int drawn = rng.poisson(lambda * cell_size_m * cell_size_m);
    const int n = std::clamp(drawn, 1, cap);
    std::vector<Position> out(static_cast<std::size_t>(n));
    const double half = cell_size_m / 2.0;
    for (auto& p : out) {
        p.x = rng.uniform(-half, half);
        p.y = rng.uniform(-half, half);
    }
    return out;
}

// Fixed-count drop in the serving sector wedge of a hex cell: q users uniform
// in area over the 120-degree wedge around the sector boresight.
inline std::vector<Position> place_users_hex_sector(int q, double cell_radius_m,
                                                    double min_distance_m, double boresight_deg,
                                                    RngStream& rng) {
    if (q < 1 || !(cell_radius_m > min_distance_m) || min_distance_m < 0.0)
        throw std::invalid_argument("place_users_hex_sector: bad geometry");
    std::vector<Position> out(static_cast<std::size_t>(q));
    const double r2min = min_distance_m * min_distance_m;
    const double r2max = cell_radius_m * cell_radius_m;
    for (auto& p : out) {
        const double r = std::sqrt(r2min + rng.uniform() * (r2max - r2min));
        const double ang_deg = boresight_deg + rng.uniform(-60.0, 60.0);
        const double ang = ang_deg * 3.14159265358979323846 / 180.0;
        p.x = r * std::cos(ang);
        p.y = r * std::sin(ang);
    }
    return out;
}

}  // namespace celltune
