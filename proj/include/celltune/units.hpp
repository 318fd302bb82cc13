#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace celltune {

inline constexpr double kSpeedOfLightMps = 299792458.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) {
    if (!(lin > 0.0)) throw std::domain_error("linear_to_db: value must be > 0");
    return 10.0 * std::log10(lin);
}

inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }

inline bool is_finite(double x) { return std::isfinite(x); }

// Gaussian right-tail probability Q(x) = P(N(0,1) > x).
inline double gaussian_q(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

}  // namespace celltune
