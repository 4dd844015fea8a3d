#pragma once

#include <cmath>

namespace uavfml {

/* dBm -> watts. 0 dBm = 1 mW, 30 dBm = 1 W. */
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

inline double watts_to_dbm(double watts) { return 10.0 * std::log10(watts) + 30.0; }

/* Plain dB ratio -> linear. */
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace uavfml
