#pragma once

#include <string>

namespace tpf::units {

inline constexpr double darcy = 9.869233e-13;  // m^2
inline constexpr double centipoise = 1e-3;     // Pa s
inline constexpr double day = 86400.0;         // s
inline constexpr double year = 365.0 * day;
inline constexpr double bar = 1e5;  // Pa

/// SI factor for a unit name: d, cp, day, year, bar, m, s, Pa, "Pa*s", m2,
/// "m/year", "m/day", "m/s", or "1".  Throws ConfigError otherwise.
double factor(const std::string& unit);

/// value * factor(unit)
double to_si(double value, const std::string& unit);

}  // namespace tpf::units
