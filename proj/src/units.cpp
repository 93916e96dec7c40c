#include "tpf/units.hpp"

#include <map>

#include "tpf/errors.hpp"

namespace tpf::units {

double factor(const std::string& unit) {
  static const std::map<std::string, double> table = {
      {"1", 1.0},         {"", 1.0},          {"m", 1.0},        {"s", 1.0},
      {"Pa", 1.0},        {"Pa*s", 1.0},      {"m2", 1.0},       {"m^2", 1.0},
      {"1/s", 1.0},       {"m/s", 1.0},       {"d", darcy},      {"darcy", darcy},
      {"cp", centipoise}, {"day", day},       {"days", day},     {"year", year},
      {"years", year},    {"bar", bar},       {"m/day", 1.0 / day}, {"m/year", 1.0 / year},
  };
  auto it = table.find(unit);
  if (it == table.end()) throw ConfigError("unknown unit '" + unit + "'");
  return it->second;
}

double to_si(double value, const std::string& unit) { return value * factor(unit); }

}  // namespace tpf::units
