#include "capflow/config.hpp"

#include <fstream>
#include <istream>
#include <string>

#include "capflow/errors.hpp"

namespace capflow {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::logic_error&) {
  }
  throw FormatError("config key " + key + ": bad number '" + v + "'");
}

}  // namespace

Config Config::parse(std::istream& in) {
  Config c;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw FormatError("config line " + std::to_string(lineno) + ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("config line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!section.empty()) key = section + "." + key;

    if (key == "grid.n") {
      c.grid_dim = static_cast<int>(to_double(key, value));
    } else if (key == "grid.N") {
      c.grid_points = static_cast<int>(to_double(key, value));
    } else if (key == "grid.L") {
      c.grid_length = to_double(key, value);
    } else if (key == "cap.alpha") {
      c.cap_alpha = to_double(key, value);
    } else if (key == "cap.s") {
      c.cap_s = to_double(key, value);
    } else if (key == "cap.tol") {
      c.cap_tol = to_double(key, value);
    } else if (key == "weights.delta") {
      c.weights_delta = to_double(key, value);
    } else if (key == "weights.slack") {
      c.weights_slack = to_double(key, value);
    } else if (key == "seeds.master") {
      try {
        c.seed = std::stoull(value, nullptr, 0);
      } catch (const std::logic_error&) {
        throw FormatError("config key seeds.master: bad seed '" + value + "'");
      }
    } else {
      throw FormatError("config line " + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  return parse(in);
}

void Config::validate() const {
  if (grid_dim != 1 && grid_dim != 2) throw InvalidArgument("grid.n must be 1 or 2");
  if (!(cap_tol > 0.0 && cap_tol < 1.0)) throw InvalidArgument("cap.tol must lie in (0, 1)");
  if (!(weights_delta > 0.0 && weights_delta <= 1.0)) throw InvalidArgument("weights.delta must lie in (0, 1]");
  if (!(weights_slack >= 1.0)) throw InvalidArgument("weights.slack must be at least 1");
  if (!(cap_s > 1.0)) throw InvalidArgument("cap.s must exceed 1");
  if (!(cap_alpha > 0.0) || cap_alpha * cap_s > grid_dim + 1e-12)
    throw InvalidArgument("need 0 < cap.alpha and cap.alpha * cap.s <= grid.n");
}

}  // namespace capflow
