#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

namespace capflow {

/// Campaign settings read from `key = value` lines under `[section]`
/// headers. Recognized keys: grid.n, grid.N, grid.L, cap.alpha, cap.s,
/// cap.tol, weights.delta, weights.slack, seeds.master. Lines starting with
/// '#' or ';' are comments.
struct Config {
  int grid_dim = 1;
  int grid_points = 64;
  double grid_length = 12.0;
  double cap_alpha = 0.5;
  double cap_s = 2.0;
  double cap_tol = 1e-6;
  double weights_delta = 0.5;
  double weights_slack = 1.25;
  std::uint64_t seed = 0x5EED;

  static Config parse(std::istream& in);
  static Config load(const std::string& path);
  void validate() const;
};

}  // namespace capflow
