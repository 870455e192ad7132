#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capflow/capacity.hpp"
#include "capflow/measure.hpp"

namespace capflow {

enum class EstimateMode { exact, lower_bound, upper_bound };

const char* to_string(EstimateMode m);

/// A norm value with its certification mode. lower/upper bracket the value
/// once capacity certificates are propagated; witness_set is the maximizing
/// test set when there is one.
struct NormEstimate {
  double value = 0.0;
  EstimateMode mode = EstimateMode::exact;
  double lower = 0.0;
  double upper = 0.0;
  double max_gap = 0.0;
  std::optional<SetMask> witness_set;
  std::string witness;
};

/// int_0^inf C({w > t}) dt. With max_levels > 0 and more distinct values
/// than that, the levels are quantized and the result is a certified bracket
/// (mode upper-bound, value = upper end).
NormEstimate l1c_norm(const Field& omega, const CapacityOracle& oracle, std::size_t max_levels = 0);

/// Lorentz quasi-norm with C in place of the measure; q = inf gives the weak
/// form sup_t t C({|f| > t})^{1/p}.
NormEstimate capacitary_lorentz_norm(const Field& f, const LorentzExponents& e, const CapacityOracle& oracle);

struct StrichartzReport {
  double capacity = 0.0;        // C(E), reported value
  double capacity_lower = 0.0;  // certified lower end
  double piece_sum = 0.0;       // sum_j C(E cap B_j), reported values
  double piece_sum_upper = 0.0;
  std::size_t pieces = 0;
  double ratio = 0.0;       // piece_sum / capacity
  bool subadditive = true;  // capacity_lower <= piece_sum_upper
};

/// Cells grouped by the cube of side 1/sqrt(n) that contains their center.
std::vector<SetMask> strichartz_cover(const Grid& g, const SetMask& set);

StrichartzReport strichartz_check(const SetMask& set, const CapacityOracle& oracle);

struct LebesgueReport {
  bool skipped = false;
  double measure = 0.0;
  double capacity = 0.0;
  double ratio = 0.0;  // |E|^eps / C(E)
};

/// Rejects eps outside the admissible window: (0, 1] when alpha s = n, and
/// [(n - alpha s)/n, 1] when alpha s < n. Finite models use (0, 1].
LebesgueReport lebesgue_lower_bound_check(const SetMask& set, double eps, const CapacityOracle& oracle);

}  // namespace capflow
