#pragma once

#include <optional>
#include <string>
#include <vector>

#include "capflow/capacitary.hpp"
#include "capflow/capacity.hpp"
#include "capflow/families.hpp"
#include "capflow/grid.hpp"
#include "capflow/measure.hpp"

namespace capflow {

/// M^loc f(x): largest average of |f| over discrete balls of radius
/// r in {h, 2h, ..., floor(1/h) h} around x (periodic center distance).
Field local_maximal(const Grid& g, const Field& f);

/// max_x M^loc w(x) / w(x); w must be positive.
double a1loc_constant(const Grid& g, const Field& w);

constexpr double kWeightFloor = 1e-12;

struct WeightConfig {
  double delta = 0.5;
  double slack = 1.25;
  /// Level cap for L^1(C) evaluations; 0 keeps the exact layer cake.
  std::size_t l1c_levels = 0;
};

enum class WeightKind { potential, average, user };

const char* to_string(WeightKind k);

struct Weight {
  Field omega;
  WeightKind kind = WeightKind::user;
  std::size_t floored_cells = 0;
  std::optional<double> a1;        // exact discrete [w]_{A1loc}, grids only
  std::optional<NormEstimate> l1c;  // ||w||_{L^1(C)}
  // Potential weights only: C(E) and ||(V^E)^delta||_{L^1(C)} / C(E).
  double capacity = 0.0;
  double l1c_ratio = 0.0;
  double min_on_set = 0.0;  // min over E of (V^E)^delta
  std::string label;
};

/// Floors w at kWeightFloor and attaches certificates when requested.
Weight make_weight(Field omega, WeightKind kind, const CapacityOracle* oracle, const WeightConfig& cfg,
                   std::string label = {});

/// w = (V^E)^delta / C(E) for the equilibrium potential of E.
Weight potential_weight(const SetMask& set, const WeightConfig& cfg, const CapacityOracle& oracle);

/// Convex combination sum_k l_k w_k / sum_k l_k with fresh certificates.
Weight average_weights(const std::vector<std::pair<double, const Weight*>>& terms, const CapacityOracle* oracle,
                       const WeightConfig& cfg);

/// Upper bound for ||f||_{N^{p,q}}: the smallest ||f w^{-1/q'}||_{L^{p,q}}
/// over admissible candidates, each rescaled to unit L^1(C) norm. A
/// candidate is admissible when its A1loc constant is at most c_hat * slack
/// (finite models have no A1loc screen).
NormEstimate n_norm_upper(const Field& f, const LorentzExponents& e, const std::vector<Weight>& candidates,
                          double c_hat, const WeightConfig& cfg, const CapacityOracle& oracle);

struct LevelSumReport {
  double level_sum = 0.0;  // sum_k 2^k C({2^{k-1} < w <= 2^k})
  double l1c = 0.0;
  double ratio = 0.0;
  std::size_t levels = 0;
  double max_gap = 0.0;
};

LevelSumReport level_sum_check(const Field& omega, const CapacityOracle& oracle);

struct MaximalProbeReport {
  double max_m_ratio = 0.0;  // m_norm(M^loc f) / m_norm(f)
  double max_n_ratio = 0.0;  // n_norm_upper(M^loc f) / n_norm_upper(f)
  std::vector<double> m_ratios;
  std::vector<double> n_ratios;
};

/// Ratios of multiplier and N-norm estimates before and after M^loc over a
/// corpus. Candidates for the N-norm are the potential weights of the given
/// sets.
MaximalProbeReport maximal_boundedness_probe(const LorentzExponents& e, const std::vector<Field>& corpus,
                                             const TestSetFamily& family, const std::vector<Weight>& candidates,
                                             double c_hat, const WeightConfig& cfg, const CapacityOracle& oracle);

}  // namespace capflow
