#include "capflow/capacitary.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"

namespace capflow {

const char* to_string(EstimateMode m) {
  switch (m) {
    case EstimateMode::exact: return "exact";
    case EstimateMode::lower_bound: return "lower-bound";
    case EstimateMode::upper_bound: return "upper-bound";
  }
  return "unknown";
}

namespace {

SetMask at_least(const Field& f, double t) {
  std::vector<std::uint8_t> bits(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) bits[i] = std::fabs(f[i]) >= t && f[i] != 0.0;
  return SetMask(std::move(bits));
}

}  // namespace

NormEstimate l1c_norm(const Field& omega, const CapacityOracle& oracle, std::size_t max_levels) {
  for (double v : omega.values())
    if (v < 0.0) throw InvalidArgument("l1c_norm needs a nonnegative field");
  NormEstimate est;
  auto levels = levels_of(omega);
  if (levels.empty()) return est;
  auto sets = superlevel_sets(omega);

  if (max_levels == 0 || levels.size() <= max_levels) {
    for (std::size_t i = 0; i < levels.size(); ++i) {
      const double next = i + 1 < levels.size() ? levels[i + 1].value : 0.0;
      const double dt = levels[i].value - next;
      const auto& r = oracle.solve(sets[i]);
      est.value += r.value * dt;
      est.lower += r.lower * dt;
      est.upper += r.upper * dt;
      est.max_gap = std::max(est.max_gap, r.gap);
    }
    est.witness = std::to_string(levels.size()) + " levels";
    return est;
  }

  // Quantized layer cake: C({w > t}) is sandwiched between the capacities of
  // the neighbouring threshold sets.
  const std::size_t m = levels.size(), k = max_levels;
  std::vector<double> t;
  for (std::size_t j = 0; j < k; ++j) t.push_back(levels[j * m / k].value);
  t.push_back(0.0);
  std::vector<SetMask> s;
  for (std::size_t j = 0; j < k; ++j) s.push_back(at_least(omega, t[j]));
  s.push_back(sets.back());
  for (std::size_t j = 0; j < k; ++j) {
    const double dt = t[j] - t[j + 1];
    const auto& lo = oracle.solve(s[j]);
    const auto& hi = oracle.solve(s[j + 1]);
    est.lower += lo.lower * dt;
    est.upper += hi.upper * dt;
    est.max_gap = std::max({est.max_gap, lo.gap, hi.gap});
  }
  est.value = est.upper;
  est.mode = EstimateMode::upper_bound;
  est.witness = std::to_string(k) + " quantized levels";
  return est;
}

NormEstimate capacitary_lorentz_norm(const Field& f, const LorentzExponents& e, const CapacityOracle& oracle) {
  NormEstimate est;
  auto levels = levels_of(f);
  if (levels.empty()) return est;
  auto sets = superlevel_sets(f);
  std::vector<double> v, cv, cl, cu;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& r = oracle.solve(sets[i]);
    v.push_back(levels[i].value);
    cv.push_back(r.value);
    cl.push_back(r.lower);
    cu.push_back(r.upper);
    est.max_gap = std::max(est.max_gap, r.gap);
  }
  if (e.weak()) {
    est.value = weak_lorentz_from_levels(v, cv, e.p());
    est.lower = weak_lorentz_from_levels(v, cl, e.p());
    est.upper = weak_lorentz_from_levels(v, cu, e.p());
  } else {
    est.value = lorentz_from_levels(v, cv, e.p(), e.q());
    est.lower = lorentz_from_levels(v, cl, e.p(), e.q());
    est.upper = lorentz_from_levels(v, cu, e.p(), e.q());
  }
  est.witness = std::to_string(levels.size()) + " levels";
  return est;
}

std::vector<SetMask> strichartz_cover(const Grid& g, const SetMask& set) {
  if (set.size() != g.cells()) throw InvalidArgument("mask does not match grid");
  const double side = 1.0 / std::sqrt(static_cast<double>(g.dim()));
  std::map<std::pair<long, long>, std::vector<std::size_t>> cubes;
  for (std::size_t c : set.indices()) {
    auto x = g.point(c);
    const long a = static_cast<long>(std::floor(x[0] / side));
    const long b = g.dim() == 2 ? static_cast<long>(std::floor(x[1] / side)) : 0;
    cubes[{a, b}].push_back(c);
  }
  std::vector<SetMask> out;
  for (auto& [key, cells] : cubes) out.push_back(SetMask::from_indices(g.cells(), cells));
  return out;
}

StrichartzReport strichartz_check(const SetMask& set, const CapacityOracle& oracle) {
  const auto& model = oracle.model();
  if (!model.is_grid()) throw InvalidArgument("strichartz check needs a grid model");
  StrichartzReport rep;
  if (set.is_empty()) return rep;
  const auto& whole = oracle.solve(set);
  rep.capacity = whole.value;
  rep.capacity_lower = whole.lower;
  for (const auto& piece : strichartz_cover(*model.grid, set)) {
    const auto& r = oracle.solve(piece);
    rep.piece_sum += r.value;
    rep.piece_sum_upper += r.upper;
    ++rep.pieces;
  }
  rep.ratio = rep.piece_sum / rep.capacity;
  rep.subadditive = rep.capacity_lower <= rep.piece_sum_upper;
  return rep;
}

LebesgueReport lebesgue_lower_bound_check(const SetMask& set, double eps, const CapacityOracle& oracle) {
  const auto& model = oracle.model();
  double lo = 0.0;
  bool open_left = true;
  if (model.is_grid()) {
    const double n = model.grid->dim();
    const double as = oracle.params().alpha * oracle.params().s;
    if (as < n - 1e-12) {
      lo = (n - as) / n;
      open_left = false;
    }
  }
  if (!(eps <= 1.0) || (open_left ? !(eps > lo) : !(eps >= lo)))
    throw InvalidArgument("epsilon " + std::to_string(eps) + " outside the admissible window");
  LebesgueReport rep;
  if (set.is_empty()) {
    rep.skipped = true;
    return rep;
  }
  rep.measure = set.measure(*model.space);
  rep.capacity = oracle.value(set);
  rep.ratio = std::pow(rep.measure, eps) / rep.capacity;
  return rep;
}

}  // namespace capflow
