#include "capflow/weights.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/multiplier.hpp"

namespace capflow {

namespace {

struct Offset {
  int d0, d1, r2;
};

// Ball offsets sorted by squared cell distance, out to radius kmax cells.
std::vector<Offset> ball_offsets(int dim, int kmax) {
  std::vector<Offset> out;
  const int k2 = kmax * kmax;
  for (int a = -kmax; a <= kmax; ++a) {
    if (dim == 1) {
      out.push_back({a, 0, a * a});
      continue;
    }
    for (int b = -kmax; b <= kmax; ++b)
      if (a * a + b * b <= k2) out.push_back({a, b, a * a + b * b});
  }
  std::stable_sort(out.begin(), out.end(), [](const Offset& x, const Offset& y) { return x.r2 < y.r2; });
  return out;
}

}  // namespace

Field local_maximal(const Grid& g, const Field& f) {
  if (f.size() != g.cells()) throw InvalidArgument("field does not live on this grid");
  const int kmax = static_cast<int>(std::floor(1.0 / g.spacing() + 1e-9));
  const auto offsets = ball_offsets(g.dim(), kmax);
  // ends[r - 1] = number of offsets inside the ball of radius r*h.
  std::vector<std::size_t> ends;
  for (int r = 1; r <= kmax; ++r) {
    auto it = std::upper_bound(offsets.begin(), offsets.end(), r * r, [](int v, const Offset& o) { return v < o.r2; });
    ends.push_back(static_cast<std::size_t>(it - offsets.begin()));
  }
  std::vector<double> out(g.cells());
  for (std::size_t c = 0; c < g.cells(); ++c) {
    auto a = g.axes(c);
    double sum = 0.0, best = 0.0;
    std::size_t k = 0;
    for (std::size_t end : ends) {
      for (; k < end; ++k) sum += std::fabs(f[g.cell(a[0] + offsets[k].d0, a[1] + offsets[k].d1)]);
      best = std::max(best, sum / static_cast<double>(end));
    }
    out[c] = best;
  }
  return Field(g.space(), std::move(out));
}

double a1loc_constant(const Grid& g, const Field& w) {
  auto m = local_maximal(g, w);
  double best = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw InvalidArgument("A1loc constant needs a positive weight");
    best = std::max(best, m[i] / w[i]);
  }
  return best;
}

const char* to_string(WeightKind k) {
  switch (k) {
    case WeightKind::potential: return "potential";
    case WeightKind::average: return "average";
    case WeightKind::user: return "user";
  }
  return "unknown";
}

Weight make_weight(Field omega, WeightKind kind, const CapacityOracle* oracle, const WeightConfig& cfg,
                   std::string label) {
  std::vector<double> v(omega.values().begin(), omega.values().end());
  std::size_t floored = 0;
  for (auto& x : v) {
    if (x < 0.0) throw InvalidArgument("weights must be nonnegative");
    if (x < kWeightFloor) {
      x = kWeightFloor;
      ++floored;
    }
  }
  Weight w{Field(omega.space(), std::move(v)), kind, floored, {}, {}, 0.0, 0.0, 0.0, std::move(label)};
  if (oracle) {
    if (oracle->model().is_grid()) w.a1 = a1loc_constant(*oracle->model().grid, w.omega);
    w.l1c = l1c_norm(w.omega, *oracle, cfg.l1c_levels);
  }
  return w;
}

Weight potential_weight(const SetMask& set, const WeightConfig& cfg, const CapacityOracle& oracle) {
  if (!(cfg.delta > 0.0 && cfg.delta <= 1.0)) throw InvalidArgument("delta must lie in (0, 1]");
  if (set.is_empty()) throw InvalidArgument("potential weight of the empty set");
  const auto& r = oracle.solve(set);
  auto pot = nonlinear_potential(oracle.model(), r.dual, oracle.params());
  std::vector<double> v(pot.values.size());
  double min_on_set = kInfinity;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double vd = std::pow(std::max(pot.values[i], 0.0), cfg.delta);
    v[i] = vd / r.value;
    if (set.contains(i)) min_on_set = std::min(min_on_set, vd);
  }
  auto w = make_weight(Field(oracle.space(), std::move(v)), WeightKind::potential, &oracle, cfg,
                       "potential:" + std::to_string(set.count()));
  w.capacity = r.value;
  w.min_on_set = min_on_set;
  w.l1c_ratio = w.l1c->value;
  return w;
}

Weight average_weights(const std::vector<std::pair<double, const Weight*>>& terms, const CapacityOracle* oracle,
                       const WeightConfig& cfg) {
  if (terms.empty()) throw InvalidArgument("average of no weights");
  double total = 0.0;
  for (const auto& [l, w] : terms) {
    if (l < 0.0) throw InvalidArgument("averaging coefficients must be nonnegative");
    total += l;
  }
  if (!(total > 0.0)) throw InvalidArgument("averaging coefficients sum to zero");
  const auto& first = terms.front().second->omega;
  std::vector<double> v(first.size(), 0.0);
  std::string label = "average";
  for (const auto& [l, w] : terms) {
    first.require_same_space(w->omega);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += l * w->omega[i];
  }
  for (auto& x : v) x /= total;
  return make_weight(Field(first.space(), std::move(v)), WeightKind::average, oracle, cfg, label);
}

namespace {

struct Scored {
  const Weight* weight;
  double value;
};

double weighted_norm(const Field& f, const Weight& w, const LorentzExponents& e) {
  const double qc = e.q_conj();
  const double scale = w.l1c->upper > 0.0 ? w.l1c->upper : w.l1c->value;
  std::vector<double> v(f.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] * std::pow(w.omega[i] / scale, -1.0 / qc);
  return lorentz_norm(Field(f.space(), std::move(v)), e);
}

}  // namespace

NormEstimate n_norm_upper(const Field& f, const LorentzExponents& e, const std::vector<Weight>& candidates,
                          double c_hat, const WeightConfig& cfg, const CapacityOracle& oracle) {
  if (!(e.p() > 1.0) || !(e.q() > 1.0) || e.weak()) throw InvalidArgument("N-norm needs 1 < p, q < inf");
  NormEstimate est;
  est.mode = EstimateMode::upper_bound;
  if (f.is_zero()) return est;
  const double limit = c_hat * cfg.slack;
  std::vector<Scored> scored;
  for (const auto& w : candidates) {
    if (!w.l1c) throw InvalidArgument("candidate weight lacks an L^1(C) certificate");
    if (w.a1 && *w.a1 > limit * (1.0 + 1e-12)) continue;
    scored.push_back({&w, weighted_norm(f, w, e)});
  }
  if (scored.empty()) throw InvalidArgument("no admissible weight candidates");
  std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) { return a.value < b.value; });
  est.value = scored.front().value;
  est.witness = scored.front().weight->label;
  est.max_gap = scored.front().weight->l1c->max_gap;

  // Convex re-averaging of the two best candidates.
  std::vector<Weight> mixes;
  mixes.reserve(16);
  const Weight* best = scored.front().weight;
  const Weight* second = scored.size() > 1 ? scored[1].weight : nullptr;
  for (int round = 0; second && round < 8; ++round) {
    mixes.push_back(average_weights({{1.0, best}, {1.0, second}}, &oracle, cfg));
    const Weight& mix = mixes.back();
    if (mix.a1 && *mix.a1 > limit * (1.0 + 1e-12)) break;
    const double v = weighted_norm(f, mix, e);
    if (!(v < est.value * (1.0 - 1e-4))) break;
    est.value = v;
    est.witness = "average of " + best->label + " and " + second->label;
    est.max_gap = std::max(est.max_gap, mix.l1c->max_gap);
    second = best;
    best = &mix;
  }
  est.upper = est.value;
  est.lower = 0.0;
  return est;
}

LevelSumReport level_sum_check(const Field& omega, const CapacityOracle& oracle) {
  LevelSumReport rep;
  std::map<int, std::vector<std::size_t>> bands;
  for (std::size_t i = 0; i < omega.size(); ++i) {
    const double v = omega[i];
    if (v < 0.0) throw InvalidArgument("level sum needs a nonnegative weight");
    if (v == 0.0) continue;
    int e = 0;
    const double m = std::frexp(v, &e);  // v = m 2^e, m in [1/2, 1)
    bands[m == 0.5 ? e - 1 : e].push_back(i);
  }
  for (const auto& [k, cells] : bands) {
    const auto& r = oracle.solve(SetMask::from_indices(omega.size(), cells));
    rep.level_sum += std::ldexp(r.value, k);
    rep.max_gap = std::max(rep.max_gap, r.gap);
  }
  rep.levels = bands.size();
  auto l1 = l1c_norm(omega, oracle);
  rep.l1c = l1.value;
  rep.max_gap = std::max(rep.max_gap, l1.max_gap);
  rep.ratio = rep.l1c > 0.0 ? rep.level_sum / rep.l1c : 0.0;
  return rep;
}

MaximalProbeReport maximal_boundedness_probe(const LorentzExponents& e, const std::vector<Field>& corpus,
                                             const TestSetFamily& family, const std::vector<Weight>& candidates,
                                             double c_hat, const WeightConfig& cfg, const CapacityOracle& oracle) {
  if (!oracle.model().is_grid()) throw InvalidArgument("maximal probe needs a grid model");
  const auto& g = *oracle.model().grid;
  MaximalProbeReport rep;
  for (const auto& f : corpus) {
    if (f.is_zero()) continue;
    auto mf = local_maximal(g, f);
    const double m0 = m_norm(f, e, family, oracle).value;
    const double m1 = m_norm(mf, e, family, oracle).value;
    rep.m_ratios.push_back(m1 / m0);
    if (!candidates.empty()) {
      const double n0 = n_norm_upper(f, e, candidates, c_hat, cfg, oracle).value;
      const double n1 = n_norm_upper(mf, e, candidates, c_hat, cfg, oracle).value;
      rep.n_ratios.push_back(n1 / n0);
    }
  }
  for (double r : rep.m_ratios) rep.max_m_ratio = std::max(rep.max_m_ratio, r);
  for (double r : rep.n_ratios) rep.max_n_ratio = std::max(rep.max_n_ratio, r);
  return rep;
}

}  // namespace capflow
