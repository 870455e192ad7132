#include "capflow/multiplier.hpp"

#include <algorithm>
#include <cmath>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"

namespace capflow {

namespace {

void require_open(double r, const char* what) {
  if (!(r > 1.0) || !std::isfinite(r)) throw InvalidArgument(std::string(what) + " must lie in (1, inf)");
}

// sup over sets of num(K) / C(K)^power, bracketed by the capacity certificates.
template <class Num>
NormEstimate family_sup(const std::vector<SetMask>& sets, bool exhaustive, double power, const CapacityOracle& oracle,
                        Num num) {
  NormEstimate est;
  est.mode = exhaustive && !oracle.model().is_grid() ? EstimateMode::exact : EstimateMode::lower_bound;
  if (sets.empty()) throw InvalidArgument("empty effective test-set family");
  std::size_t best = sets.size();
  for (std::size_t k = 0; k < sets.size(); ++k) {
    const double n = num(sets[k]);
    if (n == 0.0) continue;
    const auto& r = oracle.solve(sets[k]);
    if (!(r.value > 0.0)) continue;
    const double v = n / std::pow(r.value, power);
    est.lower = std::max(est.lower, n / std::pow(r.upper, power));
    est.upper = std::max(est.upper, n / std::pow(r.lower, power));
    est.max_gap = std::max(est.max_gap, r.gap);
    if (best == sets.size() || v > est.value) {
      est.value = v;
      best = k;
    }
  }
  if (best < sets.size()) {
    est.witness_set = sets[best];
    est.witness = "set of " + std::to_string(sets[best].count()) + " atoms";
  }
  return est;
}

}  // namespace

NormEstimate m_norm_over(const Field& f, const LorentzExponents& e, const std::vector<SetMask>& sets, bool exhaustive,
                         const CapacityOracle& oracle) {
  require_open(e.p(), "p");
  require_open(e.q(), "q");
  if (f.is_zero()) return {};
  return family_sup(sets, exhaustive, 1.0 / e.q(), oracle,
                    [&](const SetMask& k) { return lorentz_norm(f.restricted(k), e); });
}

NormEstimate m_norm(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                    const CapacityOracle& oracle) {
  require_open(e.p(), "p");
  require_open(e.q(), "q");
  if (f.is_zero()) return {};
  return m_norm_over(f, e, family.generate(f, oracle.model()), family.exhaustive(), oracle);
}

NormEstimate script_m_norm(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                           const CapacityOracle& oracle) {
  require_open(e.p(), "p");
  require_open(e.q(), "q");
  if (f.is_zero()) return {};
  return family_sup(family.generate(f, oracle.model()), family.exhaustive(), 1.0 / e.p(), oracle,
                    [&](const SetMask& k) { return lorentz_norm(f.restricted(k), e); });
}

WeakMReport weak_script_m_norm(const Field& f, double p, const TestSetFamily& family, const CapacityOracle& oracle) {
  require_open(p, "p");
  WeakMReport rep;
  if (f.is_zero()) return rep;
  const auto sets = family.generate(f, oracle.model());
  const bool ex = family.exhaustive();
  rep.set_form = family_sup(sets, ex, 1.0 / p, oracle,
                            [&](const SetMask& k) { return weak_lorentz_norm(f.restricted(k), p); });

  // Level form: sup over breakpoints t -> v_i^- of v_i ||chi_{S_i}||_{M^{p,p}}.
  const auto& space = f.measure();
  auto levels = levels_of(f);
  auto supersets = superlevel_sets(f);
  rep.level_form.mode = rep.set_form.mode;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const auto& s = supersets[i];
    auto est = family_sup(sets, ex, 1.0 / p, oracle, [&](const SetMask& k) {
      return std::pow(s.intersect(k).measure(space), 1.0 / p);
    });
    const double v = levels[i].value;
    if (v * est.value > rep.level_form.value) {
      rep.level_form.value = v * est.value;
      rep.level_form.witness_set = est.witness_set;
      rep.level_form.witness = "level " + std::to_string(i);
    }
    rep.level_form.lower = std::max(rep.level_form.lower, v * est.lower);
    rep.level_form.upper = std::max(rep.level_form.upper, v * est.upper);
    rep.level_form.max_gap = std::max(rep.level_form.max_gap, est.max_gap);
  }
  const double big = std::max(rep.set_form.value, rep.level_form.value);
  rep.discrepancy = big > 0.0 ? std::fabs(rep.set_form.value - rep.level_form.value) / big : 0.0;
  return rep;
}

LocalReport m_norm_local(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                         const CapacityOracle& oracle) {
  if (!oracle.model().is_grid()) throw InvalidArgument("local multiplier norm needs a grid model");
  LocalReport rep;
  if (f.is_zero()) {
    rep.ratio = 1.0;
    return rep;
  }
  rep.global = m_norm(f, e, family, oracle);
  rep.local = m_norm(f, e, family.with_diameter_cap(1.0), oracle);
  rep.ratio = rep.local.value > 0.0 ? rep.global.value / rep.local.value : kInfinity;
  return rep;
}

WeightCharReport char_m_via_weights(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                                    const WeightConfig& cfg, const CapacityOracle& oracle) {
  require_open(e.p(), "p");
  require_open(e.q(), "q");
  if (e.q() > e.p()) throw InvalidArgument("weight characterization needs q <= p");
  WeightCharReport rep;
  if (f.is_zero()) return rep;
  const auto sets = family.generate(f, oracle.model());
  rep.sets = m_norm_over(f, e, sets, family.exhaustive(), oracle);
  const double q = e.q();
  for (const auto& k : sets) {
    auto w = potential_weight(k, cfg, oracle);
    std::vector<double> raw(f.size()), unit(f.size());
    const double l1 = w.l1c->upper > 0.0 ? w.l1c->upper : w.l1c->value;
    for (std::size_t i = 0; i < f.size(); ++i) {
      raw[i] = f[i] * std::pow(w.omega[i], 1.0 / q);
      unit[i] = f[i] * std::pow(w.omega[i] / l1, 1.0 / q);
    }
    const double rhs = lorentz_norm(Field(f.space(), std::move(raw)), e);
    rep.weights_sup = std::max(rep.weights_sup, lorentz_norm(Field(f.space(), std::move(unit)), e));

    const double lhs = lorentz_norm(f.restricted(k), e) / std::pow(w.capacity, 1.0 / q);
    if (lhs == 0.0) continue;
    const double band = std::pow(w.min_on_set, 1.0 / q);
    const double r = lhs * band / rhs;
    ++rep.per_set_checked;
    rep.worst_per_set_ratio = std::max(rep.worst_per_set_ratio, r);
    if (r > 1.0 + 1e-12) ++rep.per_set_violations;
  }
  if (rep.sets.value > 0.0 && rep.weights_sup > 0.0) {
    rep.ratio_weights_over_sets = rep.weights_sup / rep.sets.value;
    rep.ratio_sets_over_weights = rep.sets.value / rep.weights_sup;
  }
  return rep;
}

}  // namespace capflow
