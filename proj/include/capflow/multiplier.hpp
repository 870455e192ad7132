#pragma once

#include <vector>

#include "capflow/capacitary.hpp"
#include "capflow/families.hpp"
#include "capflow/weights.hpp"

namespace capflow {

/// sup_K ||f chi_K||_{L^{p,q}} / C(K)^{1/q} over the family.
NormEstimate m_norm(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                    const CapacityOracle& oracle);

/// Same supremum over already generated sets.
NormEstimate m_norm_over(const Field& f, const LorentzExponents& e, const std::vector<SetMask>& sets, bool exhaustive,
                         const CapacityOracle& oracle);

/// sup_K ||f chi_K||_{L^{p,q}} / C(K)^{1/p}.
NormEstimate script_m_norm(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                           const CapacityOracle& oracle);

struct WeakMReport {
  NormEstimate set_form;    // sup_K ||f chi_K||_{L^{p,inf}} / C(K)^{1/p}
  NormEstimate level_form;  // sup_t t ||chi_{|f| > t}||_{M^{p,p}}
  double discrepancy = 0.0;  // |set - level| / max(set, level)
};

WeakMReport weak_script_m_norm(const Field& f, double p, const TestSetFamily& family, const CapacityOracle& oracle);

struct LocalReport {
  NormEstimate local;   // family restricted to diameter <= 1
  NormEstimate global;  // same family without the cap
  double ratio = 0.0;   // global / local (1 when both vanish)
};

LocalReport m_norm_local(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                         const CapacityOracle& oracle);

struct WeightCharReport {
  double weights_sup = 0.0;  // max over candidates of ||f w^{1/q}||_{L^{p,q}}, w at unit L^1(C) norm
  NormEstimate sets;         // m_norm over the same sets
  double ratio_weights_over_sets = 0.0;
  double ratio_sets_over_weights = 0.0;
  // Per-set step: ||f (chi_K / C(K))^{1/q}|| * band <= ||f w_K^{1/q}|| with
  // w_K = (V^K)^delta / C(K) and band = min_K (V^K)^{delta / q}.
  std::size_t per_set_checked = 0;
  std::size_t per_set_violations = 0;
  double worst_per_set_ratio = 0.0;  // max lhs * band / rhs
};

/// Requires 1 < q <= p < inf. Candidates are the potential weights of the
/// family sets.
WeightCharReport char_m_via_weights(const Field& f, const LorentzExponents& e, const TestSetFamily& family,
                                    const WeightConfig& cfg, const CapacityOracle& oracle);

}  // namespace capflow
