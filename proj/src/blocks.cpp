#include "capflow/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/multiplier.hpp"

namespace capflow {

const char* to_string(BlockType t) { return t == BlockType::b ? "B" : "script-B"; }

double block_capacity_power(BlockType type, const LorentzExponents& e) {
  return type == BlockType::b ? 1.0 / e.q_conj() : 1.0 / e.p_conj();
}

Block validate_block(const Field& b, const SetMask& support, const LorentzExponents& e, BlockType type,
                     const CapacityOracle& oracle) {
  if (support.size() != b.size()) throw InvalidArgument("block support does not match field");
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i] != 0.0 && !support.contains(i)) throw InvalidArgument("block does not vanish off its support");
  const double power = block_capacity_power(type, e);
  Block blk{b, support, e, type, 0.0, 0.0};
  if (b.is_zero()) return blk;
  blk.capacity = oracle.value(support);
  blk.normalization = std::pow(blk.capacity, power) * lorentz_norm(b, e);
  if (blk.normalization > 1.0 + kBlockTolerance)
    throw InvalidArgument("block normalization " + std::to_string(blk.normalization) + " exceeds 1");
  return blk;
}

namespace {

int dyadic_level(double v) {
  int e = 0;
  const double m = std::frexp(v, &e);
  return m == 0.5 ? e - 1 : e;
}

double sup_residual(const Field& f, const Field& rebuilt) {
  double r = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) r = std::max(r, std::fabs(f[i] - rebuilt[i]));
  return r;
}

// One tight block on the given piece; returns lambda.
BlockTerm tight_term(const Field& piece, const SetMask& support, const LorentzExponents& e,
                     const CapacityOracle& oracle) {
  const double cap = oracle.value(support);
  const double lambda = lorentz_norm(piece, e) * std::pow(cap, 1.0 / e.q_conj());
  BlockTerm t{lambda, validate_block(piece.scaled(1.0 / lambda), support, e, BlockType::b, oracle), 0, 0};
  return t;
}

void finalize(BlockDecomposition& d, const Field& f) {
  d.lambda_sum = 0.0;
  for (const auto& t : d.terms) d.lambda_sum += std::fabs(t.lambda);
  d.residual = sup_residual(f, reconstruct(d, f.space()));
}

}  // namespace

Field reconstruct(const BlockDecomposition& d, const SpacePtr& space) {
  std::vector<double> v(space->size(), 0.0);
  for (const auto& t : d.terms)
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += t.lambda * t.block.b[i];
  return Field(space, std::move(v));
}

BlockDecomposition block_norm_upper_constructive(const Field& f, const LorentzExponents& e, const Weight& w,
                                                 const CapacityOracle& oracle) {
  f.require_same_space(w.omega);
  (void)e.q_conj();
  BlockDecomposition d;
  d.route = "constructive";
  const auto& model = oracle.model();
  std::map<std::pair<int, int>, std::vector<std::size_t>> pieces;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const int k = dyadic_level(w.omega[i]);
    int l = 1;
    if (model.is_grid()) {
      auto x = model.grid->point(i);
      l = static_cast<int>(std::floor(std::hypot(x[0], x[1]))) + 1;
    }
    pieces[{k, l}].push_back(i);
  }
  for (const auto& [kl, cells] : pieces) {
    auto set = SetMask::from_indices(f.size(), cells);
    auto piece = f.restricted(set);
    if (piece.is_zero()) continue;
    auto t = tight_term(piece, set, e, oracle);
    t.level = kl.first;
    t.annulus = kl.second;
    d.terms.push_back(std::move(t));
  }
  finalize(d, f);
  return d;
}

BlockDecomposition block_norm_upper_greedy(const Field& f, const LorentzExponents& e, const TestSetFamily& dictionary,
                                           const CapacityOracle& oracle, const Weight* w) {
  (void)e.q_conj();
  BlockDecomposition d;
  d.route = "greedy";
  if (!f.is_zero()) {
    auto sets = dictionary.generate(f, oracle.model());
    std::vector<bool> used(sets.size(), false);
    Field r = f;
    while (!r.is_zero()) {
      std::size_t best = sets.size();
      double best_norm = 0.0;
      for (std::size_t k = 0; k < sets.size(); ++k) {
        if (used[k]) continue;
        const double n = lorentz_norm(r.restricted(sets[k]), e);
        if (n > best_norm) {
          best_norm = n;
          best = k;
        }
      }
      if (best == sets.size()) break;
      used[best] = true;
      auto piece = r.restricted(sets[best]);
      d.terms.push_back(tight_term(piece, sets[best], e, oracle));
      std::vector<double> next(r.values().begin(), r.values().end());
      for (std::size_t i = 0; i < next.size(); ++i)
        if (sets[best].contains(i)) next[i] = 0.0;
      r = Field(r.space(), std::move(next));
    }
    d.uncovered_cells = r.support().count();
  }
  finalize(d, f);
  if (w) {
    auto c = block_norm_upper_constructive(f, e, *w, oracle);
    if (d.uncovered_cells > 0 || c.lambda_sum < d.lambda_sum) return c;
  }
  return d;
}

BlockDecomposition transport(const BlockDecomposition& d, const Field& f, const Field& g,
                             const CapacityOracle& oracle) {
  f.require_same_space(g);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (std::fabs(g[i]) > std::fabs(f[i])) throw InvalidArgument("transport needs |g| <= |f|");
  BlockDecomposition out;
  out.route = d.route + "+transport";
  for (const auto& t : d.terms) {
    std::vector<double> v(f.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i)
      if (f[i] != 0.0) v[i] = g[i] / f[i] * t.block.b[i];
    const auto& blk = t.block;
    BlockTerm moved{t.lambda, validate_block(Field(f.space(), std::move(v)), blk.support, blk.exponents, blk.type, oracle),
                    t.level, t.annulus};
    out.terms.push_back(std::move(moved));
  }
  out.uncovered_cells = d.uncovered_cells;
  finalize(out, g);
  return out;
}

PairingReport pairing_inequality_suite(const std::vector<PairingSample>& corpus) {
  PairingReport rep;
  for (const auto& s : corpus) {
    const double den = s.m_estimate * s.lambda_sum;
    const double num = pairing_abs(s.f, s.g);
    if (!(den > 0.0)) {
      ++rep.skipped;
      continue;
    }
    rep.ratios.push_back(num / den);
    rep.max_ratio = std::max(rep.max_ratio, num / den);
  }
  return rep;
}

double AtomicMeasure::total_variation(const SetMask& set) const {
  if (set.size() != masses.size()) throw InvalidArgument("set does not match measure");
  double s = 0.0;
  for (std::size_t i = 0; i < masses.size(); ++i)
    if (set.contains(i)) s += std::fabs(masses[i]);
  return s;
}

NormEstimate trace_norm(const AtomicMeasure& mu, const TestSetFamily& family, const CapacityOracle& oracle) {
  if (mu.masses.size() != oracle.model().size()) throw InvalidArgument("measure does not match model");
  NormEstimate est;
  est.mode = family.exhaustive() && !oracle.model().is_grid() ? EstimateMode::exact : EstimateMode::lower_bound;
  Field abs(oracle.space(), mu.masses);
  if (abs.is_zero()) return est;
  auto sets = family.generate(abs.abs(), oracle.model());
  if (sets.empty()) throw InvalidArgument("empty effective test-set family");
  for (const auto& k : sets) {
    const double tv = mu.total_variation(k);
    if (tv == 0.0) continue;
    const auto& r = oracle.solve(k);
    const double v = tv / r.value;
    est.lower = std::max(est.lower, tv / r.upper);
    est.upper = std::max(est.upper, tv / r.lower);
    est.max_gap = std::max(est.max_gap, r.gap);
    if (v > est.value) {
      est.value = v;
      est.witness_set = k;
      est.witness = "set of " + std::to_string(k.count()) + " atoms";
    }
  }
  return est;
}

double trace_norm_inf_form(const AtomicMeasure& mu, const CapacityOracle& oracle) {
  const std::size_t m = mu.masses.size();
  if (m != oracle.model().size()) throw InvalidArgument("measure does not match model");
  const auto sets = all_nonempty_subsets(m);
  std::vector<double> tv(sets.size()), cap(sets.size());
  double total = 0.0, min_cap = kInfinity;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    tv[k] = mu.total_variation(sets[k]);
    cap[k] = oracle.value(sets[k]);
    total = std::max(total, tv[k]);
    min_cap = std::min(min_cap, cap[k]);
  }
  if (total == 0.0) return 0.0;
  auto admissible = [&](double a) {
    for (std::size_t k = 0; k < sets.size(); ++k)
      if (tv[k] > a * cap[k]) return false;
    return true;
  };
  double lo = 0.0, hi = total / min_cap;
  while (!admissible(hi)) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (admissible(mid) ? hi : lo) = mid;
  }
  return hi;
}

namespace {

class KotheObjective {
 public:
  KotheObjective(const Field& f, const KotheSpace& x, const CapacityOracle* oracle) : f_(f), x_(x), oracle_(oracle) {
    if (x.kind == KotheSpace::multiplier) {
      if (!oracle) throw InvalidArgument("multiplier Kothe dual needs a capacity oracle");
      sets_ = all_nonempty_subsets(f.size());
    }
  }

  double norm(const Field& g) const {
    if (x_.kind == KotheSpace::lorentz) return lorentz_norm(g, x_.exponents);
    return m_norm_over(g, x_.exponents, sets_, true, *oracle_).value;
  }

  double ratio(const std::vector<double>& g) const {
    Field gf(f_.space(), g);
    const double n = norm(gf);
    if (!(n > 0.0)) return 0.0;
    return pairing_abs(f_, gf) / n;
  }

 private:
  const Field& f_;
  const KotheSpace& x_;
  const CapacityOracle* oracle_;
  std::vector<SetMask> sets_;
};

// Multiplicative pattern search on the nonnegative cone.
double local_search(const KotheObjective& obj, std::vector<double>& g, const std::vector<std::size_t>& active) {
  double best = obj.ratio(g);
  for (double step = 0.5; step > 1e-10;) {
    bool improved = false;
    for (std::size_t i : active) {
      const double keep = g[i];
      for (double trial : {keep * (1.0 + step), keep * (1.0 - step), keep + step}) {
        g[i] = trial;
        const double r = obj.ratio(g);
        if (r > best * (1.0 + 1e-15)) {
          best = r;
          improved = true;
          break;
        }
        g[i] = keep;
      }
    }
    if (!improved) step *= 0.5;
  }
  return best;
}

}  // namespace

NormEstimate kothe_dual_norm_bruteforce(const Field& f, const KotheSpace& space, const CapacityOracle* oracle,
                                        std::uint64_t seed) {
  if (f.size() > kKotheMaxAtoms) throw InvalidArgument("Kothe brute force is limited to 6 atoms");
  NormEstimate est;
  est.mode = EstimateMode::lower_bound;
  if (f.is_zero()) return est;
  KotheObjective obj(f, space, oracle);
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] != 0.0) active.push_back(i);

  const double P = space.exponents.p();
  std::vector<double> aligned(f.size(), 0.0);
  for (std::size_t i : active) aligned[i] = P > 1.0 ? std::pow(std::fabs(f[i]), conjugate_exponent(P) - 1.0) : 1.0;
  est.value = obj.ratio(aligned);
  est.witness = "aligned";
  {
    auto g = aligned;
    const double r = local_search(obj, g, active);
    if (r > est.value) {
      est.value = r;
      est.witness = "aligned+search";
    }
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int s = 0; s < kKotheStarts; ++s) {
    std::vector<double> g(f.size(), 0.0);
    for (std::size_t i : active) g[i] = u(rng);
    const double r = local_search(obj, g, active);
    if (r > est.value) {
      est.value = r;
      est.witness = "start " + std::to_string(s);
    }
  }
  est.lower = est.value;
  est.upper = kInfinity;
  return est;
}

}  // namespace capflow
