#include "capflow/suites.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <json.hpp>

#include "capflow/blocks.hpp"
#include "capflow/capacitary.hpp"
#include "capflow/capacity.hpp"
#include "capflow/errors.hpp"
#include "capflow/families.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/model_io.hpp"
#include "capflow/multiplier.hpp"
#include "capflow/weights.hpp"

namespace capflow {

const char* to_string(VerdictStatus s) {
  switch (s) {
    case VerdictStatus::pass: return "pass";
    case VerdictStatus::fail: return "fail";
    case VerdictStatus::recorded: return "recorded";
  }
  return "?";
}

bool SuiteReport::failed() const {
  return std::any_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.status == VerdictStatus::fail; });
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"lorentz-core", "capacity", "capacitary", "multiplier", "blocks",
                                              "weights",      "maximal",  "trace",      "kothe",      "all"};
  return names;
}

const std::vector<std::string>& in_scope_anchors() {
  static const std::vector<std::string> anchors{
      "capacity-definition",     "lorentz-space",         "multiplier-M",         "multiplier-script-M",
      "multiplier-weak",         "n-space",               "block-spaces",         "capacitary-l1",
      "local-maximal",           "a1loc-weights",         "trace-class",          "capacitary-lorentz",
      "trace-formula",           "gamma-sandwich",        "power-identity",       "sobolev-lower-bounds",
      "equilibrium-potential",   "strichartz-localization", "diameter-localization", "norm-switching",
      "pairing-estimate",        "constructive-blocks",   "level-sum-bound",      "weight-averaging",
      "weight-characterization", "pairing-direction",     "maximal-boundedness",  "embedding-constants"};
  return anchors;
}

void SuiteSpec::validate() const {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) throw InvalidArgument("unknown suite " + name);
  if (lattice.empty()) throw InvalidArgument("empty exponent lattice");
  for (auto [p, q] : lattice)
    if (!(p > 1.0 && q > 1.0 && std::isfinite(p) && std::isfinite(q)))
      throw InvalidArgument("lattice exponents must lie in (1, inf)");
  config.validate();
}

namespace {

// ---------------------------------------------------------------------------
// plumbing

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t check_seed(std::uint64_t master, const std::string& id) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : id) h = (h ^ c) * 1099511628211ull;
  return splitmix(master ^ h);
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class OracleBank {
 public:
  std::shared_ptr<const CapacityOracle> grid(int dim, double length, int points, double alpha, double s, double tol) {
    char key[128];
    std::snprintf(key, sizeof key, "%d/%.17g/%d/%.17g/%.17g/%.17g", dim, length, points, alpha, s, tol);
    std::lock_guard lock(mutex_);
    auto& slot = bank_[key];
    if (!slot) {
      CapacityParams p;
      p.alpha = alpha;
      p.s = s;
      p.tol = tol;
      p.validate_for_grid(dim);
      slot = std::make_shared<CapacityOracle>(CapacityModel::on_grid(make_grid(dim, length, points), alpha), p);
    }
    return slot;
  }

 private:
  std::mutex mutex_;
  std::map<std::string, std::shared_ptr<const CapacityOracle>> bank_;
};

struct Context {
  const SuiteSpec& spec;
  std::uint64_t seed;
  OracleBank& bank;
  std::vector<std::pair<std::string, double>> calibration;

  const SuiteTolerances& tol() const { return spec.tol; }
  const Config& cfg() const { return spec.config; }
  CapacityParams params(double s) const {
    CapacityParams p;
    p.s = s;
    p.tol = cfg().cap_tol;
    return p;
  }
  WeightConfig weight_cfg() const { return {cfg().weights_delta, cfg().weights_slack, 0}; }
  // Grid model the campaign was configured with.
  std::shared_ptr<const CapacityOracle> primary() const {
    return bank.grid(cfg().grid_dim, cfg().grid_length, cfg().grid_points, cfg().cap_alpha, cfg().cap_s,
                     cfg().cap_tol);
  }
};

Verdict judged(bool ok, double measured, std::string detail) {
  return {"", ok ? VerdictStatus::pass : VerdictStatus::fail, measured, "", std::move(detail)};
}

Verdict recorded(double measured, std::string detail) {
  return {"", VerdictStatus::recorded, measured, "", std::move(detail)};
}

double uniform(std::mt19937_64& rng, double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }

std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Mixed-sign values with zeros and repeated levels.
Field random_field(std::mt19937_64& rng, const SpacePtr& space, bool nonnegative = false) {
  std::vector<double> v(space->size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double r = uniform(rng, 0.0, 1.0);
    if (r < 0.15) {
      v[i] = 0.0;
    } else if (r < 0.3 && i > 0) {
      v[i] = v[pick(rng, 0, i - 1)];
    } else {
      v[i] = uniform(rng, 0.01, 3.0);
      if (!nonnegative && uniform(rng, 0.0, 1.0) < 0.2) v[i] = -v[i];
    }
  }
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
  return Field(space, std::move(v));
}

SpacePtr random_space(std::mt19937_64& rng, std::size_t m) {
  std::vector<double> w(m);
  for (auto& x : w) x = uniform(rng, 0.5, 2.0);
  return MeasureSpace::make(std::move(w));
}

SetMask random_subset(std::mt19937_64& rng, std::size_t m) {
  std::vector<std::uint8_t> bits(m);
  bool any = false;
  for (auto& b : bits) {
    b = uniform(rng, 0.0, 1.0) < 0.5;
    any = any || b;
  }
  if (!any) bits[pick(rng, 0, m - 1)] = 1;
  return SetMask(std::move(bits));
}

// Positive diagonal, sparse nonnegative off-diagonal part.
CapacityModel random_finite_model(std::mt19937_64& rng, std::size_t m) {
  auto space = random_space(rng, m);
  Eigen::MatrixXd k(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) {
        k(i, j) = uniform(rng, 0.5, 1.5);
      } else {
        const double u = uniform(rng, 0.0, 1.0);
        const double v = uniform(rng, 0.0, 1.0);
        k(i, j) = u < 0.5 ? 0.0 : v * v;
      }
    }
  return CapacityModel::finite(space, std::make_shared<MatrixKernel>(std::move(k)));
}

SetMask region(const Grid& g, const std::function<bool(double, double)>& inside) {
  std::vector<std::size_t> cells;
  for (std::size_t c = 0; c < g.cells(); ++c) {
    auto x = g.point(c);
    if (inside(x[0], x[1])) cells.push_back(c);
  }
  return SetMask::from_indices(g.cells(), cells);
}

// Continuum test sets, small enough for the 8-unit margin in both boxes.
std::vector<std::pair<std::string, SetMask>> continuum_sets(const Grid& g) {
  std::vector<std::pair<std::string, SetMask>> out;
  if (g.dim() == 1) {
    out.emplace_back("interval length 3", region(g, [](double x, double) { return std::fabs(x) <= 1.5; }));
    out.emplace_back("interval length 0.8", region(g, [](double x, double) { return std::fabs(x) <= 0.4; }));
    out.emplace_back("two intervals", region(g, [](double x, double) {
                       return (x >= -2.3 && x <= -1.5) || (x >= 0.5 && x <= 1.3);
                     }));
  } else {
    out.emplace_back("unit square", region(g, [](double x, double y) {
                       return std::fabs(x) <= 0.5 && std::fabs(y) <= 0.5;
                     }));
    out.emplace_back("rectangle 1.4x0.7", region(g, [](double x, double y) {
                       return std::fabs(x) <= 0.7 && std::fabs(y) <= 0.35;
                     }));
    out.emplace_back("disc radius 0.7", region(g, [](double x, double y) { return x * x + y * y <= 0.49; }));
  }
  for (auto& [name, set] : out) validate_box(g, set_diameter(g, set));
  return out;
}

// Intervals (or squares) centered at c with half-width r.
SetMask ball(const Grid& g, double c, double r) {
  return region(g, [&](double x, double y) {
    return g.dim() == 1 ? std::fabs(x - c) <= r : std::max(std::fabs(x - c), std::fabs(y)) <= r;
  });
}

// Smooth bumps plus noise, supported in [-3, 3].
Field random_bump_field(std::mt19937_64& rng, const Grid& g) {
  const int bumps = static_cast<int>(pick(rng, 1, 3));
  std::vector<double> c(bumps), r(bumps), a(bumps);
  for (int k = 0; k < bumps; ++k) {
    c[k] = uniform(rng, -2.0, 2.0);
    r[k] = uniform(rng, 0.3, 1.0);
    a[k] = uniform(rng, 0.5, 2.0);
  }
  std::vector<double> v(g.cells(), 0.0);
  for (std::size_t i = 0; i < v.size(); ++i) {
    auto x = g.point(i);
    for (int k = 0; k < bumps; ++k) {
      const double d = std::hypot(x[0] - c[k], g.dim() == 2 ? x[1] : 0.0) / r[k];
      if (d < 1.0) v[i] += a[k] * (1.0 - d * d);
    }
    if (v[i] > 0.0) v[i] *= uniform(rng, 0.9, 1.1);
  }
  if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[g.cells() / 2] = 1.0;
  return Field(g.space(), std::move(v));
}

Block tight_block(const Field& piece, const SetMask& support, const LorentzExponents& e, BlockType type,
                  const CapacityOracle& oracle) {
  const double cap = oracle.value(support);
  const double scale = lorentz_norm(piece, e) * std::pow(cap, block_capacity_power(type, e));
  return validate_block(piece.scaled(1.0 / scale), support, e, type, oracle);
}

// Worst ratio max(a/b, b/a) between two positive maxima.
double drift_of(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) return a == b ? 1.0 : kInfinity;
  return std::max(a / b, b / a);
}

// ---------------------------------------------------------------------------
// Lorentz engine

double layer_cake_quadrature(const Field& f, double p, double q) {
  auto lv = levels_of(f);
  boost::math::quadrature::tanh_sinh<double> ts;
  double total = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i) {
    const double hi = lv[i].value;
    const double lo = i + 1 < lv.size() ? lv[i + 1].value : 0.0;
    if (!(hi > 0.0)) continue;
    auto g = [q](double t) { return std::pow(t, q - 1.0); };
    total += std::pow(lv[i].cumulative_mass, q / p) * ts.integrate(g, lo, hi, 1e-14);
  }
  return std::pow(p * total, 1.0 / q);
}

Verdict check_lorentz_quadrature(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 40)));
    const double p = uniform(rng, 0.5, 4.0), q = uniform(rng, 0.5, 4.0);
    const double closed = lorentz_norm(f, LorentzExponents(p, q));
    const double quad = layer_cake_quadrature(f, p, q);
    worst = std::max(worst, std::fabs(closed - quad) / quad);
  }
  return judged(worst <= ctx.tol().lorentz_rel, worst, "200 fields, max relative deviation from quadrature");
}

Verdict check_lorentz_p_equals_q(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  const double ps[] = {0.5, 1.0, 1.5, 2.0, 3.0};
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 40)));
    const double p = ps[k % 5];
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += std::pow(std::fabs(f[i]), p) * f.measure().weight(i);
    const double plain = std::pow(sum, 1.0 / p);
    worst = std::max(worst, std::fabs(lorentz_norm(f, LorentzExponents(p, p)) - plain) / plain);
  }
  return judged(worst <= ctx.tol().exact_rel, worst, "200 fields, max relative deviation from the L^p sum");
}

Verdict check_power_identity(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 40)));
    const LorentzExponents e(uniform(rng, 0.5, 4.0), uniform(rng, 0.5, 4.0));
    const double r = uniform(rng, 0.25, 3.0);
    const double scale = std::max(1.0, lorentz_norm(f.pow_abs(r), e));
    worst = std::max(worst, power_identity_residual(f, e, r) / scale);
  }
  return judged(worst <= ctx.tol().exact_rel, worst, "200 fields, max residual over scale");
}

Verdict check_gamma_sandwich(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  const double rs[] = {0.5, 1.0};
  double worst_lower = 0.0, worst_upper = -kInfinity, max_ratio = 0.0;
  std::size_t cases = 0;
  for (int k = 0; k < 100; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 30)));
    for (auto [p, q] : ctx.spec.lattice) {
      const LorentzExponents e(p, q);
      const double norm = lorentz_norm(f, e);
      for (double r : rs) {
        if (!(r < p)) continue;
        const double gamma = gamma_norm(f, e, r);
        const double c = std::pow(p / (p - r), 1.0 / r);
        worst_lower = std::max(worst_lower, (norm - gamma) / norm);
        worst_upper = std::max(worst_upper, gamma - (c * norm + ctx.tol().gamma_slack));
        max_ratio = std::max(max_ratio, gamma / norm);
        ++cases;
      }
    }
  }
  ctx.calibration.emplace_back("gamma_over_norm_max", max_ratio);
  const bool ok = worst_lower <= ctx.tol().lorentz_rel && worst_upper <= 0.0;
  return judged(ok, max_ratio,
                std::to_string(cases) + " cases; worst lower excess " + num(worst_lower) + ", worst upper excess " +
                    num(worst_upper));
}

Verdict check_weak_bound(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 40)));
    const double p = uniform(rng, 0.5, 4.0), q = uniform(rng, 0.5, 4.0);
    const double weak = weak_lorentz_norm(f, p);
    const double bound = std::pow(q / p, 1.0 / q) * lorentz_norm(f, LorentzExponents(p, q));
    worst = std::max(worst, weak / bound);
  }
  return judged(worst <= 1.0 + ctx.tol().lorentz_rel, worst, "max weak norm over (q/p)^{1/q} ||f||_{p,q}");
}

Verdict check_quasi_triangle(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double kappa = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto space = random_space(rng, pick(rng, 1, 30));
    auto f = random_field(rng, space), g = random_field(rng, space);
    auto [p, q] = ctx.spec.lattice[k % ctx.spec.lattice.size()];
    const LorentzExponents e(p, q);
    kappa = std::max(kappa, lorentz_norm(f.plus(g), e) / (lorentz_norm(f, e) + lorentz_norm(g, e)));
  }
  ctx.calibration.emplace_back("kappa_quasi_triangle", kappa);
  return recorded(kappa, "max ||f+g|| / (||f|| + ||g||) over the lattice");
}

Verdict check_lorentz_embedding(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    auto f = random_field(rng, random_space(rng, pick(rng, 1, 30)));
    const double p = uniform(rng, 1.0, 4.0);
    const double q1 = uniform(rng, 0.5, 3.0), q2 = q1 + uniform(rng, 0.1, 3.0);
    worst = std::max(worst, lorentz_norm(f, LorentzExponents(p, q2)) / lorentz_norm(f, LorentzExponents(p, q1)));
  }
  ctx.calibration.emplace_back("lorentz_embedding_max", worst);
  return recorded(worst, "max ||f||_{p,q2} / ||f||_{p,q1}, q1 < q2");
}

// ---------------------------------------------------------------------------
// capacity

struct CorpusEntry {
  std::shared_ptr<const CapacityOracle> oracle;
  std::vector<SetMask> sets;
};

std::vector<CorpusEntry> capacity_corpus(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  const double ss[] = {1.5, 2.0, 3.0};
  std::vector<CorpusEntry> out;
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = pick(rng, 2, 64);
    auto model = random_finite_model(rng, m);
    CorpusEntry e{std::make_shared<CapacityOracle>(model, ctx.params(ss[k % 3])), {SetMask::full(m)}};
    for (int j = 0; j < 3; ++j) e.sets.push_back(random_subset(rng, m));
    out.push_back(std::move(e));
  }
  for (std::size_t k = 0; k < ctx.spec.model_files.size(); ++k) {
    auto file = load_finite_model(ctx.spec.model_files[k]);
    const std::size_t m = file.space->size();
    CorpusEntry e{std::make_shared<CapacityOracle>(CapacityModel::finite(file.space, file.kernel),
                                                   ctx.params(ss[k % 3])),
                  {SetMask::full(m)}};
    for (int j = 0; j < 3; ++j) e.sets.push_back(random_subset(rng, m));
    out.push_back(std::move(e));
  }
  return out;
}

Verdict check_capacity_analytic(Context& ctx) {
  double worst = 0.0;
  for (std::size_t m : {1u, 3u, 7u}) {
    auto space = MeasureSpace::uniform(m, 1.0);
    for (double s : {1.5, 2.0, 3.0}) {
      CapacityOracle id(CapacityModel::finite(space, MatrixKernel::identity(m)), ctx.params(s));
      CapacityOracle ones(CapacityModel::finite(space, MatrixKernel::ones(m)), ctx.params(s));
      for (std::uint64_t bits = 1; bits < (1ull << m); ++bits) {
        auto set = SetMask::from_bits(m, bits);
        worst = std::max(worst, std::fabs(id.value(set) - static_cast<double>(set.count())));
      }
      worst = std::max(worst, std::fabs(ones.value(SetMask::full(m)) - std::pow(double(m), 1.0 - s)));
    }
  }
  Eigen::MatrixXd k(2, 2);
  k << 1.0, 0.5, 0.5, 1.0;
  CapacityOracle two(CapacityModel::finite(MeasureSpace::uniform(2, 1.0), std::make_shared<MatrixKernel>(k)),
                     ctx.params(2.0));
  worst = std::max(worst, std::fabs(two.value(SetMask::full(2)) - 8.0 / 9.0));
  return judged(worst <= ctx.tol().gap, worst, "identity, all-ones and 2x2 instances, max absolute error");
}

Verdict check_capacity_certificates(Context& ctx) {
  double worst_gap = 0.0, worst_cert = 0.0;
  std::size_t solves = 0;
  for (const auto& e : capacity_corpus(ctx)) {
    const auto& model = e.oracle->model();
    const double s = e.oracle->params().s;
    for (const auto& set : e.sets) {
      const auto& r = e.oracle->solve(set);
      ++solves;
      worst_gap = std::max(worst_gap, r.gap);
      // Recompute the primal certificate from scratch.
      auto af = model.kernel->apply(r.primal);
      double feas = kInfinity, obj = 0.0;
      for (std::size_t i : set.indices()) feas = std::min(feas, af[i]);
      for (std::size_t i = 0; i < r.primal.size(); ++i) obj += model.space->weight(i) * std::pow(r.primal[i], s);
      const double implied = obj / std::pow(feas, s);
      worst_cert = std::max(worst_cert, (r.lower - implied) / implied);
      worst_cert = std::max(worst_cert, (r.lower - r.value) / r.value);
    }
  }
  const bool ok = worst_gap <= ctx.tol().gap && worst_cert <= 1e-12;
  return judged(ok, worst_gap,
                std::to_string(solves) + " solves; worst certificate inconsistency " + num(worst_cert));
}

Verdict check_equilibrium(Context& ctx) {
  const double band = ctx.tol().equilibrium_factor * ctx.cfg().cap_tol;
  double worst = 0.0, worst_band = 0.0;
  auto account = [&](const CapacityOracle& o, const SetMask& set) {
    const auto& r = o.solve(set);
    auto rep = equilibrium_checks(o.model(), r, o.params());
    worst = std::max(worst, rep.max_residual());
    worst_band = std::max(worst_band, 1.0 - rep.min_potential_on_set);
    worst_band = std::max(worst_band, rep.max_potential_on_support - 1.0);
  };
  for (const auto& e : capacity_corpus(ctx))
    for (const auto& set : e.sets) account(*e.oracle, set);
  auto grid = ctx.primary();
  for (const auto& [name, set] : continuum_sets(*grid->model().grid)) account(*grid, set);
  const bool ok = worst <= band && worst_band <= band;
  return judged(ok, worst, "max relative residual; worst potential band excess " + num(worst_band));
}

Verdict check_capacity_monotone(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::size_t violations = 0;
  double worst = -kInfinity;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 32);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(1.5 + 0.5 * (k % 4)));
    for (int j = 0; j < 10; ++j) {
      auto small = random_subset(rng, m);
      auto big = small.unite(random_subset(rng, m));
      const auto& a = o.solve(small);
      const auto& b = o.solve(big);
      worst = std::max(worst, (a.value - b.value) / b.value);
      if (a.lower > b.upper * (1.0 + 1e-12)) ++violations;
    }
  }
  return judged(violations == 0, worst,
                "100 nested pairs, " + std::to_string(violations) + " violations beyond the certificates");
}

Verdict check_capacity_subadditive(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::size_t violations = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 32);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(1.5 + 0.5 * (k % 4)));
    for (int j = 0; j < 10; ++j) {
      auto a = random_subset(rng, m), b = random_subset(rng, m);
      const auto& u = o.solve(a.unite(b));
      const auto& ra = o.solve(a);
      const auto& rb = o.solve(b);
      worst = std::max(worst, u.value / (ra.value + rb.value));
      if (u.lower > (ra.upper + rb.upper) * (1.0 + 1e-12)) ++violations;
    }
  }
  return judged(violations == 0, worst,
                "100 unions, " + std::to_string(violations) + " violations beyond the certificates");
}

Verdict check_null_sets(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::size_t bad = 0;
  double smallest = kInfinity;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 1, 16);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
    const auto& empty = o.solve(SetMask::empty(m));
    if (empty.status != SolveStatus::empty_set || empty.value != 0.0) ++bad;
    for (int j = 0; j < 5; ++j) {
      const double v = o.value(random_subset(rng, m));
      smallest = std::min(smallest, v);
      if (!(v > 0.0)) ++bad;
    }
  }
  return judged(bad == 0, smallest, "empty sets give 0, nonempty sets positive; smallest nonempty value");
}

// ---------------------------------------------------------------------------
// capacitary norms

Verdict check_embedding_constants(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::size_t violations = 0, cases = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 16);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(1.5 + 0.5 * (k % 4)));
    for (int j = 0; j < 10; ++j) {
      auto f = random_field(rng, o.space());
      auto weak = capacitary_lorentz_norm(f, LorentzExponents(1.0, kInfinity), o);
      auto l1 = l1c_norm(f.abs(), o);
      for (double q : {0.5, 0.75, 1.0}) {
        auto rhs = capacitary_lorentz_norm(f, LorentzExponents(1.0, q), o);
        const double c_weak = std::pow(q, 1.0 / q), c_l1 = std::pow(q, (1.0 - q) / q);
        worst = std::max({worst, weak.value / (c_weak * rhs.value), l1.value / (c_l1 * rhs.value)});
        if (weak.lower > c_weak * rhs.upper * (1.0 + 1e-12)) ++violations;
        if (l1.lower > c_l1 * rhs.upper * (1.0 + 1e-12)) ++violations;
        cases += 2;
      }
    }
  }
  return judged(violations == 0, worst,
                std::to_string(cases) + " inequalities, " + std::to_string(violations) + " violations");
}

struct GridConfig {
  int dim;
  double length;
  int points;
  double alpha;
};

// One grid per dimension; the configured one replaces the default of its dimension.
std::vector<GridConfig> refinement_grids(const Config& c) {
  std::vector<GridConfig> out{{1, 12.0, 64, 0.5}, {2, 10.0, 64, 1.0}};
  for (auto& g : out)
    if (g.dim == c.grid_dim) g = {c.grid_dim, c.grid_length, c.grid_points, c.cap_alpha};
  return out;
}

Verdict check_strichartz(Context& ctx) {
  std::size_t violations = 0;
  double worst_drift = 1.0, max_ratio = 0.0;
  std::string detail;
  for (const auto& gc : refinement_grids(ctx.cfg())) {
    const double s = gc.dim / gc.alpha;
    std::vector<double> ratios[2];
    for (int level = 0; level < 2; ++level) {
      auto o = ctx.bank.grid(gc.dim, gc.length, gc.points << level, gc.alpha, s, ctx.cfg().cap_tol);
      for (const auto& [name, set] : continuum_sets(*o->model().grid)) {
        auto rep = strichartz_check(set, *o);
        if (!rep.subadditive) ++violations;
        ratios[level].push_back(rep.ratio);
        max_ratio = std::max(max_ratio, rep.ratio);
      }
    }
    for (std::size_t j = 0; j < ratios[0].size(); ++j)
      worst_drift = std::max(worst_drift, drift_of(ratios[0][j], ratios[1][j]));
  }
  ctx.calibration.emplace_back("strichartz_ratio_max", max_ratio);
  const bool ok = violations == 0 && std::isfinite(max_ratio) && worst_drift <= ctx.tol().drift;
  return judged(ok, max_ratio,
                std::to_string(violations) + " subadditivity violations; refinement drift " + num(worst_drift));
}

Verdict check_sobolev(Context& ctx) {
  double worst_drift = 1.0, max_ratio = 0.0;
  bool finite = true;
  std::size_t cases = 0;
  for (const auto& gc : refinement_grids(ctx.cfg())) {
    const double n = gc.dim;
    for (double s : {n / gc.alpha, 0.75 * n / gc.alpha}) {
      const double lo = gc.alpha * s < n - 1e-12 ? (n - gc.alpha * s) / n : 0.5;
      const std::vector<double> eps{lo, 0.5 * (lo + 1.0), 1.0};
      std::vector<double> ratios[2];
      for (int level = 0; level < 2; ++level) {
        auto o = ctx.bank.grid(gc.dim, gc.length, gc.points << level, gc.alpha, s, ctx.cfg().cap_tol);
        for (const auto& [name, set] : continuum_sets(*o->model().grid))
          for (double e : eps) {
            auto rep = lebesgue_lower_bound_check(set, e, *o);
            finite = finite && std::isfinite(rep.ratio) && rep.ratio > 0.0;
            ratios[level].push_back(rep.ratio);
            max_ratio = std::max(max_ratio, rep.ratio);
          }
      }
      for (std::size_t j = 0; j < ratios[0].size(); ++j) {
        worst_drift = std::max(worst_drift, drift_of(ratios[0][j], ratios[1][j]));
        ++cases;
      }
    }
  }
  ctx.calibration.emplace_back("sobolev_ratio_max", max_ratio);
  return judged(finite && worst_drift <= ctx.tol().drift, max_ratio,
                std::to_string(cases) + " (config, set, eps) cases; refinement drift " + num(worst_drift));
}

// ---------------------------------------------------------------------------
// multiplier norms

Verdict check_norm_switching(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  bool ok = true;
  for (int k = 0; k < 20; ++k) {
    const std::size_t m = pick(rng, 2, 9);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
    auto f = random_field(rng, o.space());
    auto [p, q] = ctx.spec.lattice[k % ctx.spec.lattice.size()];
    const LorentzExponents e(p, q);
    auto all = m_norm(f, e, TestSetFamily::all_subsets(), o);
    // Subsets of the support only.
    std::vector<SetMask> inside;
    for (const auto& s : all_nonempty_subsets(m))
      if (s.subset_of(f.support())) inside.push_back(s);
    auto sub = m_norm_over(f, e, inside, true, o);
    const double rel = (all.value - sub.value) / sub.value;
    worst = std::max(worst, std::fabs(rel));
    if (rel < -ctx.tol().exact_rel || rel > 2.0 * all.max_gap + ctx.tol().exact_rel) ok = false;
  }
  return judged(ok, worst, "sup over all sets vs sets inside the support, max relative difference");
}

Verdict check_weak_forms(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t m = pick(rng, 2, 8);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
    auto f = random_field(rng, o.space());
    const double p = ctx.spec.lattice[k % ctx.spec.lattice.size()].first;
    worst = std::max(worst, weak_script_m_norm(f, p, TestSetFamily::all_subsets(), o).discrepancy);
  }
  return judged(worst <= ctx.tol().lorentz_rel, worst, "set form vs level form, max relative discrepancy");
}

Verdict check_identity_multipliers(Context& ctx) {
  const std::size_t m = 5;
  auto space = MeasureSpace::uniform(m, 1.0);
  CapacityOracle o(CapacityModel::finite(space, MatrixKernel::identity(m)), ctx.params(2.0));
  auto all = TestSetFamily::all_subsets();
  double worst = 0.0;
  for (auto [p, q] : ctx.spec.lattice) {
    const LorentzExponents e(p, q);
    const double unit = std::pow(p / q, 1.0 / q);
    for (std::uint64_t bits = 1; bits < (1ull << m); ++bits) {
      auto a = SetMask::from_bits(m, bits);
      auto f = Field::indicator(space, a);
      double expect = 0.0;
      for (std::size_t j = 1; j <= a.count(); ++j) expect = std::max(expect, unit * std::pow(double(j), 1 / p - 1 / q));
      worst = std::max(worst, std::fabs(m_norm(f, e, all, o).value - expect) / expect);
      worst = std::max(worst, std::fabs(script_m_norm(f, e, all, o).value - unit) / unit);
    }
  }
  return judged(worst <= ctx.tol().lorentz_rel, worst, "indicators on the counting model, max relative error");
}

Verdict check_diameter_localization(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  auto o = ctx.primary();
  const auto& g = *o->model().grid;
  auto family = TestSetFamily::parse("levels+dyadic:3+random:12:" + std::to_string(ctx.seed % 100000));
  double max_ratio = 0.0;
  bool ordered = true;
  for (int k = 0; k < 6; ++k) {
    auto f = random_bump_field(rng, g);
    auto [p, q] = ctx.spec.lattice[k % ctx.spec.lattice.size()];
    auto rep = m_norm_local(f, LorentzExponents(p, q), family, *o);
    ordered = ordered && rep.local.value <= rep.global.value * (1.0 + 1e-12);
    max_ratio = std::max(max_ratio, rep.ratio);
  }
  ctx.calibration.emplace_back("local_multiplier_ratio_max", max_ratio);
  if (!ordered) return judged(false, max_ratio, "capped family exceeded the full family");
  return recorded(max_ratio, "max global / diameter-capped multiplier estimate");
}

Verdict check_weight_characterization(Context& ctx) {
  std::vector<std::pair<double, double>> pairs;
  for (auto pq : ctx.spec.lattice)
    if (pq.second <= pq.first) pairs.push_back(pq);
  if (pairs.empty()) return recorded(0.0, "no lattice pair with q <= p");
  std::size_t violations = 0, checked = 0;
  double runs[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng(ctx.seed + run);
    for (int k = 0; k < 6; ++k) {
      const std::size_t m = pick(rng, 2, 7);
      CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
      auto f = random_field(rng, o.space());
      auto [p, q] = pairs[k % pairs.size()];
      auto rep = char_m_via_weights(f, LorentzExponents(p, q), TestSetFamily::all_subsets(), ctx.weight_cfg(), o);
      violations += rep.per_set_violations;
      checked += rep.per_set_checked;
      runs[run][0] = std::max(runs[run][0], rep.ratio_weights_over_sets);
      runs[run][1] = std::max(runs[run][1], rep.ratio_sets_over_weights);
    }
  }
  const double drift = std::max(drift_of(runs[0][0], runs[1][0]), drift_of(runs[0][1], runs[1][1]));
  ctx.calibration.emplace_back("weights_over_sets_max", std::max(runs[0][0], runs[1][0]));
  ctx.calibration.emplace_back("sets_over_weights_max", std::max(runs[0][1], runs[1][1]));
  return judged(violations == 0 && drift <= ctx.tol().drift, std::max(runs[0][0], runs[1][0]),
                std::to_string(checked) + " per-set checks, " + std::to_string(violations) +
                    " violations; sets/weights max " + num(std::max(runs[0][1], runs[1][1])) + "; seed drift " +
                    num(drift));
}

// ---------------------------------------------------------------------------
// blocks and duality

struct BlockSample {
  Field g;
  double lambda_sum;
  double gap;
};

// g = sum of one to three blocks on random sets.
BlockSample random_block_sum(std::mt19937_64& rng, const CapacityOracle& o, const LorentzExponents& e,
                             BlockType type) {
  const std::size_t m = o.space()->size();
  std::vector<double> g(m, 0.0);
  double lambda_sum = 0.0, gap = 0.0;
  const int terms = static_cast<int>(pick(rng, 1, 3));
  for (int t = 0; t < terms; ++t) {
    auto set = random_subset(rng, m);
    auto piece = random_field(rng, o.space(), true).restricted(set);
    if (piece.is_zero()) continue;
    auto blk = tight_block(piece, set, e, type, o);
    const double lambda = uniform(rng, 0.2, 2.0);
    for (std::size_t i = 0; i < m; ++i) g[i] += lambda * blk.b[i];
    lambda_sum += lambda;
    gap = std::max(gap, o.solve(set).gap);
  }
  return {Field(o.space(), std::move(g)), lambda_sum, gap};
}

Verdict check_pairing_tight(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  const LorentzExponents e(2.0, 2.0);
  std::size_t passed = 0, total = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 8);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
    for (int j = 0; j < 10; ++j) {
      auto f = random_field(rng, o.space());
      auto sample = random_block_sum(rng, o, e, BlockType::b);
      auto mest = m_norm(f, e, TestSetFamily::all_subsets(), o);
      PairingReport rep = pairing_inequality_suite({{f, sample.g, sample.lambda_sum, mest.value}});
      const double gap = std::max(sample.gap, mest.max_gap);
      ++total;
      if (rep.max_ratio <= 1.0 + ctx.tol().pairing_gap_factor * gap + 1e-12) ++passed;
      worst = std::max(worst, rep.max_ratio);
    }
  }
  return judged(passed == total, worst, std::to_string(passed) + "/" + std::to_string(total) + " within the bound");
}

Verdict check_pairing_lattice(Context& ctx) {
  std::vector<std::string> unstable;
  double overall = 0.0;
  std::size_t series = 0;
  for (auto [p, q] : ctx.spec.lattice) {
    if (p == 2.0 && q == 2.0) continue;
    const LorentzExponents e(p, q);
    const LorentzExponents dual(conjugate_exponent(p), conjugate_exponent(q));
    double maxima[3][2] = {};
    for (int run = 0; run < 2; ++run) {
      std::mt19937_64 rng(ctx.seed + 7919 * run);
      for (int k = 0; k < 3; ++k) {
        const std::size_t m = pick(rng, 2, 7);
        CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
        auto all = TestSetFamily::all_subsets();
        std::vector<Weight> candidates;
        candidates.push_back(make_weight(Field::constant(o.space(), 1.0), WeightKind::user, &o, ctx.weight_cfg(),
                                         "uniform"));
        for (int c = 0; c < 4; ++c) candidates.push_back(potential_weight(random_subset(rng, m), ctx.weight_cfg(), o));
        for (int j = 0; j < 8; ++j) {
          auto f = random_field(rng, o.space());
          const double mest = m_norm(f, e, all, o).value;
          // B^{p',q'} blocks against M^{p,q}.
          auto b = random_block_sum(rng, o, dual, BlockType::b);
          maxima[0][run] = std::max(maxima[0][run],
                                    pairing_inequality_suite({{f, b.g, b.lambda_sum, mest}}).max_ratio);
          // script-B^{p',1} blocks against the weak script-M^{p} estimate.
          auto sb = random_block_sum(rng, o, LorentzExponents(dual.p(), 1.0), BlockType::script_b);
          const double weak = weak_script_m_norm(f, p, all, o).set_form.value;
          maxima[1][run] = std::max(maxima[1][run],
                                    pairing_inequality_suite({{f, sb.g, sb.lambda_sum, weak}}).max_ratio);
          // N^{p',q'} upper bounds, inside the q <= p window.
          if (q <= p) {
            auto g = random_field(rng, o.space());
            const double nup = n_norm_upper(g, dual, candidates, 1.0, ctx.weight_cfg(), o).value;
            maxima[2][run] = std::max(maxima[2][run], pairing_inequality_suite({{f, g, nup, mest}}).max_ratio);
          }
        }
      }
    }
    const char* names[] = {"B", "script-B", "N"};
    for (int t = 0; t < 3; ++t) {
      if (maxima[t][0] == 0.0 && maxima[t][1] == 0.0) continue;
      ++series;
      overall = std::max({overall, maxima[t][0], maxima[t][1]});
      ctx.calibration.emplace_back("pairing_" + std::string(names[t]) + "_p" + num(p) + "_q" + num(q),
                                   std::max(maxima[t][0], maxima[t][1]));
      if (!std::isfinite(maxima[t][0]) || drift_of(maxima[t][0], maxima[t][1]) > ctx.tol().drift)
        unstable.push_back(std::string(names[t]) + "(" + num(p) + "," + num(q) + ")");
    }
  }
  std::string detail = std::to_string(series) + " pairing series";
  for (const auto& u : unstable) detail += "; unstable " + u;
  return judged(unstable.empty(), overall, detail);
}

std::vector<Weight> grid_weight_corpus(Context& ctx, const CapacityOracle& o) {
  const auto& g = *o.model().grid;
  std::vector<Weight> out;
  const double centers[] = {0.0, -1.5, 1.0, 2.0};
  const double radii[] = {0.5, 0.3, 1.0, 0.2};
  for (int k = 0; k < 4; ++k) {
    auto set = ball(g, centers[k], std::max(radii[k], g.spacing()));
    for (double delta : {ctx.cfg().weights_delta, 1.0}) {
      WeightConfig wc = ctx.weight_cfg();
      wc.delta = delta;
      out.push_back(potential_weight(set, wc, o));
    }
  }
  std::vector<Weight> averages;
  for (std::size_t k = 0; k + 2 < out.size(); k += 2)
    averages.push_back(average_weights({{1.0, &out[k]}, {3.0, &out[k + 2]}}, &o, ctx.weight_cfg()));
  for (auto& w : averages) out.push_back(std::move(w));
  return out;
}

Verdict check_constructive_blocks(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  auto o = ctx.primary();
  const auto& g = *o->model().grid;
  auto weights = grid_weight_corpus(ctx, *o);
  double worst_norm = 0.0, worst_res = 0.0, max_ratio = 0.0;
  std::size_t terms = 0;
  for (std::size_t wi = 0; wi < weights.size(); wi += 2) {
    for (int k = 0; k < 3; ++k) {
      auto f = random_bump_field(rng, g);
      for (auto [p, q] : ctx.spec.lattice) {
        const LorentzExponents e(p, q);
        auto d = block_norm_upper_constructive(f, e, weights[wi], *o);
        for (const auto& t : d.terms) {
          worst_norm = std::max(worst_norm, std::fabs(t.block.normalization - 1.0));
          ++terms;
        }
        worst_res = std::max(worst_res, d.residual / f.sup_abs());
        if (p < q) {
          std::vector<double> v(f.size());
          for (std::size_t i = 0; i < v.size(); ++i) v[i] = f[i] * std::pow(weights[wi].omega[i], -1.0 / e.q_conj());
          max_ratio = std::max(max_ratio, d.lambda_sum / lorentz_norm(Field(f.space(), std::move(v)), e));
        }
      }
    }
  }
  ctx.calibration.emplace_back("constructive_ratio_max", max_ratio);
  const bool ok = worst_norm <= ctx.tol().block && worst_res <= ctx.tol().residual && std::isfinite(max_ratio);
  return judged(ok, max_ratio,
                std::to_string(terms) + " blocks; worst normalization error " + num(worst_norm) +
                    "; worst relative residual " + num(worst_res));
}

Verdict check_solidity(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  bool ok = true;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const std::size_t m = pick(rng, 2, 8);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(2.0));
    auto f = random_field(rng, o.space());
    std::vector<double> gv(m);
    for (std::size_t i = 0; i < m; ++i) gv[i] = f[i] * uniform(rng, -1.0, 1.0);
    Field g(o.space(), std::move(gv));
    auto [p, q] = ctx.spec.lattice[k % ctx.spec.lattice.size()];
    auto d = block_norm_upper_greedy(f, LorentzExponents(p, q), TestSetFamily::parse("levels+random:8"), o);
    auto t = transport(d, f, g, o);
    worst = std::max(worst, t.residual / std::max(g.sup_abs(), 1e-300));
    ok = ok && t.lambda_sum <= d.lambda_sum && t.residual <= ctx.tol().residual * std::max(f.sup_abs(), 1e-300);
  }
  return judged(ok, worst, "transported decompositions keep lambda and reconstruct g");
}

Verdict check_level_sum(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  auto o = ctx.primary();
  double worst = 0.0, worst_excess = -kInfinity;
  std::size_t count = 0;
  auto account = [&](const Field& w, const CapacityOracle& oracle) {
    auto rep = level_sum_check(w, oracle);
    worst = std::max(worst, rep.ratio);
    worst_excess = std::max(worst_excess, rep.ratio - ctx.tol().level_sum * (1.0 + 2.0 * rep.max_gap) - 1e-12);
    ++count;
  };
  for (const auto& w : grid_weight_corpus(ctx, *o)) account(w.omega, *o);
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 12);
    CapacityOracle fo(random_finite_model(rng, m), ctx.params(2.0));
    account(random_field(rng, fo.space(), true).plus(Field::constant(fo.space(), 1e-3)), fo);
  }
  ctx.calibration.emplace_back("level_sum_ratio_max", worst);
  return judged(worst_excess <= 0.0, worst, std::to_string(count) + " weights, max level-sum ratio");
}

Verdict check_weight_averaging(Context& ctx) {
  auto o = ctx.primary();
  const auto& g = *o->model().grid;
  auto weights = grid_weight_corpus(ctx, *o);
  double c_hat = 0.0, worst = 0.0, lowest = kInfinity;
  for (const auto& w : weights) {
    if (w.kind == WeightKind::potential) c_hat = std::max(c_hat, *w.a1);
    lowest = std::min(lowest, *w.a1);
  }
  for (std::size_t a = 0; a < weights.size(); ++a)
    for (std::size_t b = a + 1; b < weights.size(); ++b) {
      std::vector<double> mix(weights[a].omega.size());
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = (weights[a].omega[i] + 2.0 * weights[b].omega[i]) / 3.0;
      const double a1 = a1loc_constant(g, Field(g.space(), std::move(mix)));
      worst = std::max(worst, a1 / std::max(*weights[a].a1, *weights[b].a1));
    }
  ctx.calibration.emplace_back("c_hat", c_hat);
  const bool ok = worst <= 1.0 + 1e-12 && lowest >= 1.0 - 1e-12;
  return judged(ok, worst, "max A1loc of a mix over the larger constant; smallest constant " + num(lowest));
}

// ---------------------------------------------------------------------------
// maximal operator

Verdict check_maximal_constants(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst_const = 0.0, worst_sup = 0.0;
  for (int dim : {1, 2}) {
    auto g = make_grid(dim, dim == 1 ? 12.0 : 10.0, 64);
    for (double c : {1.0, 2.5, 1e-3}) {
      auto mf = local_maximal(*g, Field::constant(g->space(), c));
      for (std::size_t i = 0; i < mf.size(); ++i) worst_const = std::max(worst_const, std::fabs(mf[i] - c) / c);
    }
    for (int k = 0; k < 5; ++k) {
      auto f = random_field(rng, g->space());
      worst_sup = std::max(worst_sup, local_maximal(*g, f).sup_abs() / f.sup_abs());
    }
  }
  const bool ok = worst_const <= 1e-14 && worst_sup <= 1.0 + 1e-14;
  return judged(ok, worst_sup, "constants fixed to " + num(worst_const) + "; max sup ratio");
}

Verdict check_maximal_probe(Context& ctx) {
  auto o = ctx.primary();
  const auto& g = *o->model().grid;
  const LorentzExponents e(2.0, 2.0);
  auto candidates = grid_weight_corpus(ctx, *o);
  double c_hat = 0.0;
  for (const auto& w : candidates) c_hat = std::max(c_hat, *w.a1);
  auto family = TestSetFamily::parse("levels+dyadic:2");
  double m_max[2] = {}, n_max[2] = {};
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng(ctx.seed + run);
    std::vector<Field> corpus;
    for (int k = 0; k < 4; ++k) corpus.push_back(random_bump_field(rng, g));
    auto rep = maximal_boundedness_probe(e, corpus, family, candidates, c_hat, ctx.weight_cfg(), *o);
    m_max[run] = rep.max_m_ratio;
    n_max[run] = rep.max_n_ratio;
  }
  const double drift = std::max(drift_of(m_max[0], m_max[1]), drift_of(n_max[0], n_max[1]));
  const bool finite = std::isfinite(m_max[0] + m_max[1] + n_max[0] + n_max[1]);
  ctx.calibration.emplace_back("maximal_m_ratio_max", std::max(m_max[0], m_max[1]));
  ctx.calibration.emplace_back("maximal_n_ratio_max", std::max(n_max[0], n_max[1]));
  return judged(finite && drift <= ctx.tol().drift, std::max(m_max[0], m_max[1]),
                "N ratio max " + num(std::max(n_max[0], n_max[1])) + "; seed drift " + num(drift));
}

// ---------------------------------------------------------------------------
// trace class and Kothe duals

Verdict check_trace_equality(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  std::size_t passed = 0, total = 0;
  double worst = 0.0;
  for (int k = 0; k < 10; ++k) {
    const std::size_t m = pick(rng, 2, 12);
    CapacityOracle o(random_finite_model(rng, m), ctx.params(1.5 + 0.5 * (k % 4)));
    for (int j = 0; j < 10; ++j) {
      auto masses = random_field(rng, o.space());
      AtomicMeasure mu{std::vector<double>(masses.values().begin(), masses.values().end())};
      auto sup = trace_norm(mu, TestSetFamily::all_subsets(), o);
      const double inf = trace_norm_inf_form(mu, o);
      const double diff = std::fabs(sup.value - inf);
      worst = std::max(worst, diff);
      ++total;
      if (diff <= ctx.tol().trace_abs + sup.value * sup.max_gap) ++passed;
    }
  }
  return judged(passed == total, worst,
                std::to_string(passed) + "/" + std::to_string(total) + " equal; max absolute difference");
}

Verdict check_kothe_holder(Context& ctx) {
  std::mt19937_64 rng(ctx.seed);
  double worst = 0.0;
  std::size_t count = 0;
  for (std::size_t m = 1; m <= kKotheMaxAtoms; ++m)
    for (double p : {1.5, 2.0, 3.0}) {
      auto f = random_field(rng, random_space(rng, m));
      const double pc = conjugate_exponent(p);
      auto est = kothe_dual_norm_bruteforce(f, {KotheSpace::lorentz, LorentzExponents(pc, pc)}, nullptr, rng());
      const double expect = lorentz_norm(f, LorentzExponents(p, p));
      worst = std::max(worst, std::fabs(est.value - expect) / expect);
      ++count;
    }
  return judged(worst <= ctx.tol().kothe_rel, worst, std::to_string(count) + " instances, max relative error");
}

Verdict check_kothe_two_sided(Context& ctx) {
  double lo[2] = {kInfinity, kInfinity}, hi[2] = {0.0, 0.0};
  std::size_t count = 0;
  for (int run = 0; run < 2; ++run) {
    std::mt19937_64 rng(ctx.seed + run);
    for (auto [p, q] : ctx.spec.lattice) {
      if (p == q) continue;
      for (int k = 0; k < 4; ++k) {
        auto f = random_field(rng, random_space(rng, pick(rng, 2, kKotheMaxAtoms)));
        const LorentzExponents dual(conjugate_exponent(p), conjugate_exponent(q));
        auto est = kothe_dual_norm_bruteforce(f, {KotheSpace::lorentz, dual}, nullptr, rng());
        const double r = est.value / lorentz_norm(f, LorentzExponents(p, q));
        lo[run] = std::min(lo[run], r);
        hi[run] = std::max(hi[run], r);
        ++count;
      }
    }
  }
  if (count == 0) return recorded(1.0, "lattice has no p != q pair");
  const double drift = std::max(drift_of(lo[0], lo[1]), drift_of(hi[0], hi[1]));
  ctx.calibration.emplace_back("kothe_ratio_min", std::min(lo[0], lo[1]));
  ctx.calibration.emplace_back("kothe_ratio_max", std::max(hi[0], hi[1]));
  return judged(drift <= ctx.tol().drift, std::max(hi[0], hi[1]),
                std::to_string(count) + " instances; ratio range [" + num(std::min(lo[0], lo[1])) + ", " +
                    num(std::max(hi[0], hi[1])) + "]; seed drift " + num(drift));
}

// ---------------------------------------------------------------------------
// registry

struct Registered {
  CheckInfo info;
  std::function<Verdict(Context&)> run;
};

std::vector<Registered> registry() {
  using V = std::vector<std::string>;
  std::vector<Registered> r{
      {{"blocks.constructive", V{"blocks"}, V{"constructive-blocks", "block-spaces"}}, check_constructive_blocks},
      {{"blocks.pairing-lattice", V{"blocks"}, V{"pairing-direction", "n-space", "multiplier-weak"}},
       check_pairing_lattice},
      {{"blocks.pairing-tight", V{"blocks"}, V{"pairing-estimate", "block-spaces"}}, check_pairing_tight},
      {{"blocks.solidity", V{"blocks"}, V{"block-spaces"}}, check_solidity},
      {{"capacitary.embedding-constants", V{"capacitary"},
        V{"embedding-constants", "capacitary-lorentz", "capacitary-l1"}},
       check_embedding_constants},
      {{"capacitary.sobolev", V{"capacitary"}, V{"sobolev-lower-bounds"}}, check_sobolev},
      {{"capacitary.strichartz", V{"capacitary"}, V{"strichartz-localization"}}, check_strichartz},
      {{"capacity.analytic", V{"capacity"}, V{"capacity-definition"}}, check_capacity_analytic},
      {{"capacity.certificates", V{"capacity"}, V{"capacity-definition"}}, check_capacity_certificates},
      {{"capacity.equilibrium", V{"capacity"}, V{"equilibrium-potential"}}, check_equilibrium},
      {{"capacity.monotone", V{"capacity"}, V{"capacity-definition"}}, check_capacity_monotone},
      {{"capacity.null-sets", V{"capacity"}, V{"capacity-definition"}}, check_null_sets},
      {{"capacity.subadditive", V{"capacity"}, V{"capacity-definition"}}, check_capacity_subadditive},
      {{"kothe.holder", V{"kothe"}, V{"lorentz-space", "pairing-direction"}}, check_kothe_holder},
      {{"kothe.two-sided", V{"kothe"}, V{"lorentz-space", "pairing-direction"}}, check_kothe_two_sided},
      {{"lorentz.closed-form", V{"lorentz-core"}, V{"lorentz-space"}}, check_lorentz_quadrature},
      {{"lorentz.embedding", V{"lorentz-core"}, V{"lorentz-space"}}, check_lorentz_embedding},
      {{"lorentz.gamma-sandwich", V{"lorentz-core"}, V{"gamma-sandwich"}}, check_gamma_sandwich},
      {{"lorentz.p-equals-q", V{"lorentz-core"}, V{"lorentz-space"}}, check_lorentz_p_equals_q},
      {{"lorentz.power-identity", V{"lorentz-core"}, V{"power-identity"}}, check_power_identity},
      {{"lorentz.quasi-triangle", V{"lorentz-core"}, V{"lorentz-space"}}, check_quasi_triangle},
      {{"lorentz.weak-bound", V{"lorentz-core"}, V{"lorentz-space"}}, check_weak_bound},
      {{"maximal.constants", V{"maximal"}, V{"local-maximal"}}, check_maximal_constants},
      {{"maximal.probe", V{"maximal"}, V{"maximal-boundedness", "n-space", "local-maximal"}}, check_maximal_probe},
      {{"multiplier.identity-model", V{"multiplier"}, V{"multiplier-M", "multiplier-script-M"}},
       check_identity_multipliers},
      {{"multiplier.local", V{"multiplier"}, V{"diameter-localization"}}, check_diameter_localization},
      {{"multiplier.norm-switching", V{"multiplier"}, V{"norm-switching", "multiplier-M"}}, check_norm_switching},
      {{"multiplier.weak-forms", V{"multiplier"}, V{"multiplier-weak"}}, check_weak_forms},
      {{"multiplier.weight-characterization", V{"multiplier"}, V{"weight-characterization"}},
       check_weight_characterization},
      {{"trace.equality", V{"trace"}, V{"trace-class", "trace-formula"}}, check_trace_equality},
      {{"weights.averaging", V{"weights"}, V{"weight-averaging", "a1loc-weights"}}, check_weight_averaging},
      {{"weights.level-sum", V{"weights"}, V{"level-sum-bound", "capacitary-l1"}}, check_level_sum},
  };
  std::sort(r.begin(), r.end(), [](const Registered& a, const Registered& b) { return a.info.id < b.info.id; });
  return r;
}

std::string join(const std::vector<std::string>& v, const char* sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

}  // namespace

std::vector<CheckInfo> registered_checks() {
  std::vector<CheckInfo> out;
  for (auto& r : registry()) out.push_back(r.info);
  return out;
}

std::vector<std::string> uncovered_anchors(const std::vector<CheckInfo>& checks) {
  std::set<std::string> seen;
  for (const auto& c : checks) seen.insert(c.anchors.begin(), c.anchors.end());
  std::vector<std::string> missing;
  for (const auto& a : in_scope_anchors())
    if (!seen.count(a)) missing.push_back(a);
  return missing;
}

SuiteReport run_suite(const SuiteSpec& spec) {
  spec.validate();
  for (const auto& path : spec.model_files)
    if (!std::ifstream(path)) throw FormatError("missing model file " + path);

  std::vector<Registered> selected;
  for (auto& r : registry()) {
    const auto& s = r.info.suites;
    if (spec.name == "all" || std::find(s.begin(), s.end(), spec.name) != s.end()) selected.push_back(std::move(r));
  }

  OracleBank bank;
  std::vector<Verdict> verdicts(selected.size());
  std::vector<std::vector<std::pair<std::string, double>>> calib(selected.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next++) < selected.size();) {
      const auto& info = selected[k].info;
      Context ctx{spec, check_seed(spec.config.seed, info.id), bank, {}};
      Verdict v;
      try {
        v = selected[k].run(ctx);
      } catch (const std::exception& ex) {
        v = judged(false, kInfinity, std::string("error: ") + ex.what());
      }
      v.id = info.id;
      v.anchor = join(info.anchors, ";");
      verdicts[k] = std::move(v);
      calib[k] = std::move(ctx.calibration);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(), selected.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  SuiteReport rep;
  rep.suite = spec.name;
  rep.seed = spec.config.seed;
  rep.verdicts = std::move(verdicts);

  // Coverage self-audit over the whole registry.
  auto missing = uncovered_anchors(registered_checks());
  Verdict audit = judged(missing.empty(), static_cast<double>(missing.size()),
                         missing.empty() ? "every in-scope anchor is covered" : "uncovered: " + join(missing, ";"));
  audit.id = "audit.coverage";
  audit.anchor = "registry";
  rep.verdicts.insert(rep.verdicts.begin(), std::move(audit));

  std::map<std::string, double> merged;
  for (auto& c : calib)
    for (auto& [k, v] : c) merged[k] = v;
  rep.calibration.assign(merged.begin(), merged.end());
  return rep;
}

ReportFormat parse_report_format(const std::string& name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw InvalidArgument("report format must be json or csv, got " + name);
}

ReportFormat format_for_path(const std::string& path) {
  const auto dot = path.rfind('.');
  return dot != std::string::npos && path.substr(dot) == ".csv" ? ReportFormat::csv : ReportFormat::json;
}

namespace {

std::string fixed(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

}  // namespace

std::string render_report(const SuiteReport& report, ReportFormat format) {
  if (format == ReportFormat::csv) {
    std::ostringstream out;
    out << "id,status,measured,anchor,seed,detail\n";
    for (const auto& v : report.verdicts)
      out << v.id << ',' << to_string(v.status) << ',' << fixed(v.measured) << ',' << csv_quote(v.anchor) << ','
          << check_seed(report.seed, v.id) << ',' << csv_quote(v.detail) << '\n';
    return out.str();
  }
  using nlohmann::ordered_json;
  ordered_json j;
  j["suite"] = report.suite;
  j["seeds"] = {{"master", report.seed}};
  ordered_json cal = ordered_json::object();
  for (const auto& [k, v] : report.calibration) cal[k] = fixed(v);
  j["calibration"] = cal;
  ordered_json list = ordered_json::array();
  for (const auto& v : report.verdicts)
    list.push_back({{"id", v.id},
                    {"status", to_string(v.status)},
                    {"measured", fixed(v.measured)},
                    {"anchor", v.anchor},
                    {"seed", check_seed(report.seed, v.id)},
                    {"detail", v.detail}});
  j["verdicts"] = list;
  j["failed"] = report.failed();
  return j.dump(2) + "\n";
}

void emit_report(const SuiteReport& report, ReportFormat format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write report to " + path);
  out << render_report(report, format);
  if (!out) throw FormatError("failed writing report to " + path);
}

}  // namespace capflow
