// One line per acceptance criterion. Suite verdicts carry most of the weight;
// where a test-only oracle exists it is run here as an independent cross-check.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "capflow/blocks.hpp"
#include "capflow/capacity.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/suites.hpp"
#include "capflow/weights.hpp"
#include "oracles.hpp"

using namespace capflow;

namespace {

struct Line {
  bool ok = true;
  std::string note;

  void need(bool cond, const std::string& what) {
    if (!cond) ok = false;
    if (!note.empty()) note += "; ";
    note += what + (cond ? "" : " [FAILED]");
  }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Verdicts {
 public:
  explicit Verdicts(const SuiteReport& r) {
    for (const auto& v : r.verdicts) by_id_[v.id] = v;
  }

  void require(Line& line, const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) {
      line.need(false, id + " missing");
      return;
    }
    const auto& v = it->second;
    line.need(v.status != VerdictStatus::fail, id + " " + to_string(v.status) + " " + fmt("%.3g", v.measured));
  }

 private:
  std::map<std::string, Verdict> by_id_;
};

std::vector<double> random_values(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<double> v(m);
  for (auto& x : v) x = u(rng);
  if (m > 2) v[1] = v[0];
  return v;
}

std::vector<double> random_weights(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.1, 2);
  std::vector<double> w(m);
  for (auto& x : w) x = u(rng);
  return w;
}

Line capacity_certificates(const Verdicts& v) {
  Line line;
  v.require(line, "capacity.certificates");
  v.require(line, "capacity.analytic");

  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0, 1);
  std::uniform_int_distribution<std::size_t> size(2, 64);
  double worst_gap = 0.0, worst_cert = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t m = size(rng);
    Eigen::MatrixXd K(m, m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j) K(i, j) = i == j ? 1.0 : (u(rng) < 0.3 ? 0.5 * u(rng) : 0.0);
    auto w = random_weights(rng, m);
    CapacityParams p;
    p.s = std::vector<double>{1.5, 2.0, 3.0}[k % 3];
    auto model = CapacityModel::finite(MeasureSpace::make(w), std::make_shared<const MatrixKernel>(K));
    std::vector<std::uint8_t> bits(m);
    for (auto& b : bits) b = u(rng) < 0.5;
    bits[0] = 1;
    SetMask E(bits);
    auto r = capacity(model, E, p);
    worst_gap = std::max(worst_gap, r.ok() ? r.gap : INFINITY);
    // Primal side recomputed here: scale f so that min_E Kf = 1.
    Eigen::VectorXd f = Eigen::Map<const Eigen::VectorXd>(r.primal.data(), static_cast<Eigen::Index>(m));
    Eigen::VectorXd Kf = K * f;
    double feas = INFINITY, obj = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      if (E.contains(i)) feas = std::min(feas, Kf(static_cast<Eigen::Index>(i)));
      obj += w[i] * std::pow(f(static_cast<Eigen::Index>(i)), p.s);
    }
    worst_cert = std::max(worst_cert, std::fabs(obj / std::pow(feas, p.s) - r.value) / r.value);
  }
  line.need(worst_gap <= 1e-6, "50 random models, worst gap " + fmt("%.2e", worst_gap));
  line.need(worst_cert <= 1e-6, "recomputed primal " + fmt("%.2e", worst_cert));

  Eigen::MatrixXd K(2, 2);
  K << 1, 0.5, 0.5, 1;
  CapacityParams p;
  auto r = capacity(CapacityModel::finite(MeasureSpace::uniform(2, 1.0), std::make_shared<const MatrixKernel>(K)),
                    SetMask::full(2), p);
  const double Ka[2][2] = {{1, 0.5}, {0.5, 1}}, wa[2] = {1, 1};
  auto brute = oracle::capacity_2x2(Ka, wa, 2.0);
  line.need(std::fabs(r.value - 8.0 / 9.0) <= 1e-6 && std::fabs(brute.value - r.value) <= 1e-6,
            "2x2 " + fmt("%.9f", r.value) + " vs grid search " + fmt("%.9f", brute.value));
  return line;
}

Line lorentz_engine(const Verdicts& v) {
  Line line;
  v.require(line, "lorentz.closed-form");
  v.require(line, "lorentz.p-equals-q");
  v.require(line, "lorentz.power-identity");
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> e(0.5, 4.0);
  std::uniform_int_distribution<std::size_t> size(1, 40);
  double worst = 0.0;
  for (int k = 0; k < 200; ++k) {
    const auto m = size(rng);
    auto vals = random_values(rng, m);
    auto w = random_weights(rng, m);
    const double p = e(rng), q = e(rng);
    const double lib = lorentz_norm(Field(MeasureSpace::make(w), vals), {p, q});
    const double ref = oracle::lorentz(vals, w, p, q);
    worst = std::max(worst, std::fabs(lib - ref) / ref);
  }
  line.need(worst <= 1e-9, "oracle quadrature on 200 fields " + fmt("%.2e", worst));
  return line;
}

Line gamma_sandwich(const Verdicts& v) {
  Line line;
  v.require(line, "lorentz.gamma-sandwich");
  std::mt19937_64 rng(303);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    auto vals = random_values(rng, 1 + k % 7);
    auto w = random_weights(rng, vals.size());
    Field f(MeasureSpace::make(w), vals);
    for (auto [p, q, r] : {std::tuple{2.0, 2.0, 1.0}, {3.0, 1.5, 0.5}, {1.5, 3.0, 1.0}}) {
      const double ref = oracle::gamma(vals, w, p, q, r);
      worst = std::max(worst, std::fabs(gamma_norm(f, {p, q}, r) - ref) / ref);
    }
  }
  line.need(worst <= 1e-8, "gamma vs oracle quadrature " + fmt("%.2e", worst));
  return line;
}

Line trace_formula(const Verdicts& v) {
  Line line;
  v.require(line, "trace.equality");
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<std::size_t> size(2, 12);
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto m = size(rng);
    auto w = random_weights(rng, m);
    auto masses = random_values(rng, m);
    CapacityParams p;
    p.s = 1.5 + 0.5 * (k % 4);
    CapacityOracle o(CapacityModel::finite(MeasureSpace::make(w), MatrixKernel::identity(m)), p);
    const double ref = oracle::additive_trace(masses, w);
    worst = std::max(worst, std::fabs(trace_norm_inf_form(AtomicMeasure{masses}, o) - ref) / ref);
    worst = std::max(worst, std::fabs(trace_norm(AtomicMeasure{masses}, TestSetFamily::all_subsets(), o).value - ref) / ref);
  }
  line.need(worst <= 1e-6, "identity-kernel models vs subset enumeration " + fmt("%.2e", worst));
  return line;
}

Line maximal(const Verdicts& v) {
  Line line;
  v.require(line, "maximal.constants");
  v.require(line, "maximal.probe");
  std::mt19937_64 rng(505);
  auto g = make_grid(1, 12.0, 64);
  double worst = 0.0;
  bool sup_ok = true;
  for (int k = 0; k < 20; ++k) {
    auto vals = random_values(rng, 64);
    Field f(g->space(), vals);
    auto m = local_maximal(*g, f);
    auto ref = oracle::local_maximal_1d(vals, g->spacing());
    for (std::size_t i = 0; i < 64; ++i) worst = std::max(worst, std::fabs(m[i] - ref[i]));
    sup_ok = sup_ok && m.sup_abs() <= f.sup_abs() * (1 + 1e-15);
  }
  line.need(worst <= 1e-12, "brute-force windows " + fmt("%.2e", worst));
  line.need(sup_ok, "sup never grows");
  return line;
}

}  // namespace

int main() {
  SuiteSpec spec;
  spec.name = "all";
  auto first = run_suite(spec);
  auto second = run_suite(spec);
  Verdicts v(first);

  std::vector<std::pair<std::string, Line>> lines;
  auto simple = [&](const std::string& name, std::vector<std::string> ids) {
    Line line;
    for (const auto& id : ids) v.require(line, id);
    lines.emplace_back(name, line);
  };

  lines.emplace_back("capacity certificates", capacity_certificates(v));
  simple("equilibrium identities", {"capacity.equilibrium"});
  simple("monotonicity and subadditivity", {"capacity.monotone", "capacity.subadditive"});
  lines.emplace_back("Lorentz norm engine", lorentz_engine(v));
  lines.emplace_back("Gamma sandwich", gamma_sandwich(v));
  simple("capacitary embedding constants", {"capacitary.embedding-constants"});
  simple("Strichartz localization", {"capacitary.strichartz"});
  simple("Sobolev lower bounds", {"capacitary.sobolev"});
  simple("pairing", {"blocks.pairing-tight", "blocks.pairing-lattice"});
  simple("constructive decomposition", {"blocks.constructive", "weights.level-sum"});
  simple("two-sided weight characterization", {"multiplier.weight-characterization"});
  lines.emplace_back("trace formula", trace_formula(v));
  simple("Kothe oracle", {"kothe.holder", "kothe.two-sided"});
  lines.emplace_back("maximal probes", maximal(v));
  {
    Line line;
    const bool same = render_report(first, ReportFormat::csv) == render_report(second, ReportFormat::csv);
    line.need(same, "two runs, " + std::to_string(first.verdicts.size()) + " verdicts, csv bytes identical");
    lines.emplace_back("determinism", line);
  }

  int failed = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& [name, line] = lines[i];
    if (!line.ok) ++failed;
    std::printf("%s %2zu %s: %s\n", line.ok ? "PASS" : "FAIL", i + 1, name.c_str(), line.note.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", lines.size() - failed, lines.size());
  return failed == 0 ? 0 : 1;
}
