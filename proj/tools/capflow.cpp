#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "capflow/blocks.hpp"
#include "capflow/capacity.hpp"
#include "capflow/config.hpp"
#include "capflow/errors.hpp"
#include "capflow/families.hpp"
#include "capflow/model_io.hpp"
#include "capflow/multiplier.hpp"
#include "capflow/suites.hpp"
#include "capflow/weights.hpp"

using namespace capflow;
using json = nlohmann::ordered_json;

namespace {

struct ModelOptions {
  std::string path;
  double alpha = 1.0;
  double s = 2.0;
  double tol = 1e-6;
};

void add_model_options(CLI::App* cmd, ModelOptions& m) {
  cmd->add_option("--model", m.path, "finite model or grid model file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--alpha", m.alpha, "Bessel order (grid models)");
  cmd->add_option("--s", m.s, "integrability exponent s > 1");
  cmd->add_option("--tol", m.tol, "relative duality-gap tolerance");
}

std::unique_ptr<CapacityOracle> open_oracle(const ModelOptions& m) {
  auto loaded = load_model(m.path);
  CapacityParams p;
  p.alpha = m.alpha;
  p.s = m.s;
  p.tol = m.tol;
  if (loaded.grid) {
    p.validate_for_grid(loaded.grid->dim);
    auto g = make_grid(loaded.grid->dim, loaded.grid->length, loaded.grid->points);
    return std::make_unique<CapacityOracle>(CapacityModel::on_grid(g, m.alpha), p);
  }
  p.validate();
  return std::make_unique<CapacityOracle>(CapacityModel::finite(loaded.finite->space, loaded.finite->kernel), p);
}

Field read_field(const std::string& path, const CapacityOracle& o) {
  return Field(o.space(), load_values(path, o.model().size()));
}

SetMask read_mask(const std::string& path, const CapacityOracle& o) {
  auto v = load_values(path, o.model().size());
  std::vector<std::uint8_t> bits(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] != 0.0 && v[i] != 1.0) throw FormatError("mask " + path + " has a non-0/1 entry");
    bits[i] = v[i] == 1.0;
  }
  return SetMask(std::move(bits));
}

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json estimate_json(const NormEstimate& e) {
  json j;
  j["value"] = number(e.value);
  j["mode"] = to_string(e.mode);
  j["lower"] = number(e.lower);
  j["upper"] = number(e.upper);
  j["max_gap"] = number(e.max_gap);
  j["witness"] = e.witness;
  if (e.witness_set) j["witness_cells"] = e.witness_set->indices();
  return j;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << text;
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string stem_of(const std::string& path) {
  const auto dot = path.rfind('.');
  const auto slash = path.rfind('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path;
  return path.substr(0, dot);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);)
    if (!item.empty()) out.push_back(item);
  return out;
}

// "2:2,1.5:3"
std::vector<std::pair<double, double>> parse_lattice(const std::string& s) {
  std::vector<std::pair<double, double>> out;
  for (const auto& item : split(s, ',')) {
    auto pq = split(item, ':');
    if (pq.size() != 2) throw InvalidArgument("lattice entries look like p:q, got " + item);
    out.emplace_back(std::stod(pq[0]), std::stod(pq[1]));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capflow: capacities, capacitary norms and verification campaigns"};
  app.require_subcommand(1);

  // capacity
  ModelOptions cap_model;
  std::string cap_set, cap_out;
  auto* cap = app.add_subcommand("capacity", "certified capacity of a set");
  add_model_options(cap, cap_model);
  cap->add_option("--set", cap_set, "mask file with 0/1 entries")->required()->check(CLI::ExistingFile);
  cap->add_option("--out", cap_out, "report path (default stdout)");

  // mnorm
  ModelOptions m_model;
  std::string m_field, m_space = "M", m_family = "levels", m_out;
  double m_p = 2.0, m_q = 2.0;
  auto* mn = app.add_subcommand("mnorm", "multiplier-type norm estimate");
  add_model_options(mn, m_model);
  mn->add_option("--field", m_field, "field file")->required()->check(CLI::ExistingFile);
  mn->add_option("--space", m_space, "M, scriptM or weakM")->check(CLI::IsMember({"M", "scriptM", "weakM"}));
  mn->add_option("--p", m_p, "Lorentz p");
  mn->add_option("--q", m_q, "Lorentz q");
  mn->add_option("--family", m_family, "test sets: all | levels | dyadic:G | random:K[:seed] | diam:D, joined by +");
  mn->add_option("--out", m_out, "report path (default stdout)");

  // nnorm
  ModelOptions n_model;
  std::string n_field, n_candidates, n_out;
  double n_p = 2.0, n_q = 2.0, n_chat = 0.0;
  Config n_cfg;
  auto* nn = app.add_subcommand("nnorm", "weighted-space upper bound over candidate weights");
  add_model_options(nn, n_model);
  nn->add_option("--field", n_field, "field file")->required()->check(CLI::ExistingFile);
  nn->add_option("--p", n_p, "Lorentz p");
  nn->add_option("--q", n_q, "Lorentz q");
  nn->add_option("--candidates", n_candidates, "potentials:<mask>,<mask>... or file:<weight>,<weight>...")
      ->required();
  nn->add_option("--c-hat", n_chat, "A1loc calibration constant (default: largest candidate constant)");
  nn->add_option("--delta", n_cfg.weights_delta, "potential weight exponent");
  nn->add_option("--slack", n_cfg.weights_slack, "A1loc admissibility slack");
  nn->add_option("--out", n_out, "report path (default stdout)");

  // maximal
  std::string x_model, x_in, x_out;
  auto* mx = app.add_subcommand("maximal", "local maximal function of a grid field");
  mx->add_option("--model", x_model, "grid model file (optional when the field has a grid header)")
      ->check(CLI::ExistingFile);
  mx->add_option("--in", x_in, "input field")->required()->check(CLI::ExistingFile);
  mx->add_option("--out", x_out, "output field (default stdout)");

  // block
  ModelOptions b_model;
  std::string b_field, b_mode = "constructive", b_weight, b_family = "levels", b_out;
  double b_p = 2.0, b_q = 2.0;
  auto* bk = app.add_subcommand("block", "block decomposition with an upper bound for the block norm");
  add_model_options(bk, b_model);
  bk->add_option("--field", b_field, "field file")->required()->check(CLI::ExistingFile);
  bk->add_option("--mode", b_mode, "constructive or greedy")->check(CLI::IsMember({"constructive", "greedy"}));
  bk->add_option("--weight", b_weight, "weight file (required for constructive)")->check(CLI::ExistingFile);
  bk->add_option("--family", b_family, "greedy dictionary");
  bk->add_option("--p", b_p, "Lorentz p");
  bk->add_option("--q", b_q, "Lorentz q");
  bk->add_option("--out", b_out, "decomposition JSON; blocks go next to it")->required();

  // verify
  std::string v_suite = "all", v_config, v_out, v_format, v_lattice;
  std::vector<std::string> v_models;
  auto* vf = app.add_subcommand("verify", "run a verification campaign");
  vf->add_option("--suite", v_suite, "suite name")->check(CLI::IsMember(suite_names()));
  vf->add_option("--config", v_config, "campaign config")->check(CLI::ExistingFile);
  vf->add_option("--out", v_out, "verdict file (.json or .csv; default stdout json)");
  vf->add_option("--format", v_format, "json or csv (default from --out extension)");
  vf->add_option("--lattice", v_lattice, "exponent pairs p:q,p:q");
  vf->add_option("--finite-model", v_models, "extra finite model files for the capacity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cap) {
      auto o = open_oracle(cap_model);
      auto set = read_mask(cap_set, *o);
      CapacityResult r = capacity(o->model(), set, o->params());
      json j;
      j["status"] = to_string(r.status);
      j["value"] = number(r.value);
      j["lower"] = number(r.lower);
      j["upper"] = number(r.upper);
      j["gap"] = number(r.gap);
      j["kkt"] = number(r.kkt);
      j["iterations"] = r.iterations;
      j["set_cells"] = set.count();
      if (r.status == SolveStatus::converged) {
        auto eq = equilibrium_checks(o->model(), r, o->params());
        j["equilibrium"] = {{"mass_residual", eq.mass_residual},
                            {"energy_residual", eq.energy_residual},
                            {"potential_residual", eq.potential_residual},
                            {"min_potential_on_set", eq.min_potential_on_set},
                            {"max_potential_on_support", eq.max_potential_on_support}};
      }
      j["dual"] = r.dual;
      write_json(cap_out, j);
      return r.ok() ? 0 : 2;
    }

    if (*mn) {
      auto o = open_oracle(m_model);
      auto f = read_field(m_field, *o);
      auto family = TestSetFamily::parse(m_family);
      json j;
      if (m_space == "weakM") {
        auto rep = weak_script_m_norm(f, m_p, family, *o);
        j = estimate_json(rep.set_form);
        j["level_form"] = estimate_json(rep.level_form);
        j["discrepancy"] = rep.discrepancy;
      } else {
        const LorentzExponents e(m_p, m_q);
        j = estimate_json(m_space == "M" ? m_norm(f, e, family, *o) : script_m_norm(f, e, family, *o));
      }
      j["family"] = family.describe();
      j["capacity_solves"] = o->solves();
      write_json(m_out, j);
      return 0;
    }

    if (*nn) {
      auto o = open_oracle(n_model);
      auto f = read_field(n_field, *o);
      const WeightConfig cfg{n_cfg.weights_delta, n_cfg.weights_slack, 0};
      const auto colon = n_candidates.find(':');
      if (colon == std::string::npos) throw InvalidArgument("--candidates needs a potentials: or file: prefix");
      const std::string kind = n_candidates.substr(0, colon);
      std::vector<Weight> candidates;
      for (const auto& path : split(n_candidates.substr(colon + 1), ',')) {
        if (kind == "potentials") {
          auto w = potential_weight(read_mask(path, *o), cfg, *o);
          w.label = path;
          candidates.push_back(std::move(w));
        } else if (kind == "file") {
          candidates.push_back(make_weight(read_field(path, *o), WeightKind::user, o.get(), cfg, path));
        } else {
          throw InvalidArgument("unknown candidate kind " + kind);
        }
      }
      double c_hat = n_chat;
      if (!(c_hat > 0.0)) {
        c_hat = 1.0;
        for (const auto& w : candidates)
          if (w.a1) c_hat = std::max(c_hat, *w.a1);
      }
      auto est = n_norm_upper(f, LorentzExponents(n_p, n_q), candidates, c_hat, cfg, *o);
      json j = estimate_json(est);
      j["c_hat"] = c_hat;
      j["candidates"] = candidates.size();
      write_json(n_out, j);
      return 0;
    }

    if (*mx) {
      GridPtr g;
      std::vector<double> values;
      if (!x_model.empty()) {
        auto loaded = load_model(x_model);
        if (!loaded.grid) throw InvalidArgument("maximal needs a grid model");
        g = make_grid(loaded.grid->dim, loaded.grid->length, loaded.grid->points);
        values = load_values(x_in, g->cells());
      } else {
        std::ifstream in(x_in);
        auto file = read_grid_field(in);
        g = make_grid(file.dim, file.length, file.points);
        values = std::move(file.values);
      }
      auto mf = local_maximal(*g, Field(g->space(), std::move(values)));
      std::ostringstream out;
      write_grid_field(out, *g, mf, "maximal");
      write_text(x_out, out.str());
      return 0;
    }

    if (*bk) {
      auto o = open_oracle(b_model);
      auto f = read_field(b_field, *o);
      const LorentzExponents e(b_p, b_q);
      const WeightConfig cfg;
      std::optional<Weight> w;
      if (!b_weight.empty()) w = make_weight(read_field(b_weight, *o), WeightKind::user, nullptr, cfg, b_weight);
      BlockDecomposition d;
      if (b_mode == "constructive") {
        if (!w) throw InvalidArgument("constructive mode needs --weight");
        d = block_norm_upper_constructive(f, e, *w, *o);
      } else {
        d = block_norm_upper_greedy(f, e, TestSetFamily::parse(b_family), *o, w ? &*w : nullptr);
      }
      json terms = json::array();
      const std::string stem = stem_of(b_out);
      for (std::size_t k = 0; k < d.terms.size(); ++k) {
        const auto& t = d.terms[k];
        const std::string file = stem + ".block" + std::to_string(k) + ".txt";
        std::ofstream bf(file);
        if (!bf) throw FormatError("cannot write " + file);
        bf << "field block" << k << "\n";
        for (double v : t.block.b.values()) bf << v << "\n";
        terms.push_back({{"lambda", t.lambda}, {"support_cells", t.block.support.indices()}, {"block_file", file}});
      }
      write_json(b_out, terms);
      std::cout << "route " << d.route << ", terms " << d.terms.size() << ", lambda sum " << d.lambda_sum
                << ", residual " << d.residual << ", uncovered cells " << d.uncovered_cells << "\n";
      return 0;
    }

    if (*vf) {
      SuiteSpec spec;
      spec.name = v_suite;
      if (!v_config.empty()) spec.config = Config::load(v_config);
      if (!v_lattice.empty()) spec.lattice = parse_lattice(v_lattice);
      spec.model_files = v_models;
      auto report = run_suite(spec);
      ReportFormat fmt = !v_format.empty() ? parse_report_format(v_format)
                         : v_out.empty()   ? ReportFormat::json
                                           : format_for_path(v_out);
      if (v_out.empty() || v_out == "-")
        std::cout << render_report(report, fmt);
      else
        emit_report(report, fmt, v_out);
      std::size_t fails = 0;
      for (const auto& v : report.verdicts) fails += v.status == VerdictStatus::fail;
      std::cerr << report.verdicts.size() << " checks, " << fails << " failed\n";
      return report.failed() ? 1 : 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "capflow: " << ex.what() << "\n";
    return 3;
  }
  return 0;
}
