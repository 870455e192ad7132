#include "capflow/capacity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "capflow/errors.hpp"

namespace capflow {

void CapacityParams::validate() const {
  if (!(s > 1.0) || !std::isfinite(s)) throw InvalidArgument("capacity exponent s must exceed 1");
  if (!(tol > 0.0) || tol >= 1.0) throw InvalidArgument("solver tolerance must lie in (0, 1)");
  if (max_iter < 1) throw InvalidArgument("max_iter must be positive");
}

void CapacityParams::validate_for_grid(int dim) const {
  validate();
  if (!(alpha > 0.0) || alpha > dim) throw InvalidArgument("alpha must lie in (0, n]");
  if (alpha * s > dim + 1e-12) throw InvalidArgument("need 1 < s <= n / alpha");
}

MatrixKernel::MatrixKernel(Eigen::MatrixXd k) : k_(std::move(k)) {
  if (k_.rows() != k_.cols() || k_.rows() == 0) throw InvalidArgument("kernel matrix must be square and nonempty");
  if ((k_.array() < 0.0).any() || !k_.allFinite()) throw InvalidArgument("kernel entries must be finite and nonnegative");
}

std::shared_ptr<const MatrixKernel> MatrixKernel::identity(std::size_t m) {
  return std::make_shared<const MatrixKernel>(Eigen::MatrixXd::Identity(m, m));
}

std::shared_ptr<const MatrixKernel> MatrixKernel::ones(std::size_t m) {
  return std::make_shared<const MatrixKernel>(Eigen::MatrixXd::Ones(m, m));
}

std::vector<double> MatrixKernel::apply(std::span<const double> f) const {
  Eigen::Map<const Eigen::VectorXd> x(f.data(), static_cast<Eigen::Index>(f.size()));
  Eigen::VectorXd y = k_ * x;
  return {y.data(), y.data() + y.size()};
}

std::vector<double> MatrixKernel::apply_adjoint(std::span<const double> v) const {
  Eigen::Map<const Eigen::VectorXd> x(v.data(), static_cast<Eigen::Index>(v.size()));
  Eigen::VectorXd y = k_.transpose() * x;
  return {y.data(), y.data() + y.size()};
}

Eigen::MatrixXd MatrixKernel::rows(std::span<const std::size_t> idx) const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), k_.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = k_.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

std::vector<double> MatrixKernel::squared_apply(std::span<const double> d) const {
  Eigen::Map<const Eigen::VectorXd> x(d.data(), static_cast<Eigen::Index>(d.size()));
  Eigen::VectorXd y = k_.array().square().matrix() * x;
  return {y.data(), y.data() + y.size()};
}

ConvolutionKernel::ConvolutionKernel(GridPtr grid, KernelSpec spec) : grid_(std::move(grid)), spec_(std::move(spec)) {
  std::vector<double> sq(spec_.kernel.size());
  const double hn = grid_->cell_measure();
  for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = spec_.kernel[i] * spec_.kernel[i] * hn;
  squared_ = kernel_from_values(*grid_, std::move(sq));
}

std::vector<double> ConvolutionKernel::apply(std::span<const double> f) const { return convolve_raw(*grid_, spec_, f); }

std::vector<double> ConvolutionKernel::squared_apply(std::span<const double> d) const {
  return convolve_raw(*grid_, squared_, d);
}

Eigen::MatrixXd ConvolutionKernel::rows(std::span<const std::size_t> idx) const {
  const auto& g = *grid_;
  const double hn = g.cell_measure();
  const std::size_t n = g.cells();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < idx.size(); ++r) {
    auto a = g.axes(idx[r]);
    for (std::size_t i = 0; i < n; ++i) {
      auto b = g.axes(i);
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(i)) = spec_.at(g, a[0] - b[0], a[1] - b[1]) * hn;
    }
  }
  return out;
}

CapacityModel CapacityModel::finite(SpacePtr space, std::shared_ptr<const KernelOperator> kernel) {
  if (!space || !kernel) throw InvalidArgument("finite model needs a space and a kernel");
  if (kernel->size() != space->size()) throw InvalidArgument("kernel size does not match atom count");
  return {std::move(space), std::move(kernel), nullptr};
}

CapacityModel CapacityModel::on_grid(GridPtr grid, double alpha, double max_clipped) {
  auto k = std::make_shared<const ConvolutionKernel>(grid, bessel_kernel(*grid, alpha, max_clipped));
  return {grid->space(), std::move(k), std::move(grid)};
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::empty_set: return "empty";
    case SolveStatus::max_iterations: return "max-iterations";
    case SolveStatus::stalled: return "stalled";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

namespace {

using Eigen::Index;
using Eigen::VectorXd;

// Dense Hessians cost |E|^2 * n per Newton step; past this budget the solver
// switches to conjugate gradients with operator products.
constexpr double kDenseBudget = 1.5e8;

// Dual of the capacity program. With u = A_E^T lambda and
// c_i = (s w_i)^{1 - s'}, the objective
//   phi(lambda) = (1/s') sum_i c_i u_i^{s'} - sum_j lambda_j
// is convex with gradient (A f)_E - 1 at f_i = c_i u_i^{s' - 1}.
class DualSolver {
 public:
  DualSolver(const CapacityModel& model, const SetMask& set, const CapacityParams& params)
      : model_(model), params_(params), idx_(set.indices()), n_(model.size()), m_(idx_.size()) {
    s_ = params.s;
    sp_ = params.s_conj();
    w_.assign(model.space->weights().begin(), model.space->weights().end());
    c_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) c_[i] = std::pow(s_ * w_[i], 1.0 - sp_);
    dense_ = static_cast<double>(m_) * static_cast<double>(m_) * static_cast<double>(n_) <= kDenseBudget ||
             !model.is_grid();
    if (dense_) ae_ = model.kernel->rows(idx_);
  }

  std::vector<double> lift(const VectorXd& lambda) const {
    if (dense_) {
      VectorXd u = ae_.transpose() * lambda;
      return {u.data(), u.data() + u.size()};
    }
    std::vector<double> y(n_, 0.0);
    for (std::size_t j = 0; j < m_; ++j) y[idx_[j]] = lambda[static_cast<Index>(j)];
    return model_.kernel->apply_adjoint(y);
  }

  VectorXd constrain(const std::vector<double>& f) const {
    if (dense_) return ae_ * Eigen::Map<const VectorXd>(f.data(), static_cast<Index>(n_));
    auto af = model_.kernel->apply(f);
    VectorXd out(static_cast<Index>(m_));
    for (std::size_t j = 0; j < m_; ++j) out[static_cast<Index>(j)] = af[idx_[j]];
    return out;
  }

  double objective(const VectorXd& lambda) const {
    auto u = lift(lambda);
    double acc = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      if (u[i] > 0.0) acc += c_[i] * std::pow(u[i], sp_);
    return acc / sp_ - lambda.sum();
  }

  std::vector<double> primal(const std::vector<double>& u) const {
    std::vector<double> f(n_);
    for (std::size_t i = 0; i < n_; ++i) f[i] = u[i] > 0.0 ? c_[i] * std::pow(u[i], sp_ - 1.0) : 0.0;
    return f;
  }

  bool feasible() const {
    std::vector<double> one(n_, 1.0);
    auto r = model_.kernel->apply(one);
    for (std::size_t j : idx_)
      if (!(r[j] > 0.0)) return false;
    return true;
  }

  CapacityResult run(const SetMask& set) {
    CapacityResult res;
    res.set = set;
    VectorXd lambda = initial();
    const double gap_goal = std::max(1e-2 * params_.tol, 1e-13);
    const double kkt_goal = 0.1 * params_.tol;
    res.status = SolveStatus::max_iterations;
    State st;
    for (int it = 0; it <= params_.max_iter; ++it) {
      st = evaluate(lambda);
      res.iterations = it;
      if (st.gap <= gap_goal && st.kkt <= kkt_goal) {
        res.status = SolveStatus::converged;
        break;
      }
      if (it == params_.max_iter) break;
      if (!newton_step(lambda, st)) {
        res.status = SolveStatus::stalled;
        break;
      }
    }
    if (res.status != SolveStatus::converged && st.gap <= params_.tol && st.kkt <= params_.tol)
      res.status = SolveStatus::converged;
    finish(res, lambda, st);
    return res;
  }

 private:
  struct State {
    std::vector<double> u, f;
    VectorXd grad;
    double min_af = 0.0, upper = 0.0, lower = 0.0, gap = 1.0, kkt = 0.0, pg_norm = 0.0;
  };

  VectorXd initial() const {
    VectorXd ones = VectorXd::Ones(static_cast<Index>(m_));
    auto u = lift(ones);
    double a = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      if (u[i] > 0.0) a += c_[i] * std::pow(u[i], sp_);
    return ones * std::pow(static_cast<double>(m_) / a, 1.0 / (sp_ - 1.0));
  }

  State evaluate(const VectorXd& lambda) const {
    State st;
    st.u = lift(lambda);
    for (auto& v : st.u) v = std::max(v, 0.0);
    st.f = primal(st.u);
    VectorXd af = constrain(st.f);
    st.grad = af.array() - 1.0;
    st.min_af = af.minCoeff();
    double fs = 0.0, us = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      fs += w_[i] * std::pow(st.f[i], s_);
      us += w_[i] * std::pow(st.u[i] / w_[i], sp_);
    }
    st.upper = st.min_af > 0.0 ? fs / std::pow(st.min_af, s_) : std::numeric_limits<double>::infinity();
    const double mass = lambda.sum();
    st.lower = us > 0.0 ? std::pow(mass / std::pow(us, 1.0 / sp_), s_) : 0.0;
    st.gap = std::isfinite(st.upper) ? (st.upper - st.lower) / std::max(st.upper, 1e-300) : 1.0;
    double kkt = 0.0, pg = 0.0;
    for (Index j = 0; j < static_cast<Index>(m_); ++j) {
      const double g = st.grad[j];
      kkt = std::max(kkt, lambda[j] > 0.0 ? std::fabs(g) : std::max(0.0, -g));
      const double step = lambda[j] - std::max(0.0, lambda[j] - g);
      pg += step * step;
    }
    st.kkt = kkt;
    st.pg_norm = std::sqrt(pg);
    return st;
  }

  // One projected Newton step with an Armijo search along the projection arc.
  bool newton_step(VectorXd& lambda, const State& st) const {
    const Index m = static_cast<Index>(m_);
    double umax = 0.0;
    for (double v : st.u) umax = std::max(umax, v);
    const double floor = std::max(umax * 1e-14, 1e-300);
    std::vector<double> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = (sp_ - 1.0) * c_[i] * std::pow(std::max(st.u[i], floor), sp_ - 2.0);

    const double eps = std::min(1e-3 * lambda.maxCoeff(), st.pg_norm);
    std::vector<Index> free, bound;
    for (Index j = 0; j < m; ++j) {
      if (lambda[j] <= eps && st.grad[j] > 0.0)
        bound.push_back(j);
      else
        free.push_back(j);
    }

    VectorXd hdiag(m);
    if (dense_) {
      hdiag = ae_.array().square().matrix() * Eigen::Map<const VectorXd>(d.data(), static_cast<Index>(n_));
    } else {
      auto sq = model_.kernel->squared_apply(d);
      for (std::size_t j = 0; j < m_; ++j) hdiag[static_cast<Index>(j)] = sq[idx_[j]];
    }

    VectorXd dir = VectorXd::Zero(m);
    for (Index j : bound) dir[j] = -st.grad[j] / std::max(hdiag[j], 1e-300);
    if (!free.empty()) {
      VectorXd gf(static_cast<Index>(free.size()));
      for (std::size_t k = 0; k < free.size(); ++k) gf[static_cast<Index>(k)] = st.grad[free[k]];
      VectorXd step = dense_ ? solve_dense(free, d, gf) : solve_cg(free, d, hdiag, gf);
      for (std::size_t k = 0; k < free.size(); ++k) dir[free[k]] = -step[static_cast<Index>(k)];
    }

    const double phi0 = objective(lambda);
    double alpha = 1.0;
    for (int k = 0; k < 60; ++k, alpha *= 0.5) {
      VectorXd trial = (lambda + alpha * dir).cwiseMax(0.0);
      double decrease = 0.0;
      for (Index j : free) decrease -= alpha * st.grad[j] * dir[j];
      for (Index j : bound) decrease += st.grad[j] * (lambda[j] - trial[j]);
      const double phi1 = objective(trial);
      if (phi0 - phi1 >= 1e-4 * decrease && phi1 <= phi0) {
        if ((trial - lambda).cwiseAbs().maxCoeff() == 0.0) return false;
        lambda = trial;
        return true;
      }
    }
    return false;
  }

  VectorXd solve_dense(const std::vector<Index>& free, const std::vector<double>& d, const VectorXd& gf) const {
    const Index k = static_cast<Index>(free.size());
    Eigen::MatrixXd b(k, static_cast<Index>(n_));
    for (Index r = 0; r < k; ++r) b.row(r) = ae_.row(free[static_cast<std::size_t>(r)]);
    for (std::size_t i = 0; i < n_; ++i) b.col(static_cast<Index>(i)) *= std::sqrt(d[i]);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(k, k);
    h.selfadjointView<Eigen::Lower>().rankUpdate(b);
    h = h.selfadjointView<Eigen::Lower>();
    const double tau = 1e-13 * h.diagonal().maxCoeff();
    h.diagonal().array() += tau;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    VectorXd x = ldlt.solve(gf);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) return gf.cwiseQuotient(h.diagonal());
    return x;
  }

  VectorXd solve_cg(const std::vector<Index>& free, const std::vector<double>& d, const VectorXd& hdiag,
                    const VectorXd& gf) const {
    const Index k = static_cast<Index>(free.size());
    auto hv = [&](const VectorXd& v) {
      std::vector<double> y(n_, 0.0);
      for (Index r = 0; r < k; ++r) y[idx_[static_cast<std::size_t>(free[static_cast<std::size_t>(r)])]] = v[r];
      auto u = model_.kernel->apply_adjoint(y);
      for (std::size_t i = 0; i < n_; ++i) u[i] *= d[i];
      auto z = model_.kernel->apply(u);
      VectorXd out(k);
      for (Index r = 0; r < k; ++r) out[r] = z[idx_[static_cast<std::size_t>(free[static_cast<std::size_t>(r)])]];
      return out;
    };
    VectorXd pre(k);
    for (Index r = 0; r < k; ++r) pre[r] = 1.0 / std::max(hdiag[free[static_cast<std::size_t>(r)]], 1e-300);
    VectorXd x = VectorXd::Zero(k), r = gf, z = pre.cwiseProduct(r), p = z;
    double rz = r.dot(z);
    const double target = std::min(0.1, std::sqrt(gf.norm())) * gf.norm();
    for (int it = 0; it < 400 && r.norm() > target; ++it) {
      VectorXd hp = hv(p);
      const double curv = p.dot(hp);
      if (!(curv > 0.0)) break;
      const double a = rz / curv;
      x += a * p;
      r -= a * hp;
      z = pre.cwiseProduct(r);
      const double rz1 = r.dot(z);
      p = z + (rz1 / rz) * p;
      rz = rz1;
    }
    if (x.isZero(0.0)) return gf.cwiseProduct(pre);
    return x;
  }

  void finish(CapacityResult& res, const VectorXd& lambda, const State& st) const {
    res.kkt = st.kkt;
    res.lower = st.lower;
    res.upper = st.upper;
    res.value = st.upper;
    res.gap = st.gap;
    res.primal = st.f;
    if (st.min_af > 0.0)
      for (auto& v : res.primal) v /= st.min_af;
    res.potential = model_.kernel->apply(res.primal);
    // At the optimum lambda(E) = s * C(E); dividing by s gives the
    // equilibrium normalization mu(E) = C(E).
    res.dual.assign(n_, 0.0);
    for (std::size_t j = 0; j < m_; ++j) res.dual[idx_[j]] = lambda[static_cast<Index>(j)] / s_;
  }

  const CapacityModel& model_;
  const CapacityParams& params_;
  std::vector<std::size_t> idx_;
  std::size_t n_, m_;
  double s_ = 2.0, sp_ = 2.0;
  std::vector<double> w_, c_;
  bool dense_ = true;
  Eigen::MatrixXd ae_;
};

}  // namespace

CapacityResult capacity(const CapacityModel& model, const SetMask& set, const CapacityParams& params) {
  if (model.is_grid())
    params.validate_for_grid(model.grid->dim());
  else
    params.validate();
  if (set.size() != model.size()) throw InvalidArgument("set does not match model size");
  CapacityResult res;
  res.set = set;
  if (set.is_empty()) {
    res.status = SolveStatus::empty_set;
    res.primal.assign(model.size(), 0.0);
    res.potential.assign(model.size(), 0.0);
    res.dual.assign(model.size(), 0.0);
    return res;
  }
  DualSolver solver(model, set, params);
  if (!solver.feasible()) {
    res.status = SolveStatus::infeasible;
    res.value = res.upper = std::numeric_limits<double>::infinity();
    res.gap = 1.0;
    return res;
  }
  return solver.run(set);
}

NonlinearPotential nonlinear_potential(const CapacityModel& model, std::span<const double> mu,
                                       const CapacityParams& params) {
  if (mu.size() != model.size()) throw InvalidArgument("measure does not match model size");
  for (double v : mu)
    if (v < 0.0) throw InvalidArgument("measure must be nonnegative");
  const double sp = params.s_conj();
  auto u = model.kernel->apply_adjoint(mu);
  const auto w = model.space->weights();
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = u[i] > 0.0 ? std::pow(u[i] / w[i], sp - 1.0) : 0.0;
  auto v = model.kernel->apply(u);
  for (auto& x : v) x = std::max(x, 0.0);
  return {Field(model.space, std::move(v)), std::vector<double>(mu.begin(), mu.end())};
}

double EquilibriumReport::max_residual() const {
  return std::max({mass_residual, energy_residual, potential_residual});
}

EquilibriumReport equilibrium_checks(const CapacityModel& model, const CapacityResult& r, const CapacityParams& params) {
  EquilibriumReport rep;
  if (r.status == SolveStatus::empty_set) {
    rep.min_potential_on_set = 1.0;
    rep.max_potential_on_support = 1.0;
    return rep;
  }
  const double cap = r.value;
  const double sp = params.s_conj();
  const auto w = model.space->weights();
  const double mass = std::accumulate(r.dual.begin(), r.dual.end(), 0.0);
  auto u = model.kernel->apply_adjoint(r.dual);
  double energy = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
    if (u[i] > 0.0) energy += w[i] * std::pow(u[i] / w[i], sp);
  auto pot = nonlinear_potential(model, r.dual, params);
  double vmu = 0.0, vmin = std::numeric_limits<double>::infinity(), vmax = 0.0;
  for (std::size_t j = 0; j < r.dual.size(); ++j) {
    vmu += pot.values[j] * r.dual[j];
    if (r.set.contains(j)) vmin = std::min(vmin, pot.values[j]);
    if (r.dual[j] > 0.0) vmax = std::max(vmax, pot.values[j]);
  }
  rep.mass_residual = std::fabs(mass - cap) / cap;
  rep.energy_residual = std::fabs(energy - cap) / cap;
  rep.potential_residual = std::fabs(vmu - cap) / cap;
  rep.min_potential_on_set = vmin;
  rep.max_potential_on_support = vmax;
  return rep;
}

CapacityOracle::CapacityOracle(CapacityModel model, CapacityParams params)
    : model_(std::move(model)), params_(params) {
  if (model_.is_grid())
    params_.validate_for_grid(model_.grid->dim());
  else
    params_.validate();
}

const CapacityResult& CapacityOracle::solve(const SetMask& set) const {
  const std::string key = set.key();
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it != cache_.end()) return *it->second;
  }
  auto res = std::make_unique<CapacityResult>(capacity(model_, set, params_));
  if (!res->ok())
    throw SolverFailure(std::string("capacity solve ") + to_string(res->status) + " with gap " +
                        std::to_string(res->gap) + " on a set of " + std::to_string(set.count()) + " atoms");
  std::lock_guard lock(mutex_);
  auto [it, fresh] = cache_.try_emplace(key, std::move(res));
  return *it->second;
}

std::size_t CapacityOracle::solves() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

}  // namespace capflow
