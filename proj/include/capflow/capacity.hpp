#pragma once

#include <Eigen/Dense>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "capflow/grid.hpp"
#include "capflow/measure.hpp"

namespace capflow {

struct CapacityParams {
  double alpha = 1.0;
  double s = 2.0;
  double tol = 1e-6;
  int max_iter = 500;

  double s_conj() const { return s / (s - 1.0); }
  /// Exponent and tolerance sanity; finite models only need s > 1.
  void validate() const;
  /// Grid models additionally need 0 < alpha <= n and 1 < s <= n / alpha.
  void validate_for_grid(int dim) const;
};

/// Nonnegative linear map A with (Af)_j = sum_i K_ji f_i.
class KernelOperator {
 public:
  virtual ~KernelOperator() = default;
  virtual std::size_t size() const = 0;
  virtual std::vector<double> apply(std::span<const double> f) const = 0;
  virtual std::vector<double> apply_adjoint(std::span<const double> y) const = 0;
  /// Rows of A for the listed indices, as a dense |idx| x size() block.
  virtual Eigen::MatrixXd rows(std::span<const std::size_t> idx) const = 0;
  /// sum_i K_ji^2 d_i for every j.
  virtual std::vector<double> squared_apply(std::span<const double> d) const = 0;
};

class MatrixKernel final : public KernelOperator {
 public:
  explicit MatrixKernel(Eigen::MatrixXd k);
  static std::shared_ptr<const MatrixKernel> identity(std::size_t m);
  static std::shared_ptr<const MatrixKernel> ones(std::size_t m);

  const Eigen::MatrixXd& matrix() const { return k_; }
  std::size_t size() const override { return static_cast<std::size_t>(k_.rows()); }
  std::vector<double> apply(std::span<const double> f) const override;
  std::vector<double> apply_adjoint(std::span<const double> y) const override;
  Eigen::MatrixXd rows(std::span<const std::size_t> idx) const override;
  std::vector<double> squared_apply(std::span<const double> d) const override;

 private:
  Eigen::MatrixXd k_;
};

/// A = convolution with G_alpha scaled by the cell measure; symmetric.
class ConvolutionKernel final : public KernelOperator {
 public:
  ConvolutionKernel(GridPtr grid, KernelSpec spec);

  const Grid& grid() const { return *grid_; }
  const KernelSpec& spec() const { return spec_; }
  std::size_t size() const override { return grid_->cells(); }
  std::vector<double> apply(std::span<const double> f) const override;
  std::vector<double> apply_adjoint(std::span<const double> y) const override { return apply(y); }
  Eigen::MatrixXd rows(std::span<const std::size_t> idx) const override;
  std::vector<double> squared_apply(std::span<const double> d) const override;

 private:
  GridPtr grid_;
  KernelSpec spec_;
  KernelSpec squared_;
};

/// Measure space plus kernel; grid models also carry their lattice.
struct CapacityModel {
  SpacePtr space;
  std::shared_ptr<const KernelOperator> kernel;
  GridPtr grid;

  static CapacityModel finite(SpacePtr space, std::shared_ptr<const KernelOperator> kernel);
  static CapacityModel on_grid(GridPtr grid, double alpha, double max_clipped = kMaxClippedMass);

  std::size_t size() const { return space->size(); }
  bool is_grid() const { return grid != nullptr; }
};

enum class SolveStatus { converged, empty_set, max_iterations, stalled, infeasible };

const char* to_string(SolveStatus s);

struct CapacityResult {
  SolveStatus status = SolveStatus::empty_set;
  SetMask set;
  double value = 0.0;  // primal objective of the reported optimizer
  double lower = 0.0;
  double upper = 0.0;
  double gap = 0.0;  // (upper - lower) / max(upper, eps)
  double kkt = 0.0;  // sup-norm of the projected dual gradient
  int iterations = 0;
  std::vector<double> primal;     // feasible f >= 0
  std::vector<double> potential;  // A f
  std::vector<double> dual;       // equilibrium masses, zero off the set

  bool ok() const { return status == SolveStatus::converged || status == SolveStatus::empty_set; }
};

CapacityResult capacity(const CapacityModel& model, const SetMask& set, const CapacityParams& params);

/// V = A((A^T mu / w)^{s' - 1}).
struct NonlinearPotential {
  Field values;
  std::vector<double> source;
};

NonlinearPotential nonlinear_potential(const CapacityModel& model, std::span<const double> mu,
                                       const CapacityParams& params);

struct EquilibriumReport {
  double mass_residual = 0.0;       // |mu(R) - C| / C
  double energy_residual = 0.0;     // |int (A^T mu / w)^{s'} dw - C| / C
  double potential_residual = 0.0;  // |int V dmu - C| / C
  double min_potential_on_set = 0.0;
  double max_potential_on_support = 0.0;
  double max_residual() const;
};

EquilibriumReport equilibrium_checks(const CapacityModel& model, const CapacityResult& r, const CapacityParams& params);

/// Memoized, thread-safe capacity evaluation for one model and parameter set.
class CapacityOracle {
 public:
  CapacityOracle(CapacityModel model, CapacityParams params);

  /// Throws SolverFailure when the certificate does not close.
  const CapacityResult& solve(const SetMask& set) const;
  double value(const SetMask& set) const { return solve(set).value; }

  const CapacityModel& model() const { return model_; }
  const CapacityParams& params() const { return params_; }
  const SpacePtr& space() const { return model_.space; }
  std::size_t solves() const;

 private:
  CapacityModel model_;
  CapacityParams params_;
  mutable std::mutex mutex_;
  mutable std::unordered_map<std::string, std::unique_ptr<CapacityResult>> cache_;
};

}  // namespace capflow
