#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

#include "capflow/measure.hpp"

namespace capflow {

/// Periodic lattice on [-L/2, L/2)^n, n in {1, 2}. Cells are stored row-major
/// with the first axis slowest; cell centers sit at (j + 1/2)h - L/2.
class Grid {
 public:
  Grid(int dim, double length, int points);

  int dim() const { return dim_; }
  double length() const { return length_; }
  int points() const { return points_; }
  double spacing() const { return h_; }
  double cell_measure() const { return cell_measure_; }
  std::size_t cells() const { return cells_; }
  const SpacePtr& space() const { return space_; }

  double center(int j) const { return (j + 0.5) * h_ - 0.5 * length_; }
  /// Axis indices of a cell; the unused second entry is 0 in 1-d.
  std::array<int, 2> axes(std::size_t cell) const;
  std::size_t cell(int i0, int i1 = 0) const;
  std::array<double, 2> point(std::size_t cell) const;

  /// Shortest periodic offset between two axis indices, in cells.
  int wrap_offset(int a, int b) const;
  /// Euclidean distance between cell centers under periodic wrap.
  double periodic_distance(std::size_t a, std::size_t b) const;

  bool same_as(const Grid& other) const {
    return dim_ == other.dim_ && points_ == other.points_ && length_ == other.length_;
  }

 private:
  int dim_;
  double length_;
  int points_;
  double h_;
  double cell_measure_;
  std::size_t cells_;
  SpacePtr space_;
};

using GridPtr = std::shared_ptr<const Grid>;

GridPtr make_grid(int dim, double length, int points);

/// Diameter of the closed union of the cells in a mask (non-periodic).
double set_diameter(const Grid& g, const SetMask& set);

/// Throws unless L exceeds the support diameter plus the decay margin.
void validate_box(const Grid& g, double support_diameter, double margin = 8.0);

struct KernelSpec {
  double alpha = 0.0;
  /// Symbol samples in half-spectrum layout (last axis has N/2 + 1 entries).
  std::vector<double> symbol;
  /// Kernel values indexed by periodic displacement, same layout as a field.
  std::vector<double> kernel;
  /// Real spectrum of the clipped kernel times the cell measure.
  std::vector<double> spectrum;
  /// Mass removed by clipping negative ringing, before renormalization.
  double clipped_mass = 0.0;

  double at(const Grid& g, int d0, int d1 = 0) const;
};

constexpr double kMaxClippedMass = 1e-6;

/// Spectral Bessel kernel on a grid; rejects the grid if clipping removes more
/// than max_clipped of the unit mass.
KernelSpec bessel_kernel(const Grid& g, double alpha, double max_clipped = kMaxClippedMass);

/// Wraps an even displacement kernel so convolve_raw can use it.
KernelSpec kernel_from_values(const Grid& g, std::vector<double> kernel);

/// Periodic convolution scaled by the cell measure, without clipping.
std::vector<double> convolve_raw(const Grid& g, const KernelSpec& k, std::span<const double> f);

/// Periodic convolution; round-off negatives above -1e-12 * scale are
/// clipped and their total returned through clipped when provided.
Field convolve(const Grid& g, const KernelSpec& k, const Field& f, double* clipped = nullptr);

}  // namespace capflow
