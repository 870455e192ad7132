#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "capflow/capacity.hpp"
#include "capflow/grid.hpp"
#include "capflow/measure.hpp"

namespace capflow {

// Finite model text format:
//   atoms <m>
//   <m weights>
//   [kernel identity | kernel ones | kernel matrix <m*m values, row-major>]
//   [field <name>
//    <m values>]...
struct FiniteModelFile {
  SpacePtr space;
  std::shared_ptr<const MatrixKernel> kernel;
  std::vector<std::pair<std::string, Field>> fields;

  const Field& field(const std::string& name) const;
};

FiniteModelFile read_finite_model(std::istream& in);
FiniteModelFile load_finite_model(const std::string& path);
void write_finite_model(std::ostream& out, const FiniteModelFile& model);

// Grid model: a single line `grid n=<dim> N=<points> L=<length>`.
struct GridModelFile {
  int dim = 1;
  int points = 0;
  double length = 0.0;
};

GridModelFile read_grid_model(std::istream& in);

// Field on a grid:
//   field <name> grid=<N>x<N> L=<len> layout=row-major   (2-d)
//   field <name> grid=<N> L=<len> layout=row-major       (1-d)
// followed by the values.
struct GridFieldFile {
  std::string name;
  int dim = 1;
  int points = 0;
  double length = 0.0;
  std::vector<double> values;
};

GridFieldFile read_grid_field(std::istream& in);
void write_grid_field(std::ostream& out, const Grid& g, const Field& f, const std::string& name);

/// Either model kind, as named by the first token of the file.
struct LoadedModel {
  std::unique_ptr<FiniteModelFile> finite;
  std::unique_ptr<GridModelFile> grid;
};

LoadedModel load_model(const std::string& path);

/// Values of a field or mask file matching a model of the given size. Accepts
/// a grid field header or a bare `field <name>` block.
std::vector<double> load_values(const std::string& path, std::size_t expected);

}  // namespace capflow
