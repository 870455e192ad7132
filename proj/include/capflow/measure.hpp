#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace capflow {

/// Finite set of atoms with strictly positive masses. Grids expose their
/// cells through the same type (uniform masses h^n).
class MeasureSpace {
 public:
  explicit MeasureSpace(std::vector<double> weights);

  static std::shared_ptr<const MeasureSpace> make(std::vector<double> weights);
  static std::shared_ptr<const MeasureSpace> uniform(std::size_t atoms, double mass);

  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double weight(std::size_t i) const { return weights_[i]; }
  double total_mass() const { return total_; }

  bool same_as(const MeasureSpace& other) const;

 private:
  std::vector<double> weights_;
  double total_ = 0.0;
};

using SpacePtr = std::shared_ptr<const MeasureSpace>;

/// Subset of atoms. Immutable once built.
class SetMask {
 public:
  SetMask() = default;
  explicit SetMask(std::vector<std::uint8_t> bits);

  static SetMask empty(std::size_t atoms);
  static SetMask full(std::size_t atoms);
  static SetMask from_indices(std::size_t atoms, std::span<const std::size_t> indices);
  static SetMask from_bits(std::size_t atoms, std::uint64_t bits);

  std::size_t size() const { return bits_.size(); }
  std::size_t count() const { return count_; }
  bool is_empty() const { return count_ == 0; }
  bool contains(std::size_t i) const { return bits_[i] != 0; }
  std::span<const std::uint8_t> bits() const { return bits_; }
  std::vector<std::size_t> indices() const;

  /// Sum of atom masses in the set.
  double measure(const MeasureSpace& space) const;

  SetMask unite(const SetMask& other) const;
  SetMask intersect(const SetMask& other) const;
  bool subset_of(const SetMask& other) const;

  /// Byte string usable as a hash key.
  std::string key() const;

  bool operator==(const SetMask& other) const { return bits_ == other.bits_; }

 private:
  std::vector<std::uint8_t> bits_;
  std::size_t count_ = 0;
};

/// Real values, one per atom of a space.
class Field {
 public:
  Field(SpacePtr space, std::vector<double> values);

  static Field zeros(SpacePtr space);
  static Field constant(SpacePtr space, double c);
  static Field indicator(SpacePtr space, const SetMask& set);

  const SpacePtr& space() const { return space_; }
  const MeasureSpace& measure() const { return *space_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  Field scaled(double c) const;
  Field abs() const;
  Field restricted(const SetMask& set) const;
  Field plus(const Field& other) const;
  Field times(const Field& other) const;
  Field pow_abs(double r) const;

  double sup_abs() const;
  bool is_zero() const;
  SetMask support() const;

  /// Throws unless both fields live on the same space.
  void require_same_space(const Field& other) const;

 private:
  SpacePtr space_;
  std::vector<double> values_;
};

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Exponent pair (p, q) with p in (0, inf) and q in (0, inf].
class LorentzExponents {
 public:
  LorentzExponents(double p, double q);

  double p() const { return p_; }
  double q() const { return q_; }
  bool weak() const { return q_ == kInfinity; }

  /// p / (p - 1); requires p > 1.
  double p_conj() const;
  /// q / (q - 1); requires q > 1. Returns 1 for q = inf.
  double q_conj() const;

 private:
  double p_;
  double q_;
};

double conjugate_exponent(double r);

/// Right-continuous step function on [0, inf):
///   value plateaus[0] on [0, breakpoints[0]), plateaus[i] on
///   [breakpoints[i-1], breakpoints[i]), and plateaus.back() after the last
///   breakpoint. plateaus.size() == breakpoints.size() + 1.
class StepFunction {
 public:
  StepFunction(std::vector<double> breakpoints, std::vector<double> plateaus);

  std::span<const double> breakpoints() const { return breakpoints_; }
  std::span<const double> plateaus() const { return plateaus_; }
  double operator()(double t) const;

 private:
  std::vector<double> breakpoints_;
  std::vector<double> plateaus_;
};

/// One plateau of |f|: the distinct value and the mass of {|f| >= value}.
struct Level {
  double value = 0.0;
  double cumulative_mass = 0.0;
  std::size_t first_rank = 0;  // position in the (value desc, atom asc) order
  std::size_t last_rank = 0;   // one past the last atom at this value
};

/// Atoms ordered by (|value| desc, atom id asc).
std::vector<std::size_t> descending_order(const Field& f);

/// Distinct nonzero values of |f|, descending, with cumulative masses.
std::vector<Level> levels_of(const Field& f);

/// Superlevel set {|f| >= levels[i].value} for each level.
std::vector<SetMask> superlevel_sets(const Field& f);

/// t -> mu({|f| > t}).
StepFunction distribution_function(const Field& f);

/// Decreasing rearrangement f* on (0, total mass].
StepFunction decreasing_rearrangement(const Field& f);

}  // namespace capflow
