#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "capflow/capacity.hpp"
#include "capflow/measure.hpp"

namespace capflow {

constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Test sets K over which the multiplier and trace suprema are taken.
///
/// Family strings: components joined by '+', each one of
///   all             every nonempty subset (at most 20 atoms)
///   dyadic:G        dyadic cubes of side 2^-g, g = 0..G, meeting supp f
///   levels          superlevel sets of |f|
///   random:K[:seed] K random sets (subsets on finite models, unions of
///                   balls of radius <= 1 on grids)
///   diam:D          keep only sets of diameter <= D (grids only)
class TestSetFamily {
 public:
  static TestSetFamily parse(const std::string& spec);
  static TestSetFamily all_subsets();
  static TestSetFamily explicit_sets(std::vector<SetMask> sets);

  /// Concrete sets for a field on a model, deduplicated, in generation order.
  std::vector<SetMask> generate(const Field& f, const CapacityModel& model) const;

  TestSetFamily with_diameter_cap(double cap) const;
  TestSetFamily plus(const TestSetFamily& other) const;
  TestSetFamily with_sets(std::vector<SetMask> sets) const;

  /// True when the family is every subset, so suprema over it are exact.
  bool exhaustive() const;
  std::string describe() const;

  struct Component {
    enum Kind { all, dyadic, levels, random } kind = all;
    int generations = 0;
    std::size_t count = 0;
    std::uint64_t seed = kDefaultSeed;
  };

 private:
  std::vector<Component> parts_;
  std::vector<SetMask> explicit_;
  std::optional<double> diameter_cap_;
};

constexpr std::size_t kMaxAllSubsetsAtoms = 20;

/// Every nonempty subset of an m-atom space, in bit-pattern order.
std::vector<SetMask> all_nonempty_subsets(std::size_t m);

}  // namespace capflow
