#include "capflow/measure.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "capflow/errors.hpp"

namespace capflow {

MeasureSpace::MeasureSpace(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("measure space needs at least one atom");
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) throw InvalidArgument("atom weights must be positive and finite");
    total_ += w;
  }
  if (!std::isfinite(total_)) throw InvalidArgument("total mass overflows");
}

SpacePtr MeasureSpace::make(std::vector<double> weights) {
  return std::make_shared<const MeasureSpace>(std::move(weights));
}

SpacePtr MeasureSpace::uniform(std::size_t atoms, double mass) {
  return make(std::vector<double>(atoms, mass));
}

bool MeasureSpace::same_as(const MeasureSpace& other) const {
  return this == &other || weights_ == other.weights_;
}

SetMask::SetMask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
  for (auto& b : bits_) {
    b = b ? 1 : 0;
    count_ += b;
  }
}

SetMask SetMask::empty(std::size_t atoms) { return SetMask(std::vector<std::uint8_t>(atoms, 0)); }
SetMask SetMask::full(std::size_t atoms) { return SetMask(std::vector<std::uint8_t>(atoms, 1)); }

SetMask SetMask::from_indices(std::size_t atoms, std::span<const std::size_t> indices) {
  std::vector<std::uint8_t> bits(atoms, 0);
  for (std::size_t i : indices) {
    if (i >= atoms) throw InvalidArgument("set index out of range");
    bits[i] = 1;
  }
  return SetMask(std::move(bits));
}

SetMask SetMask::from_bits(std::size_t atoms, std::uint64_t bits) {
  if (atoms > 64) throw InvalidArgument("bit pattern limited to 64 atoms");
  std::vector<std::uint8_t> v(atoms);
  for (std::size_t i = 0; i < atoms; ++i) v[i] = (bits >> i) & 1u;
  return SetMask(std::move(v));
}

std::vector<std::size_t> SetMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) out.push_back(i);
  return out;
}

double SetMask::measure(const MeasureSpace& space) const {
  if (space.size() != bits_.size()) throw InvalidArgument("set and space sizes differ");
  double m = 0.0;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i]) m += space.weight(i);
  return m;
}

SetMask SetMask::unite(const SetMask& other) const {
  if (other.size() != size()) throw InvalidArgument("set sizes differ");
  std::vector<std::uint8_t> v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = bits_[i] | other.bits_[i];
  return SetMask(std::move(v));
}

SetMask SetMask::intersect(const SetMask& other) const {
  if (other.size() != size()) throw InvalidArgument("set sizes differ");
  std::vector<std::uint8_t> v(size());
  for (std::size_t i = 0; i < size(); ++i) v[i] = bits_[i] & other.bits_[i];
  return SetMask(std::move(v));
}

bool SetMask::subset_of(const SetMask& other) const {
  if (other.size() != size()) throw InvalidArgument("set sizes differ");
  for (std::size_t i = 0; i < size(); ++i)
    if (bits_[i] && !other.bits_[i]) return false;
  return true;
}

std::string SetMask::key() const {
  std::string k((size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < size(); ++i)
    if (bits_[i]) k[i / 8] = static_cast<char>(k[i / 8] | (1 << (i % 8)));
  return k;
}

Field::Field(SpacePtr space, std::vector<double> values) : space_(std::move(space)), values_(std::move(values)) {
  if (!space_) throw InvalidArgument("field needs a space");
  if (values_.size() != space_->size()) throw InvalidArgument("field length does not match atom count");
  for (double v : values_)
    if (!std::isfinite(v)) throw InvalidArgument("field values must be finite");
}

Field Field::zeros(SpacePtr space) {
  auto n = space->size();
  return Field(std::move(space), std::vector<double>(n, 0.0));
}

Field Field::constant(SpacePtr space, double c) {
  auto n = space->size();
  return Field(std::move(space), std::vector<double>(n, c));
}

Field Field::indicator(SpacePtr space, const SetMask& set) {
  if (set.size() != space->size()) throw InvalidArgument("set and space sizes differ");
  std::vector<double> v(set.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = set.contains(i) ? 1.0 : 0.0;
  return Field(std::move(space), std::move(v));
}

Field Field::scaled(double c) const {
  std::vector<double> v(values_);
  for (auto& x : v) x *= c;
  return Field(space_, std::move(v));
}

Field Field::abs() const {
  std::vector<double> v(values_);
  for (auto& x : v) x = std::fabs(x);
  return Field(space_, std::move(v));
}

Field Field::restricted(const SetMask& set) const {
  if (set.size() != size()) throw InvalidArgument("set and field sizes differ");
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!set.contains(i)) v[i] = 0.0;
  return Field(space_, std::move(v));
}

Field Field::plus(const Field& other) const {
  require_same_space(other);
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += other.values_[i];
  return Field(space_, std::move(v));
}

Field Field::times(const Field& other) const {
  require_same_space(other);
  std::vector<double> v(values_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] *= other.values_[i];
  return Field(space_, std::move(v));
}

Field Field::pow_abs(double r) const {
  std::vector<double> v(values_);
  for (auto& x : v) x = x == 0.0 ? 0.0 : std::pow(std::fabs(x), r);
  return Field(space_, std::move(v));
}

double Field::sup_abs() const {
  double m = 0.0;
  for (double x : values_) m = std::max(m, std::fabs(x));
  return m;
}

bool Field::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

SetMask Field::support() const {
  std::vector<std::uint8_t> bits(values_.size());
  for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = values_[i] != 0.0;
  return SetMask(std::move(bits));
}

void Field::require_same_space(const Field& other) const {
  if (!space_->same_as(*other.space_)) throw InvalidArgument("fields live on different spaces");
}

LorentzExponents::LorentzExponents(double p, double q) : p_(p), q_(q) {
  if (!(p > 0.0) || !std::isfinite(p)) throw InvalidArgument("p must lie in (0, inf)");
  if (!(q > 0.0) || std::isnan(q)) throw InvalidArgument("q must lie in (0, inf]");
}

double conjugate_exponent(double r) {
  if (!(r > 1.0)) throw InvalidArgument("conjugate exponent needs r > 1");
  if (r == kInfinity) return 1.0;
  return r / (r - 1.0);
}

double LorentzExponents::p_conj() const { return conjugate_exponent(p_); }
double LorentzExponents::q_conj() const { return conjugate_exponent(q_); }

StepFunction::StepFunction(std::vector<double> breakpoints, std::vector<double> plateaus)
    : breakpoints_(std::move(breakpoints)), plateaus_(std::move(plateaus)) {
  if (plateaus_.size() != breakpoints_.size() + 1)
    throw InvalidArgument("step function needs one more plateau than breakpoints");
  for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
    if (breakpoints_[i] < 0.0 || (i > 0 && breakpoints_[i] <= breakpoints_[i - 1]))
      throw InvalidArgument("breakpoints must be ascending and nonnegative");
  }
  for (std::size_t i = 1; i < plateaus_.size(); ++i)
    if (plateaus_[i] > plateaus_[i - 1]) throw InvalidArgument("plateaus must be nonincreasing");
}

double StepFunction::operator()(double t) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), t);
  return plateaus_[static_cast<std::size_t>(it - breakpoints_.begin())];
}

std::vector<std::size_t> descending_order(const Field& f) {
  std::vector<std::size_t> idx(f.size());
  std::iota(idx.begin(), idx.end(), 0);
  auto vals = f.values();
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    double va = std::fabs(vals[a]), vb = std::fabs(vals[b]);
    if (va != vb) return va > vb;
    return a < b;
  });
  return idx;
}

std::vector<Level> levels_of(const Field& f) {
  auto order = descending_order(f);
  std::vector<Level> out;
  double mass = 0.0;
  const auto& space = f.measure();
  for (std::size_t r = 0; r < order.size(); ++r) {
    double v = std::fabs(f[order[r]]);
    if (v == 0.0) break;
    mass += space.weight(order[r]);
    if (!out.empty() && out.back().value == v) {
      out.back().cumulative_mass = mass;
      out.back().last_rank = r + 1;
    } else {
      out.push_back({v, mass, r, r + 1});
    }
  }
  return out;
}

std::vector<SetMask> superlevel_sets(const Field& f) {
  auto order = descending_order(f);
  auto lv = levels_of(f);
  std::vector<SetMask> out;
  out.reserve(lv.size());
  std::vector<std::uint8_t> bits(f.size(), 0);
  for (const auto& l : lv) {
    for (std::size_t r = l.first_rank; r < l.last_rank; ++r) bits[order[r]] = 1;
    out.emplace_back(bits);
  }
  return out;
}

StepFunction distribution_function(const Field& f) {
  auto lv = levels_of(f);
  // Breakpoints are the distinct values ascending; plateau before v_i is m_i.
  std::vector<double> bps, plats;
  for (auto it = lv.rbegin(); it != lv.rend(); ++it) {
    bps.push_back(it->value);
    plats.push_back(it->cumulative_mass);
  }
  plats.push_back(0.0);
  return StepFunction(std::move(bps), std::move(plats));
}

StepFunction decreasing_rearrangement(const Field& f) {
  auto lv = levels_of(f);
  std::vector<double> bps, plats;
  for (const auto& l : lv) {
    bps.push_back(l.cumulative_mass);
    plats.push_back(l.value);
  }
  plats.push_back(0.0);
  if (lv.empty()) return StepFunction({}, {0.0});
  return StepFunction(std::move(bps), std::move(plats));
}

}  // namespace capflow
