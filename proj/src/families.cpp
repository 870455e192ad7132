#include "capflow/families.hpp"

#include <cmath>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "capflow/errors.hpp"

namespace capflow {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

unsigned long long parse_unsigned(const std::string& tok) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(tok, &used, 0);
    if (used != tok.size()) throw InvalidArgument("bad number in family spec: " + tok);
    return v;
  } catch (const std::logic_error&) {
    throw InvalidArgument("bad number in family spec: " + tok);
  }
}

std::vector<SetMask> dyadic_cubes(const Grid& g, const SetMask& support, int generations) {
  std::vector<SetMask> out;
  for (int gen = 0; gen <= generations; ++gen) {
    const double side = std::ldexp(1.0, -gen);
    std::map<std::pair<long, long>, std::vector<std::size_t>> cubes;
    std::set<std::pair<long, long>> touched;
    for (std::size_t c = 0; c < g.cells(); ++c) {
      auto x = g.point(c);
      std::pair<long, long> key{static_cast<long>(std::floor(x[0] / side)),
                                g.dim() == 2 ? static_cast<long>(std::floor(x[1] / side)) : 0};
      cubes[key].push_back(c);
      if (support.contains(c)) touched.insert(key);
    }
    for (const auto& key : touched) out.push_back(SetMask::from_indices(g.cells(), cubes[key]));
  }
  return out;
}

std::vector<SetMask> random_sets(const Field& f, const CapacityModel& model, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<SetMask> out;
  const std::size_t n = model.size();
  if (!model.is_grid()) {
    std::bernoulli_distribution coin(0.5);
    while (out.size() < count) {
      std::vector<std::uint8_t> bits(n);
      for (auto& b : bits) b = coin(rng);
      SetMask s(std::move(bits));
      if (!s.is_empty()) out.push_back(std::move(s));
    }
    return out;
  }
  const auto& g = *model.grid;
  auto centers = f.support().indices();
  if (centers.empty()) {
    centers.resize(n);
    for (std::size_t i = 0; i < n; ++i) centers[i] = i;
  }
  std::uniform_int_distribution<std::size_t> pick(0, centers.size() - 1);
  std::uniform_int_distribution<int> balls(1, 3);
  std::uniform_real_distribution<double> radius(g.spacing(), 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    std::vector<std::uint8_t> bits(n, 0);
    const int nb = balls(rng);
    for (int b = 0; b < nb; ++b) {
      const std::size_t c = centers[pick(rng)];
      const double r = radius(rng);
      for (std::size_t i = 0; i < n; ++i)
        if (g.periodic_distance(c, i) <= r + 1e-12) bits[i] = 1;
    }
    out.emplace_back(std::move(bits));
  }
  return out;
}

}  // namespace

std::vector<SetMask> all_nonempty_subsets(std::size_t m) {
  if (m > kMaxAllSubsetsAtoms) throw InvalidArgument("all-subsets family is limited to 20 atoms");
  std::vector<SetMask> out;
  out.reserve((std::size_t{1} << m) - 1);
  for (std::uint64_t bits = 1; bits < (std::uint64_t{1} << m); ++bits) out.push_back(SetMask::from_bits(m, bits));
  return out;
}

TestSetFamily TestSetFamily::parse(const std::string& spec) {
  TestSetFamily fam;
  if (spec.empty()) throw InvalidArgument("empty family spec");
  for (const auto& part : split(spec, '+')) {
    auto f = split(part, ':');
    if (f.empty()) throw InvalidArgument("empty family component");
    Component c;
    if (f[0] == "all" && f.size() == 1) {
      c.kind = Component::all;
    } else if (f[0] == "levels" && f.size() == 1) {
      c.kind = Component::levels;
    } else if (f[0] == "dyadic" && f.size() == 2) {
      c.kind = Component::dyadic;
      c.generations = static_cast<int>(parse_unsigned(f[1]));
    } else if (f[0] == "random" && (f.size() == 2 || f.size() == 3)) {
      c.kind = Component::random;
      c.count = parse_unsigned(f[1]);
      if (f.size() == 3) c.seed = parse_unsigned(f[2]);
    } else if (f[0] == "diam" && f.size() == 2) {
      fam.diameter_cap_ = std::stod(f[1]);
      continue;
    } else {
      throw InvalidArgument("unknown family component '" + part + "'");
    }
    fam.parts_.push_back(c);
  }
  return fam;
}

TestSetFamily TestSetFamily::all_subsets() { return parse("all"); }

TestSetFamily TestSetFamily::explicit_sets(std::vector<SetMask> sets) {
  TestSetFamily fam;
  fam.explicit_ = std::move(sets);
  return fam;
}

TestSetFamily TestSetFamily::with_diameter_cap(double cap) const {
  TestSetFamily fam = *this;
  fam.diameter_cap_ = cap;
  return fam;
}

TestSetFamily TestSetFamily::plus(const TestSetFamily& other) const {
  TestSetFamily fam = *this;
  fam.parts_.insert(fam.parts_.end(), other.parts_.begin(), other.parts_.end());
  fam.explicit_.insert(fam.explicit_.end(), other.explicit_.begin(), other.explicit_.end());
  if (other.diameter_cap_) fam.diameter_cap_ = other.diameter_cap_;
  return fam;
}

TestSetFamily TestSetFamily::with_sets(std::vector<SetMask> sets) const {
  TestSetFamily fam = *this;
  fam.explicit_.insert(fam.explicit_.end(), std::make_move_iterator(sets.begin()), std::make_move_iterator(sets.end()));
  return fam;
}

bool TestSetFamily::exhaustive() const {
  if (diameter_cap_) return false;
  for (const auto& c : parts_)
    if (c.kind == Component::all) return true;
  return false;
}

std::string TestSetFamily::describe() const {
  std::string out;
  auto add = [&](const std::string& s) { out += (out.empty() ? "" : "+") + s; };
  for (const auto& c : parts_) {
    switch (c.kind) {
      case Component::all: add("all"); break;
      case Component::levels: add("levels"); break;
      case Component::dyadic: add("dyadic:" + std::to_string(c.generations)); break;
      case Component::random: add("random:" + std::to_string(c.count) + ":" + std::to_string(c.seed)); break;
    }
  }
  if (!explicit_.empty()) add("sets:" + std::to_string(explicit_.size()));
  if (diameter_cap_) {
    std::ostringstream d;
    d << *diameter_cap_;
    add("diam:" + d.str());
  }
  return out;
}

std::vector<SetMask> TestSetFamily::generate(const Field& f, const CapacityModel& model) const {
  if (f.size() != model.size()) throw InvalidArgument("field does not match model");
  if (diameter_cap_ && !model.is_grid()) throw InvalidArgument("diameter caps need a grid model");
  std::vector<SetMask> raw;
  for (const auto& c : parts_) {
    switch (c.kind) {
      case Component::all: {
        auto s = all_nonempty_subsets(model.size());
        raw.insert(raw.end(), s.begin(), s.end());
        break;
      }
      case Component::levels: {
        auto s = superlevel_sets(f);
        raw.insert(raw.end(), s.begin(), s.end());
        break;
      }
      case Component::dyadic: {
        if (!model.is_grid()) throw InvalidArgument("dyadic cubes need a grid model");
        auto s = dyadic_cubes(*model.grid, f.support(), c.generations);
        raw.insert(raw.end(), s.begin(), s.end());
        break;
      }
      case Component::random: {
        auto s = random_sets(f, model, c.count, c.seed);
        raw.insert(raw.end(), s.begin(), s.end());
        break;
      }
    }
  }
  raw.insert(raw.end(), explicit_.begin(), explicit_.end());

  std::vector<SetMask> out;
  std::set<std::string> seen;
  for (auto& s : raw) {
    if (s.size() != model.size()) throw InvalidArgument("family set does not match model");
    if (s.is_empty()) continue;
    if (diameter_cap_ && set_diameter(*model.grid, s) > *diameter_cap_ + 1e-12) continue;
    if (seen.insert(s.key()).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace capflow
