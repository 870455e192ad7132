#include <doctest.h>

#include <cmath>
#include <random>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/measure.hpp"
#include "oracles.hpp"

using namespace capflow;

namespace {

Field field(std::vector<double> v, std::vector<double> w) { return Field(MeasureSpace::make(std::move(w)), std::move(v)); }

}  // namespace

TEST_SUITE("measure") {
  TEST_CASE("distribution of (3,4) on unit weights") {
    auto d = distribution_function(field({3, 4}, {1, 1}));
    CHECK(d(0.0) == 2.0);
    CHECK(d(2.999) == 2.0);
    CHECK(d(3.0) == 1.0);
    CHECK(d(3.5) == 1.0);
    CHECK(d(4.0) == 0.0);
    CHECK(d(100.0) == 0.0);
  }

  TEST_CASE("distribution with repeated values and weights") {
    auto d = distribution_function(field({2, 1, 2}, {1, 2, 3}));
    CHECK(d(0.5) == 6.0);
    CHECK(d(1.0) == 4.0);
    CHECK(d(1.9) == 4.0);
    CHECK(d(2.0) == 0.0);
  }

  TEST_CASE("zero field has zero distribution") {
    auto d = distribution_function(field({0, 0, 0}, {1, 1, 1}));
    CHECK(d(0.0) == 0.0);
    CHECK(d(1.0) == 0.0);
    CHECK(levels_of(field({0, 0}, {1, 1})).empty());
  }

  TEST_CASE("rearrangement is equimeasurable") {
    auto f = field({1, -5, 2, 5}, {0.5, 1, 2, 0.25});
    auto r = decreasing_rearrangement(f);
    CHECK(r(0.0) == 5.0);
    CHECK(r(1.2) == 5.0);
    CHECK(r(1.25) == 2.0);
    CHECK(r(3.2) == 2.0);
    CHECK(r(3.3) == 1.0);
    CHECK(r(3.75) == 0.0);
  }

  TEST_CASE("superlevel sets are nested") {
    auto f = field({1, 3, 2, 3}, {1, 1, 1, 1});
    auto sets = superlevel_sets(f);
    REQUIRE(sets.size() == 3);
    CHECK(sets[0].count() == 2);
    CHECK(sets[0].subset_of(sets[1]));
    CHECK(sets[1].subset_of(sets[2]));
  }

  TEST_CASE("mask helpers") {
    auto space = MeasureSpace::make({1, 2, 3, 4});
    auto a = SetMask::from_bits(4, 0b0101), b = SetMask::from_bits(4, 0b0011);
    CHECK(a.measure(*space) == 4.0);
    CHECK(a.unite(b).count() == 3);
    CHECK(a.intersect(b).indices() == std::vector<std::size_t>{0});
    CHECK_FALSE(a.subset_of(b));
    CHECK_THROWS_AS(MeasureSpace::make({1, 0}), InvalidArgument);
  }

  TEST_CASE("fields on different spaces do not mix") {
    auto f = field({1, 2}, {1, 1});
    auto g = field({1, 2}, {1, 2});
    CHECK_THROWS_AS(f.plus(g), InvalidArgument);
  }
}

TEST_SUITE("lorentz") {
  TEST_CASE("indicator closed form") {
    auto f = Field::indicator(MeasureSpace::make({0.5, 1.5, 2}), SetMask::from_bits(3, 0b011));
    for (auto [p, q] : {std::pair{2.0, 2.0}, {1.5, 3.0}, {3.0, 1.0}}) {
      CHECK(lorentz_norm(f, {p, q}) == doctest::Approx(std::pow(p / q, 1.0 / q) * std::pow(2.0, 1.0 / p)).epsilon(1e-14));
    }
  }

  TEST_CASE("p = q = 2 is the euclidean norm") { CHECK(lorentz_norm(field({3, 4}, {1, 1}), {2, 2}) == doctest::Approx(5.0).epsilon(1e-15)); }

  TEST_CASE("p = 2, q = 1 on (2,1)") {
    CHECK(lorentz_norm(field({2, 1}, {1, 1}), {2, 1}) == doctest::Approx(2.0 * (std::sqrt(2.0) + 1.0)).epsilon(1e-14));
  }

  TEST_CASE("weak norm") {
    CHECK(weak_lorentz_norm(field({2, 1}, {1, 1}), 2) == doctest::Approx(2.0));
    CHECK(weak_lorentz_norm(field({0, 3, 3}, {1, 2, 2}), 2) == doctest::Approx(3.0 * 2.0));
    CHECK(weak_lorentz_norm(field({0, 0}, {1, 1}), 2) == 0.0);
  }

  TEST_CASE("agrees with the quadrature oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> val(-3, 3), wt(0.1, 2);
    for (int trial = 0; trial < 40; ++trial) {
      std::vector<double> v(1 + trial % 9), w(v.size());
      for (auto& x : v) x = trial % 3 == 0 ? std::round(val(rng)) : val(rng);
      for (auto& x : w) x = wt(rng);
      auto f = field(v, w);
      for (auto [p, q] : {std::pair{2.0, 2.0}, {1.5, 0.75}, {3.0, 1.5}, {0.8, 4.0}}) {
        if (f.is_zero()) continue;
        CHECK(lorentz_norm(f, {p, q}) == doctest::Approx(oracle::lorentz(v, w, p, q)).epsilon(1e-9));
      }
      CHECK(weak_lorentz_norm(f, 1.7) == doctest::Approx(oracle::weak_lorentz(v, w, 1.7)).epsilon(1e-14));
    }
  }

  TEST_CASE("gamma norm") {
    auto chi = Field::indicator(MeasureSpace::make({1}), SetMask::full(1));
    CHECK(gamma_norm(chi, {2, 2}, 1) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
    CHECK(gamma_norm(chi, {2, 2}, 1) == doctest::Approx(oracle::gamma({1}, {1}, 2, 2, 1)).epsilon(1e-10));
    CHECK(gamma_norm(field({0, 0}, {1, 1}), {2, 2}, 1) == 0.0);

    std::vector<double> v{3, -1, 0.5, 2, 2}, w{0.5, 1, 2, 0.25, 1};
    auto f = field(v, w);
    for (auto [p, q, r] : {std::tuple{2.0, 2.0, 1.0}, {3.0, 1.5, 0.5}, {1.5, 4.0, 1.0}}) {
      const double g = gamma_norm(f, {p, q}, r), n = lorentz_norm(f, {p, q});
      CHECK(g == doctest::Approx(oracle::gamma(v, w, p, q, r)).epsilon(1e-9));
      CHECK(n <= g + 1e-12);
      CHECK(g <= std::pow(p / (p - r), 1.0 / r) * n + 1e-6);
    }
    CHECK_THROWS_AS(gamma_norm(f, {2, 2}, 2.5), InvalidArgument);
  }

  TEST_CASE("power identity") {
    CHECK(power_identity_residual(field({3, 4}, {1, 1}), {1, 1}, 2) == 0.0);
    CHECK(lorentz_norm(field({9, 16}, {1, 1}), {1, 1}) == doctest::Approx(25.0));
    CHECK(power_identity_residual(field({2, 1}, {1, 1}), {2, 1}, 0.5) <= 1e-12);
    CHECK(power_identity_residual(field({0, 0}, {1, 1}), {2, 2}, 3) == 0.0);
  }

  TEST_CASE("pairing") {
    CHECK(pairing(field({1, 2}, {1, 1}), field({3, -1}, {1, 1})) == doctest::Approx(1.0));
    auto space = MeasureSpace::make({0.5, 2, 1});
    auto chi = Field::indicator(space, SetMask::from_bits(3, 0b110));
    CHECK(pairing(chi, chi) == doctest::Approx(3.0));
    CHECK(pairing_abs(field({1, -2}, {1, 1}), field({3, 1}, {1, 1})) == doctest::Approx(5.0));
  }

  TEST_CASE("exponent validation") {
    CHECK_THROWS_AS(LorentzExponents(0, 2), InvalidArgument);
    CHECK_THROWS_AS(LorentzExponents(2, -1), InvalidArgument);
    CHECK(LorentzExponents(2, kInfinity).weak());
    CHECK(LorentzExponents(3, 1.5).p_conj() == doctest::Approx(1.5));
  }
}
