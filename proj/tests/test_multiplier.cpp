#include <doctest.h>

#include <cmath>
#include <random>

#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/multiplier.hpp"

using namespace capflow;

namespace {

CapacityOracle counting(std::size_t m) {
  CapacityParams p;
  p.s = 2.0;
  return CapacityOracle(CapacityModel::finite(MeasureSpace::uniform(m, 1.0), MatrixKernel::identity(m)), p);
}

CapacityOracle random_finite(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd K(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) K(i, j) = i == j ? 1.0 : 0.4 * u(rng);
  std::vector<double> w(m);
  for (auto& x : w) x = 0.3 + u(rng);
  CapacityParams p;
  p.s = 1.5;
  return CapacityOracle(CapacityModel::finite(MeasureSpace::make(w), std::make_shared<const MatrixKernel>(K)), p);
}

CapacityOracle line() {
  CapacityParams p;
  p.alpha = 0.5;
  p.s = 2.0;
  return CapacityOracle(CapacityModel::on_grid(make_grid(1, 12.0, 64), 0.5), p);
}

}  // namespace

TEST_SUITE("multiplier") {
  TEST_CASE("indicators on the counting model") {
    auto oracle = counting(4);
    auto A = SetMask::from_bits(4, 0b0110);
    auto chi = Field::indicator(oracle.space(), A);
    for (double p : {1.5, 2.0, 3.0}) {
      auto est = m_norm(chi, {p, p}, TestSetFamily::all_subsets(), oracle);
      CHECK(est.mode == EstimateMode::exact);
      CHECK(est.value == doctest::Approx(1.0).epsilon(1e-6));
      REQUIRE(est.witness_set.has_value());
      CHECK(est.witness_set->subset_of(A));
    }
  }

  TEST_CASE("single-set family is a lower bound") {
    auto oracle = random_finite(5, 4);
    auto A = SetMask::from_bits(5, 0b10011);
    auto chi = Field::indicator(oracle.space(), A);
    const double p = 3.0, q = 1.5;
    auto est = m_norm(chi, {p, q}, TestSetFamily::explicit_sets({A}), oracle);
    CHECK(est.mode == EstimateMode::lower_bound);
    const double expect = std::pow(p / q, 1 / q) * std::pow(A.measure(*oracle.space()), 1 / p) /
                          std::pow(oracle.value(A), 1 / q);
    CHECK(est.value == doctest::Approx(expect).epsilon(1e-12));
  }

  TEST_CASE("zero fields") {
    auto oracle = counting(3);
    auto zero = Field::zeros(oracle.space());
    auto fam = TestSetFamily::all_subsets();
    CHECK(m_norm(zero, {2, 2}, fam, oracle).value == 0.0);
    CHECK(script_m_norm(zero, {2, 3}, fam, oracle).value == 0.0);
    auto weak = weak_script_m_norm(zero, 2, fam, oracle);
    CHECK(weak.set_form.value == 0.0);
    CHECK(weak.level_form.value == 0.0);
    auto ch = char_m_via_weights(zero, {2, 2}, fam, WeightConfig{}, oracle);
    CHECK(ch.weights_sup == 0.0);
    CHECK(ch.sets.value == 0.0);
  }

  TEST_CASE("script form at p = q") {
    auto oracle = random_finite(6, 9);
    Field f(oracle.space(), {1, -2, 0.5, 3, 0, 1});
    auto fam = TestSetFamily::all_subsets();
    for (double p : {1.5, 2.5}) {
      CHECK(script_m_norm(f, {p, p}, fam, oracle).value == doctest::Approx(m_norm(f, {p, p}, fam, oracle).value).epsilon(1e-14));
    }
  }

  TEST_CASE("script spaces shrink as q decreases") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-2, 2);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      auto oracle = random_finite(6, 100 + seed);
      std::vector<double> v(6);
      for (auto& x : v) x = u(rng);
      Field f(oracle.space(), v);
      auto fam = TestSetFamily::all_subsets();
      for (auto [p, r, q] : {std::tuple{2.0, 1.5, 3.0}, {3.0, 2.0, 4.0}}) {
        CHECK(script_m_norm(f, {p, q}, fam, oracle).value <= script_m_norm(f, {p, r}, fam, oracle).value * (1 + 1e-12));
      }
    }
  }

  TEST_CASE("weak forms agree") {
    auto oracle = random_finite(5, 3);
    auto A = SetMask::from_bits(5, 0b01101);
    auto fam = TestSetFamily::all_subsets();
    auto rep = weak_script_m_norm(Field::indicator(oracle.space(), A).scaled(1.7), 2.0, fam, oracle);
    const double m = m_norm(Field::indicator(oracle.space(), A), {2, 2}, fam, oracle).value;
    CHECK(rep.set_form.value == doctest::Approx(1.7 * m).epsilon(1e-12));
    CHECK(rep.discrepancy <= 1e-12);

    Field f(oracle.space(), {3, 1, 2, 2, 0.5});
    CHECK(weak_script_m_norm(f, 1.5, fam, oracle).discrepancy <= 1e-9);
  }

  TEST_CASE("diameter localization") {
    auto oracle = line();
    std::vector<double> v(64, 0.0);
    for (int i = 30; i < 34; ++i) v[i] = 1.0 + 0.25 * i;
    Field f(oracle.space(), v);
    auto fam = TestSetFamily::parse("levels");
    auto rep = m_norm_local(f, {2, 2}, fam, oracle);
    CHECK(rep.local.value == doctest::Approx(rep.global.value).epsilon(1e-14));
    CHECK(rep.ratio == doctest::Approx(1.0));

    auto zero = m_norm_local(Field::zeros(oracle.space()), {2, 2}, fam, oracle);
    CHECK(zero.local.value == 0.0);
    CHECK(zero.global.value == 0.0);

    std::vector<double> two(64, 0.0);
    for (int i : {12, 13, 50, 51}) two[i] = 2.0;
    auto far = m_norm_local(Field(oracle.space(), two), {2, 2}, TestSetFamily::parse("levels+dyadic:2"), oracle);
    CHECK(far.ratio >= 1.0);
    CHECK(std::isfinite(far.ratio));
  }

  TEST_CASE("weight characterization per-set step") {
    auto oracle = line();
    std::vector<double> v(64, 0.0);
    for (int i = 26; i < 38; ++i) v[i] = 1.0 + std::sin(0.7 * i);
    Field f(oracle.space(), v);
    WeightConfig cfg;
    auto rep = char_m_via_weights(f, {2, 1.5}, TestSetFamily::parse("levels+dyadic:2"), cfg, oracle);
    CHECK(rep.per_set_checked > 0);
    CHECK(rep.per_set_violations == 0);
    CHECK(rep.ratio_sets_over_weights > 0.0);
    CHECK(std::isfinite(rep.ratio_weights_over_sets));
    CHECK_THROWS_AS(char_m_via_weights(f, {1.5, 2}, TestSetFamily::parse("levels"), cfg, oracle), InvalidArgument);
  }

  TEST_CASE("exponent checks") {
    auto oracle = counting(2);
    Field f(oracle.space(), {1, 1});
    CHECK_THROWS_AS(m_norm(f, {1, 2}, TestSetFamily::all_subsets(), oracle), InvalidArgument);
    CHECK_THROWS_AS(m_norm(f, {2, 2}, TestSetFamily::explicit_sets({}), oracle), InvalidArgument);
  }
}
