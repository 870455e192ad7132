#include <doctest.h>

#include <cmath>
#include <random>

#include "capflow/blocks.hpp"
#include "capflow/errors.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/multiplier.hpp"
#include "oracles.hpp"

using namespace capflow;

namespace {

CapacityOracle identity_model(std::vector<double> w) {
  CapacityParams p;
  p.s = 2.0;
  const auto m = w.size();
  return CapacityOracle(CapacityModel::finite(MeasureSpace::make(std::move(w)), MatrixKernel::identity(m)), p);
}

CapacityOracle random_finite(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::MatrixXd K(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) K(i, j) = i == j ? 1.0 : 0.5 * u(rng);
  std::vector<double> w(m);
  for (auto& x : w) x = 0.3 + u(rng);
  CapacityParams p;
  p.s = 2.0;
  return CapacityOracle(CapacityModel::finite(MeasureSpace::make(w), std::make_shared<const MatrixKernel>(K)), p);
}

Field tight(const SetMask& E, const LorentzExponents& e, const CapacityOracle& oracle) {
  auto chi = Field::indicator(oracle.space(), E);
  return chi.scaled(1.0 / (std::pow(oracle.value(E), 1.0 / e.q_conj()) * lorentz_norm(chi, e)));
}

}  // namespace

TEST_SUITE("blocks") {
  TEST_CASE("validation") {
    auto oracle = random_finite(5, 1);
    LorentzExponents e(2.0, 2.0);
    auto E = SetMask::from_bits(5, 0b01110);
    auto b = tight(E, e, oracle);
    auto blk = validate_block(b, E, e, BlockType::b, oracle);
    CHECK(std::fabs(blk.normalization - 1.0) <= 1e-12);
    CHECK(validate_block(Field::zeros(oracle.space()), E, e, BlockType::b, oracle).normalization == 0.0);
    CHECK_THROWS_AS(validate_block(b.scaled(2.0), E, e, BlockType::b, oracle), InvalidArgument);
    CHECK_THROWS_AS(validate_block(b, SetMask::from_bits(5, 0b00110), e, BlockType::b, oracle), InvalidArgument);
    CHECK(block_capacity_power(BlockType::script_b, {3.0, 1.5}) == doctest::Approx(2.0 / 3.0));
    CHECK(block_capacity_power(BlockType::b, {3.0, 1.5}) == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("constructive route on a tight block") {
    auto oracle = identity_model({1, 1, 1, 1, 1, 1});
    LorentzExponents e(2.0, 1.5);
    auto E = SetMask::from_bits(6, 0b011010);
    auto f = tight(E, e, oracle);
    WeightConfig cfg;
    auto w = potential_weight(E, cfg, oracle);
    auto d = block_norm_upper_constructive(f, e, w, oracle);
    CHECK(d.terms.size() == 1);
    CHECK(d.lambda_sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.residual <= 1e-9 * f.sup_abs());
    for (const auto& t : d.terms) CHECK(std::fabs(t.block.normalization - 1.0) <= 1e-12);

    auto zero = block_norm_upper_constructive(Field::zeros(oracle.space()), e, w, oracle);
    CHECK(zero.terms.empty());
    CHECK(zero.lambda_sum == 0.0);
  }

  TEST_CASE("constructive route reconstructs general fields") {
    auto oracle = random_finite(8, 2);
    LorentzExponents e(1.5, 3.0);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-3, 3);
    std::vector<double> v(8);
    for (auto& x : v) x = u(rng);
    Field f(oracle.space(), v);
    WeightConfig cfg;
    auto w = potential_weight(SetMask::from_bits(8, 0b00111100), cfg, oracle);
    auto d = block_norm_upper_constructive(f, e, w, oracle);
    CHECK(d.residual <= 1e-9 * f.sup_abs());
    CHECK(std::isfinite(d.lambda_sum));
    auto rebuilt = reconstruct(d, oracle.space());
    for (std::size_t i = 0; i < 8; ++i) CHECK(rebuilt[i] == doctest::Approx(v[i]).epsilon(1e-9));
  }

  TEST_CASE("greedy route") {
    auto oracle = random_finite(6, 3);
    LorentzExponents e(2.0, 2.0);
    auto E = SetMask::from_bits(6, 0b110001);
    auto f = tight(E, e, oracle);
    auto d = block_norm_upper_greedy(f, e, TestSetFamily::parse("levels"), oracle);
    CHECK(d.lambda_sum <= 1.0 + 1e-9);
    CHECK(d.residual <= 1e-9);
    auto zero = block_norm_upper_greedy(Field::zeros(oracle.space()), e, TestSetFamily::parse("levels"), oracle);
    CHECK(zero.lambda_sum == 0.0);

    Field partial(oracle.space(), {1, 2, 0, 0, 0, 0});
    auto miss = block_norm_upper_greedy(partial, e, TestSetFamily::explicit_sets({SetMask::from_bits(6, 0b000001)}), oracle);
    CHECK(miss.uncovered_cells == 1);
  }

  TEST_CASE("solidity transport") {
    auto oracle = random_finite(6, 4);
    LorentzExponents e(2.0, 2.0);
    Field f(oracle.space(), {2, -1, 3, 0.5, 0, 1});
    Field g(oracle.space(), {1, 1, -2, 0, 0, 0.25});
    auto d = block_norm_upper_greedy(f, e, TestSetFamily::all_subsets(), oracle);
    auto moved = transport(d, f, g, oracle);
    CHECK(moved.lambda_sum == d.lambda_sum);
    CHECK(moved.residual <= 1e-9);
    for (const auto& t : moved.terms) CHECK(t.block.normalization <= 1.0 + kBlockTolerance);
    CHECK_THROWS_AS(transport(d, g, f, oracle), InvalidArgument);
  }

  TEST_CASE("pairing against tight blocks") {
    auto oracle = random_finite(6, 5);
    LorentzExponents e(2.0, 2.0);
    Field f(oracle.space(), {1, -2, 0.5, 3, 1, 0});
    const double m = m_norm(f, e, TestSetFamily::all_subsets(), oracle).value;
    std::vector<PairingSample> corpus;
    for (std::uint64_t bits : {0b1ULL, 0b11ULL, 0b1010ULL, 0b111111ULL}) {
      auto E = SetMask::from_bits(6, bits);
      corpus.push_back({f, tight(E, e, oracle), 1.0, m});
    }
    corpus.push_back({Field::zeros(oracle.space()), tight(SetMask::from_bits(6, 1), e, oracle), 1.0, 0.0});
    auto rep = pairing_inequality_suite(corpus);
    CHECK(rep.ratios.size() == 4);
    CHECK(rep.skipped == 1);
    CHECK(rep.max_ratio <= 1.0 + 1e-5);

    auto none = pairing_inequality_suite({{Field::zeros(oracle.space()), f, 1.0, 0.0}});
    CHECK(none.max_ratio == 0.0);
  }

  TEST_CASE("trace norms") {
    auto oracle = identity_model({1, 1});
    AtomicMeasure mu{{3, -1}};
    auto est = trace_norm(mu, TestSetFamily::all_subsets(), oracle);
    CHECK(est.value == doctest::Approx(3.0).epsilon(1e-6));
    REQUIRE(est.witness_set.has_value());
    CHECK(est.witness_set->indices() == std::vector<std::size_t>{0});
    CHECK(trace_norm_inf_form(mu, oracle) == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(trace_norm(AtomicMeasure{{0, 0}}, TestSetFamily::all_subsets(), oracle).value == 0.0);
    CHECK(trace_norm_inf_form(AtomicMeasure{{0, 0}}, oracle) == 0.0);
    CHECK(trace_norm(AtomicMeasure{{0, 2.5}}, TestSetFamily::all_subsets(), oracle).value == doctest::Approx(2.5).epsilon(1e-6));

    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.2, 2), s(-3, 3);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> w(7), masses(7);
      for (auto& x : w) x = u(rng);
      for (auto& x : masses) x = s(rng);
      auto o = identity_model(w);
      const double ref = oracle::additive_trace(masses, w);
      CHECK(trace_norm(AtomicMeasure{masses}, TestSetFamily::all_subsets(), o).value == doctest::Approx(ref).epsilon(1e-6));
      CHECK(trace_norm_inf_form(AtomicMeasure{masses}, o) == doctest::Approx(ref).epsilon(1e-6));
    }
  }

  TEST_CASE("Kothe duals") {
    Field f(MeasureSpace::make({0.5, 1, 2, 1.5}), {1, -2, 0.5, 3});
    for (double p : {2.0, 3.0, 1.5}) {
      const double pc = p / (p - 1);
      KotheSpace X{KotheSpace::lorentz, {pc, pc}};
      auto est = kothe_dual_norm_bruteforce(f, X, nullptr);
      CHECK(est.value == doctest::Approx(lorentz_norm(f, {p, p})).epsilon(1e-6));
    }
    KotheSpace X{KotheSpace::lorentz, {2, 2}};
    CHECK(kothe_dual_norm_bruteforce(Field::zeros(f.space()), X, nullptr).value == 0.0);
    Field big(MeasureSpace::uniform(7, 1.0), std::vector<double>(7, 1.0));
    CHECK_THROWS_AS(kothe_dual_norm_bruteforce(big, X, nullptr), InvalidArgument);

    // Off the diagonal the dual norm stays within fixed multiples of ||f||_{p,q}.
    KotheSpace Y{KotheSpace::lorentz, {1.5, 3.0}};
    const double r = kothe_dual_norm_bruteforce(f, Y, nullptr).value / lorentz_norm(f, {3.0, 1.5});
    CHECK(r > 0.5);
    CHECK(r < 2.0);
  }
}
