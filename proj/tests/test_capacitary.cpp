#include <doctest.h>

#include <cmath>
#include <sstream>

#include "capflow/capacitary.hpp"
#include "capflow/errors.hpp"
#include "capflow/families.hpp"
#include "capflow/lorentz.hpp"
#include "capflow/model_io.hpp"

using namespace capflow;

namespace {

CapacityOracle counting(std::size_t m, double s = 2.0) {
  CapacityParams p;
  p.s = s;
  return CapacityOracle(CapacityModel::finite(MeasureSpace::uniform(m, 1.0), MatrixKernel::identity(m)), p);
}

CapacityOracle grid_oracle(int dim, double L, int N, double alpha, double s) {
  CapacityParams p;
  p.alpha = alpha;
  p.s = s;
  return CapacityOracle(CapacityModel::on_grid(make_grid(dim, L, N), alpha), p);
}

}  // namespace

TEST_SUITE("capacitary") {
  TEST_CASE("l1c norm layer cake") {
    auto oracle = counting(2);
    auto est = l1c_norm(Field(oracle.space(), {2, 1}), oracle);
    CHECK(est.value == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(est.lower <= est.value);
    CHECK(est.value <= est.upper);
    CHECK(l1c_norm(Field::zeros(oracle.space()), oracle).value == 0.0);
    CHECK_THROWS_AS(l1c_norm(Field(oracle.space(), {-1, 1}), oracle), InvalidArgument);
  }

  TEST_CASE("l1c of a scaled indicator") {
    auto oracle = grid_oracle(1, 12.0, 64, 0.5, 2.0);
    auto E = SetMask::from_indices(64, std::vector<std::size_t>{20, 21, 22, 40});
    auto est = l1c_norm(Field::indicator(oracle.space(), E).scaled(2.5), oracle);
    CHECK(est.value == doctest::Approx(2.5 * oracle.value(E)).epsilon(1e-12));
  }

  TEST_CASE("quantized l1c brackets the exact value") {
    auto oracle = counting(10);
    std::vector<double> v(10);
    for (int i = 0; i < 10; ++i) v[i] = 1.0 + 0.37 * i;
    Field w(oracle.space(), v);
    const double exact = l1c_norm(w, oracle).value;
    auto q = l1c_norm(w, oracle, 4);
    CHECK(q.mode == EstimateMode::upper_bound);
    CHECK(q.lower <= exact * (1 + 1e-9));
    CHECK(exact <= q.upper * (1 + 1e-9));
  }

  TEST_CASE("capacitary lorentz norm") {
    auto oracle = grid_oracle(1, 12.0, 64, 0.5, 2.0);
    auto E = SetMask::from_indices(64, std::vector<std::size_t>{30, 31, 32, 33});
    auto chi = Field::indicator(oracle.space(), E);
    CHECK(capacitary_lorentz_norm(chi, {1, 1}, oracle).value == doctest::Approx(oracle.value(E)).epsilon(1e-12));
    CHECK(capacitary_lorentz_norm(chi, {2, kInfinity}, oracle).value == doctest::Approx(std::sqrt(oracle.value(E))).epsilon(1e-12));

    auto c = counting(3);
    Field f(c.space(), {3, 1, 2});
    // Counting capacity turns this into the Lorentz norm for unit weights.
    auto est = capacitary_lorentz_norm(f, {2, 1}, c);
    const double direct = lorentz_norm(f, {2, 1});
    CHECK(est.value == doctest::Approx(direct).epsilon(1e-6));
  }

  TEST_CASE("strichartz cover") {
    auto oracle = grid_oracle(1, 12.0, 64, 0.5, 2.0);
    const auto& g = *oracle.model().grid;
    std::vector<std::size_t> close{34, 35, 36};
    auto inside = strichartz_check(SetMask::from_indices(64, close), oracle);
    CHECK(inside.pieces == 1);
    CHECK(inside.ratio == doctest::Approx(1.0).epsilon(1e-12));

    std::vector<std::size_t> far{10, 54};
    auto E = SetMask::from_indices(64, far);
    auto split = strichartz_check(E, oracle);
    CHECK(split.pieces == 2);
    CHECK(split.subadditive);
    CHECK(split.piece_sum_upper >= split.capacity_lower);

    std::size_t covered = 0;
    for (const auto& piece : strichartz_cover(g, E)) covered += piece.count();
    CHECK(covered == 2);
  }

  TEST_CASE("lebesgue lower bound window") {
    auto critical = grid_oracle(1, 12.0, 64, 0.5, 2.0);
    auto E = SetMask::from_indices(64, std::vector<std::size_t>{30, 31, 32, 33});
    auto rep = lebesgue_lower_bound_check(E, 0.5, critical);
    CHECK_FALSE(rep.skipped);
    CHECK(rep.ratio == doctest::Approx(std::pow(4 * 12.0 / 64, 0.5) / critical.value(E)));
    CHECK(lebesgue_lower_bound_check(SetMask::empty(64), 0.5, critical).skipped);
    CHECK_THROWS_AS(lebesgue_lower_bound_check(E, 0.0, critical), InvalidArgument);
    CHECK_THROWS_AS(lebesgue_lower_bound_check(E, 1.5, critical), InvalidArgument);

    auto sub = grid_oracle(1, 12.0, 64, 0.5, 1.5);
    CHECK_THROWS_AS(lebesgue_lower_bound_check(E, 0.2, sub), InvalidArgument);
    CHECK_NOTHROW(lebesgue_lower_bound_check(E, 0.25, sub));
  }
}

TEST_SUITE("families") {
  TEST_CASE("grammar") {
    CHECK(TestSetFamily::parse("all").exhaustive());
    CHECK_FALSE(TestSetFamily::parse("levels+dyadic:2").exhaustive());
    CHECK_NOTHROW(TestSetFamily::parse("random:10:7+levels+diam:1.5"));
    CHECK_THROWS_AS(TestSetFamily::parse(""), InvalidArgument);
    CHECK_THROWS_AS(TestSetFamily::parse("dyadic"), InvalidArgument);
    CHECK_THROWS_AS(TestSetFamily::parse("balls:3"), InvalidArgument);
  }

  TEST_CASE("generation") {
    auto oracle = counting(4);
    Field f(oracle.space(), {1, 0, 2, 2});
    auto all = TestSetFamily::all_subsets().generate(f, oracle.model());
    CHECK(all.size() == 15);
    auto levels = TestSetFamily::parse("levels").generate(f, oracle.model());
    CHECK(levels.size() == 2);
    CHECK(all_nonempty_subsets(3).size() == 7);
    CHECK_THROWS_AS(all_nonempty_subsets(kMaxAllSubsetsAtoms + 1), InvalidArgument);

    auto r1 = TestSetFamily::parse("random:5:9").generate(f, oracle.model());
    auto r2 = TestSetFamily::parse("random:5:9").generate(f, oracle.model());
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) CHECK(r1[i] == r2[i]);
  }

  TEST_CASE("diameter cap on grids") {
    auto oracle = grid_oracle(1, 12.0, 64, 0.5, 2.0);
    std::vector<double> v(64, 0.0);
    for (int i = 20; i < 44; ++i) v[i] = 1.0 + (i % 5);
    Field f(oracle.space(), v);
    auto sets = TestSetFamily::parse("dyadic:3+levels+diam:1").generate(f, oracle.model());
    CHECK_FALSE(sets.empty());
    for (const auto& s : sets) CHECK(set_diameter(*oracle.model().grid, s) <= 1.0 + 1e-12);
  }
}

TEST_SUITE("model-io") {
  TEST_CASE("finite model round trip") {
    std::istringstream in("atoms 3\n1 2 0.5\nkernel matrix\n1 0.5 0\n0.5 1 0.25\n0 0.25 1\nfield f\n1 -2 3\n");
    auto m = read_finite_model(in);
    CHECK(m.space->size() == 3);
    CHECK(m.kernel->matrix()(1, 2) == 0.25);
    CHECK(m.field("f")[1] == -2.0);
    std::ostringstream out;
    write_finite_model(out, m);
    std::istringstream back(out.str());
    auto m2 = read_finite_model(back);
    CHECK(m2.space->weight(2) == 0.5);
    CHECK(m2.kernel->matrix() == m.kernel->matrix());
    CHECK(m2.field("f")[2] == 3.0);
    CHECK_THROWS_AS(m.field("g"), InvalidArgument);
  }

  TEST_CASE("malformed inputs") {
    std::istringstream a("atoms 2\n1\n");
    CHECK_THROWS_AS(read_finite_model(a), FormatError);
    std::istringstream b("atoms 2\n1 1\nkernel banded\n");
    CHECK_THROWS_AS(read_finite_model(b), FormatError);
    std::istringstream c("grids n=1 N=64 L=12\n");
    CHECK_THROWS_AS(read_grid_model(c), FormatError);
    CHECK_THROWS_AS(load_model("/nonexistent/model.txt"), FormatError);
  }

  TEST_CASE("grid fields") {
    std::istringstream gm("grid n=2 N=64 L=10\n");
    auto g = read_grid_model(gm);
    CHECK(g.dim == 2);
    CHECK(g.points == 64);
    CHECK(g.length == 10.0);

    auto grid = make_grid(2, 4.0, 16);
    std::vector<double> v(grid->cells());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * static_cast<double>(i);
    std::ostringstream out;
    write_grid_field(out, *grid, Field(grid->space(), v), "ramp");
    std::istringstream in(out.str());
    auto f = read_grid_field(in);
    CHECK(f.name == "ramp");
    CHECK(f.dim == 2);
    CHECK(f.points == 16);
    CHECK(f.values == v);
  }
}
