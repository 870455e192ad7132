#include <doctest.h>

#include <cmath>
#include <random>

#include "capflow/errors.hpp"
#include "capflow/grid.hpp"
#include "oracles.hpp"

using namespace capflow;

TEST_SUITE("grid") {
  TEST_CASE("construction") {
    auto g = make_grid(1, 4.0, 16);
    CHECK(g->spacing() == 0.25);
    CHECK(g->cells() == 16);
    auto g2 = make_grid(2, 8.0, 64);
    CHECK(g2->spacing() == 0.125);
    CHECK(g2->cells() == 4096);
    CHECK(g2->cell_measure() == doctest::Approx(0.125 * 0.125));
    CHECK_THROWS_AS(make_grid(1, 4.0, 6), InvalidArgument);
    CHECK_THROWS_AS(make_grid(3, 4.0, 8), InvalidArgument);
    CHECK_THROWS_AS(make_grid(1, -1.0, 8), InvalidArgument);
  }

  TEST_CASE("cell geometry") {
    auto g = make_grid(2, 4.0, 16);
    auto c = g->cell(15, 2);
    CHECK(g->axes(c)[0] == 15);
    CHECK(g->axes(c)[1] == 2);
    CHECK(g->point(c)[0] == doctest::Approx(1.875));
    CHECK(g->point(c)[1] == doctest::Approx(-1.375));
    CHECK(g->periodic_distance(g->cell(0, 0), g->cell(15, 0)) == doctest::Approx(0.25));
    CHECK(std::abs(g->wrap_offset(0, 15)) == 1);
    CHECK_THROWS_AS(make_grid(2, 4.0, 8), InvalidArgument);
  }

  TEST_CASE("box validation") {
    auto g = make_grid(1, 12.0, 64);
    CHECK_NOTHROW(validate_box(*g, 3.0));
    CHECK_THROWS_AS(validate_box(*g, 5.0), InvalidArgument);
  }

  TEST_CASE("kernel mass and evenness") {
    for (auto [dim, L, N, alpha] : {std::tuple{1, 12.0, 64, 0.5}, {1, 16.0, 256, 1.0}, {2, 10.0, 64, 1.0}, {2, 8.0, 32, 2.0}}) {
      auto g = make_grid(dim, L, N);
      auto k = bessel_kernel(*g, alpha);
      double mass = 0.0;
      for (double v : k.kernel) {
        mass += v * g->cell_measure();
        CHECK(v >= 0.0);
      }
      CHECK(std::fabs(mass - 1.0) <= 1e-10);
      for (int d = 0; d < N; ++d) CHECK(k.at(*g, d) == k.at(*g, -d));
      if (dim == 2) CHECK(k.at(*g, 3, 1) == k.at(*g, -3, -1));
    }
  }

  TEST_CASE("kernel matches the inverse transform") {
    const double L = 16.0, alpha = 1.0;
    const int N = 256;
    auto g = make_grid(1, L, N);
    auto k = bessel_kernel(*g, alpha);
    const double h = g->spacing();
    for (double x : {0.0, 1.0}) {
      const int d = static_cast<int>(std::lround(x / h));
      CHECK(std::fabs(k.at(*g, d) - oracle::band_limited_kernel(x, alpha, L, N)) <= 1e-4);
    }
    for (int d : {0, 1, 5, 16, 100}) CHECK(k.at(*g, d) == doctest::Approx(oracle::cosine_series_kernel(d, alpha, L, N)).epsilon(1e-9));
  }

  TEST_CASE("coarse grids are rejected for small alpha") {
    auto g = make_grid(2, 8.0, 32);
    CHECK_THROWS_AS(bessel_kernel(*g, 0.1), InvalidArgument);
  }

  TEST_CASE("convolution") {
    auto g = make_grid(1, 12.0, 64);
    auto k = bessel_kernel(*g, 0.5);
    auto one = convolve(*g, k, Field::constant(g->space(), 1.0));
    for (double v : one.values()) CHECK(std::fabs(v - 1.0) <= 1e-10);

    // A unit mass at cell c reproduces the kernel centered at c.
    const int c = 10;
    std::vector<double> delta(g->cells(), 0.0);
    delta[c] = 1.0 / g->cell_measure();
    auto shifted = convolve(*g, k, Field(g->space(), delta));
    for (int j = 0; j < g->points(); ++j) CHECK(shifted[j] == doctest::Approx(k.at(*g, j - c)).epsilon(1e-10));

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<double> a(64), b(64), ab(64);
    for (int j = 0; j < 64; ++j) {
      a[j] = u(rng);
      b[j] = u(rng);
      ab[j] = 2 * a[j] + 3 * b[j];
    }
    auto ca = convolve_raw(*g, k, a), cb = convolve_raw(*g, k, b), cab = convolve_raw(*g, k, ab);
    for (int j = 0; j < 64; ++j) CHECK(cab[j] == doctest::Approx(2 * ca[j] + 3 * cb[j]).epsilon(1e-12));
  }
}
