#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "pmrm/errors.hpp"
#include "pmrm/interpolation.hpp"

using namespace pmrm;

namespace {

const std::vector<double> kMonths{0, 6, 12, 18, 24, 36};
const std::vector<double> kPlacebo{19.6, 20.5, 20.9, 22.7, 23.8, 27.4};

// Dense-matrix natural spline oracle: build the full (n x n) system for the
// knot second derivatives and solve it by Gaussian elimination with pivoting.
std::vector<double> dense_second_derivatives(const std::vector<double>& x,
                                             const std::vector<double>& y) {
  const std::size_t n = x.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  a[0][0] = 1.0;
  a[n - 1][n - 1] = 1.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double h0 = x[i] - x[i - 1];
    const double h1 = x[i + 1] - x[i];
    a[i][i - 1] = h0 / 6.0;
    a[i][i] = (h0 + h1) / 3.0;
    a[i][i + 1] = h1 / 6.0;
    a[i][n] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
  }
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k <= n; ++k) a[r][k] -= f * a[c][k];
    }
  }
  std::vector<double> m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = a[i][n] / a[i][i];
  return m;
}

}  // namespace

TEST_CASE("construction errors") {
  const std::vector<double> one{0.0};
  CHECK_THROWS_AS(Interpolant(InterpolationKind::linear, one, one), ValidationError);
  const std::vector<double> flat{0.0, 1.0, 1.0};
  const std::vector<double> vals{0.0, 1.0, 2.0};
  CHECK_THROWS_AS(Interpolant(InterpolationKind::natural_cubic, flat, vals), ValidationError);
  const std::vector<double> two{0.0, 1.0};
  CHECK_THROWS_AS(Interpolant(InterpolationKind::linear, two, vals), ValidationError);
  CHECK(parse_interpolation_kind("natural_cubic") == InterpolationKind::natural_cubic);
  CHECK_THROWS_AS(parse_interpolation_kind("quintic"), ValidationError);
}

TEST_CASE("three-knot natural spline hand example") {
  const std::vector<double> x{0, 1, 2};
  const std::vector<double> y{0, 1, 0};
  const Interpolant s(InterpolationKind::natural_cubic, x, y);
  REQUIRE(s.second_derivatives().size() == 3);
  CHECK(s.second_derivatives()[1] == doctest::Approx(-3.0).epsilon(1e-12));
  CHECK(s(0.5) == doctest::Approx(0.6875).epsilon(1e-12));
  CHECK(s(3.0) == doctest::Approx(-1.5).epsilon(1e-12));
  CHECK(s.derivative(2.0) == doctest::Approx(-1.5).epsilon(1e-12));
}

TEST_CASE("every kind reproduces its knots") {
  for (auto kind : {InterpolationKind::zero_order, InterpolationKind::linear,
                    InterpolationKind::natural_cubic}) {
    const Interpolant f(kind, kMonths, kPlacebo);
    for (std::size_t k = 0; k < kMonths.size(); ++k) {
      CHECK(f(kMonths[k]) == doctest::Approx(kPlacebo[k]).epsilon(1e-12));
    }
  }
}

TEST_CASE("linear placebo curve between and beyond knots") {
  const Interpolant f(InterpolationKind::linear, kMonths, kPlacebo);
  CHECK(f(14.0) == doctest::Approx(21.5).epsilon(1e-12));
  CHECK(f(28.8) == doctest::Approx(25.24).epsilon(1e-12));
  CHECK(f(19.2) == doctest::Approx(22.92).epsilon(1e-12));
  // Boundary tangent continuation on both sides.
  CHECK(f(-6.0) == doctest::Approx(18.7).epsilon(1e-12));
  CHECK(f(48.0) == doctest::Approx(27.4 + 12.0 * 0.3).epsilon(1e-12));
}

TEST_CASE("zero-order holds the left knot value") {
  const Interpolant f(InterpolationKind::zero_order, kMonths, kPlacebo);
  CHECK(f(5.999) == doctest::Approx(19.6));
  CHECK(f(6.0) == doctest::Approx(20.5));
  CHECK(f(100.0) == doctest::Approx(27.4));
  CHECK(f(-3.0) == doctest::Approx(19.6));
}

TEST_CASE("natural spline matches a dense-solve oracle") {
  const auto m = dense_second_derivatives(kMonths, kPlacebo);
  const Interpolant f(InterpolationKind::natural_cubic, kMonths, kPlacebo);
  for (std::size_t i = 0; i < m.size(); ++i) {
    CHECK(f.second_derivatives()[i] == doctest::Approx(m[i]).epsilon(1e-10));
  }
}

TEST_CASE("natural spline is C2 and has zero end curvature") {
  const Interpolant f(InterpolationKind::natural_cubic, kMonths, kPlacebo);
  const double h = 1e-4;
  for (double t : {6.0, 12.0, 18.0, 24.0}) {
    const double left = (f(t) - f(t - h)) / h;
    const double right = (f(t + h) - f(t)) / h;
    CHECK(left == doctest::Approx(right).epsilon(1e-3));
  }
  CHECK(f.second_derivatives().front() == 0.0);
  CHECK(f.second_derivatives().back() == 0.0);
  // Linear continuation: constant slope outside the span.
  CHECK(f.derivative(40.0) == doctest::Approx(f.derivative(60.0)).epsilon(1e-12));
  CHECK(f.derivative(-1.0) == doctest::Approx(f.derivative(-20.0)).epsilon(1e-12));
}

TEST_CASE("interpolants are monotone for monotone data under linear interpolation") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> step(0.1, 2.0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> x{0.0}, y{1.0};
    for (int k = 0; k < 6; ++k) {
      x.push_back(x.back() + step(rng));
      y.push_back(y.back() + step(rng));
    }
    const Interpolant f(InterpolationKind::linear, x, y);
    double prev = f(x.front() - 1.0);
    for (double t = x.front() - 1.0; t <= x.back() + 1.0; t += 0.05) {
      const double v = f(t);
      CHECK(v >= prev - 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("tridiagonal solver matches a direct product") {
  const std::vector<double> sub{0.0, 1.0, 2.0, 0.5};
  const std::vector<double> diag{4.0, 5.0, 6.0, 3.0};
  const std::vector<double> sup{1.0, 0.5, 1.5, 0.0};
  const std::vector<double> x{1.0, -2.0, 3.0, 0.25};
  std::vector<double> rhs(4);
  for (std::size_t i = 0; i < 4; ++i) {
    rhs[i] = diag[i] * x[i];
    if (i > 0) rhs[i] += sub[i] * x[i - 1];
    if (i < 3) rhs[i] += sup[i] * x[i + 1];
  }
  solve_tridiagonal(sub, diag, sup, rhs);
  for (std::size_t i = 0; i < 4; ++i) CHECK(rhs[i] == doctest::Approx(x[i]).epsilon(1e-12));
}
