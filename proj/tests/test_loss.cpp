#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "armhe/loss.hpp"

using namespace armhe;

namespace {

// independent oracle: d rho / d r by central difference
double drho_dr(double r, const LossParams& p, double h = 1e-6) {
  return (rho(r + h, p) - rho(r - h, p)) / (2.0 * h);
}

}  // namespace

TEST_CASE("rho basics") {
  CHECK(rho(0.0, {1.5, 1.0}) == 0.0);

  // even symmetry over a sampled grid
  for (double a : {1.1, 1.5, 1.9})
    for (double r = 0.1; r <= 10.0; r += 0.9)
      CHECK(rho(r, {a, 1.0}) == doctest::Approx(rho(-r, {a, 1.0})).epsilon(1e-14));

  // nonnegative
  for (double a : {1.1, 1.5, 1.9})
    for (double r = 0.0; r <= 20.0; r += 0.5) CHECK(rho(r, {a, 1.0}) >= 0.0);
}

TEST_CASE("rho equals the integral of sqrt(phi)") {
  // quadrature oracle on d rho / d r = sqrt(phi) for r > 0: Simpson's rule
  const LossParams p{1.5, 1.0};
  const int n = 2000;  // even
  const double h = 1.0 / n;
  double integral = std::sqrt(phi(0.0, p)) + std::sqrt(phi(1.0, p));
  for (int i = 1; i < n; ++i)
    integral += (i % 2 ? 4.0 : 2.0) * std::sqrt(phi(i * h, p));
  integral *= h / 3.0;
  CHECK(rho(1.0, p) == doctest::Approx(integral).epsilon(1e-10));
}

TEST_CASE("phi basics and limits") {
  CHECK(phi(0.0, {1.3, 1.0}) == 0.0);

  // alpha -> 2 limit is the quadratic r^2 / c^4
  for (double r = 0.0; r <= 5.0; r += 0.25)
    CHECK(phi(r, {kAlphaMax, 1.0}) == doctest::Approx(r * r).epsilon(1e-3));

  // phi = (d rho / d r)^2, finite-difference cross-check
  const double d = drho_dr(2.0, {1.5, 1.0});
  CHECK(phi(2.0, {1.5, 1.0}) == doctest::Approx(d * d).epsilon(1e-8));
}

TEST_CASE("phi equals squared rho slope on a grid") {
  for (double a : {1.05, 1.2, 1.5, 1.8, 1.95}) {
    for (int i = 1; i <= 100; ++i) {
      const double r = 0.1 * i;
      const LossParams p{a, 1.0};
      const double d = drho_dr(r, p);
      CHECK(phi(r, p) == doctest::Approx(d * d).epsilon(1e-8));
    }
  }
}

TEST_CASE("analytic gradients match finite differences") {
  const double h = 1e-6;
  CHECK(phi_grad_r(0.0, {1.4, 1.0}) == 0.0);
  {
    const LossParams p{1.4, 1.0};
    const double fd = (phi(1.7 + h, p) - phi(1.7 - h, p)) / (2.0 * h);
    CHECK(phi_grad_r(1.7, p) == doctest::Approx(fd).epsilon(1e-6));
  }
  {
    const double fd =
        (phi(3.0, {1.5 + h, 1.0}) - phi(3.0, {1.5 - h, 1.0})) / (2.0 * h);
    CHECK(phi_grad_alpha(3.0, {1.5, 1.0}) == doctest::Approx(fd).epsilon(1e-6));
  }
  // oddness of the r gradient
  for (double a : {1.1, 1.5, 1.9})
    for (double r = 0.2; r < 8.0; r += 0.7) {
      CHECK(phi_grad_r(r, {a, 1.0}) ==
            doctest::Approx(-phi_grad_r(-r, {a, 1.0})).epsilon(1e-14));
      CHECK(phi_grad_r(r, {a, 1.0}) > 0.0);
    }
}

TEST_CASE("phi is strictly increasing and unbounded in |r|") {
  for (double a : {1.1, 1.5, 1.9}) {
    const LossParams p{a, 1.0};
    double prev = 0.0;
    for (double lr = -3.0; lr <= 6.0; lr += 0.1) {
      const double r = std::pow(10.0, lr);
      const double v = phi(r, p);
      CHECK(v > prev);
      prev = v;
    }
    // asymptotic growth: phi(r) / r^(2a-2) approaches a positive constant
    const double e = 2.0 * a - 2.0;
    const double r3 = phi(1e3, p) / std::pow(1e3, e);
    const double r4 = phi(1e4, p) / std::pow(1e4, e);
    const double r5 = phi(1e5, p) / std::pow(1e5, e);
    CHECK(r4 == doctest::Approx(r5).epsilon(1e-2));
    CHECK(r3 > 0.0);
  }
}

TEST_CASE("phi monotone in alpha for super-scale residuals") {
  // for |r| >= c the loss grows with alpha on a sampled grid
  for (double c : {0.5, 1.0, 2.0}) {
    for (double ratio = 1.0; ratio <= 100.0; ratio *= 1.7) {
      const double r = ratio * c;
      double prev = phi(r, {kAlphaMin, c});
      for (double a = 1.05; a < 2.0; a += 0.05) {
        const double v = phi(r, {clamp_alpha(a), c});
        CHECK(v >= prev);
        prev = v;
      }
    }
  }
}

TEST_CASE("special cases") {
  CHECK(special_case_check(2.0).max_deviation < 1e-3);
  CHECK(special_case_check(1.0).max_deviation < 1e-12);
  CHECK(rho(0.0, {kAlphaMax, 1.0}) == 0.0);  // zero deviation at the origin
}

TEST_CASE("as-printed variant differs from the canonical form") {
  // the printed expression is bounded at alpha = 1 and is not the
  // antiderivative of sqrt(phi); it only has to exist for comparison
  const LossParams p{1.2, 1.0};
  CHECK(std::isfinite(rho_as_printed(3.0, p)));
  CHECK(rho_as_printed(3.0, p) != doctest::Approx(rho(3.0, p)));
}

TEST_CASE("LossParams validity") {
  CHECK(LossParams{1.5, 1.0}.valid());
  CHECK_FALSE(LossParams{1.0, 1.0}.valid());
  CHECK_FALSE(LossParams{2.0, 1.0}.valid());
  CHECK_FALSE(LossParams{1.5, 0.0}.valid());
  CHECK(clamp_alpha(0.3) == kAlphaMin);
  CHECK(clamp_alpha(2.5) == kAlphaMax);
}
