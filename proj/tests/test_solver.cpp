#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "armhe/loss.hpp"
#include "armhe/solver.hpp"

using namespace armhe;

namespace {

BoxedProblem quadratic(const Eigen::VectorXd& center, double lo, double hi) {
  BoxedProblem p;
  p.objective = [center](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd d = x - center;
    if (g) *g = 2.0 * d;
    return d.squaredNorm();
  };
  const auto n = center.size();
  p.lower = Eigen::VectorXd::Constant(n, lo);
  p.upper = Eigen::VectorXd::Constant(n, hi);
  p.x0 = Eigen::VectorXd::Zero(n);
  return p;
}

}  // namespace

TEST_CASE("quadratic with interior minimizer") {
  Eigen::VectorXd c(3);
  c << 0.5, -0.3, 0.9;
  const SolveReport r = minimize_boxed(quadratic(c, -1.0, 1.0));
  CHECK(r.converged);
  CHECK((r.x_star - c).lpNorm<Eigen::Infinity>() < 1e-7);
  CHECK(r.f_star < 1e-12);
}

TEST_CASE("quadratic clamped at the box") {
  Eigen::VectorXd c(2);
  c << 3.0, -5.0;
  const SolveReport r = minimize_boxed(quadratic(c, -1.0, 1.0));
  CHECK(r.converged);
  CHECK(r.x_star[0] == doctest::Approx(1.0));
  CHECK(r.x_star[1] == doctest::Approx(-1.0));
  CHECK(r.f_star == doctest::Approx(4.0 + 16.0));
}

TEST_CASE("Rosenbrock inside a box") {
  BoxedProblem p;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (g) {
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    return a * a + 100.0 * b * b;
  };
  p.lower = Eigen::VectorXd::Constant(2, -2.0);
  p.upper = Eigen::VectorXd::Constant(2, 2.0);
  p.x0 = Eigen::VectorXd::Zero(2);
  p.x0 << -1.2, 1.0;
  SolverOptions opt;
  opt.max_iter = 2000;
  const SolveReport r = minimize_boxed(p, opt);
  CHECK(r.f_star < 1e-6);
  CHECK(r.x_star[0] == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("deterministic across repeated runs") {
  Eigen::VectorXd c(4);
  c << 0.1, 0.2, 0.3, 0.4;
  const SolveReport a = minimize_boxed(quadratic(c, -1.0, 1.0));
  const SolveReport b = minimize_boxed(quadratic(c, -1.0, 1.0));
  CHECK(a.iterations == b.iterations);
  CHECK((a.x_star - b.x_star).norm() == 0.0);
  CHECK(a.f_star == b.f_star);
}

TEST_CASE("larger quadratic converges well under the iteration cap") {
  const int n = 40;
  Eigen::VectorXd c(n);
  for (int i = 0; i < n; ++i) c[i] = std::sin(0.37 * i) * 0.8;
  BoxedProblem p;
  // ill-conditioned diagonal quadratic
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = 1.0 + 9.0 * i / (n - 1.0);
  p.objective = [c, d](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const Eigen::VectorXd e = x - c;
    if (g) *g = 2.0 * d.cwiseProduct(e);
    return e.dot(d.cwiseProduct(e));
  };
  p.lower = Eigen::VectorXd::Constant(n, -1.0);
  p.upper = Eigen::VectorXd::Constant(n, 1.0);
  p.x0 = Eigen::VectorXd::Zero(n);
  const SolveReport r = minimize_boxed(p);
  CHECK(r.converged);
  CHECK(r.iterations <= 10 * n);
  CHECK((r.x_star - c).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("objective sequence never increases") {
  BoxedProblem p;
  std::vector<double> seen;
  p.objective = [&seen](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    const double f = std::pow(x[0] - 0.3, 4) + x[1] * x[1];
    if (g) {
      (*g)[0] = 4.0 * std::pow(x[0] - 0.3, 3);
      (*g)[1] = 2.0 * x[1];
      seen.push_back(f);  // accepted iterates carry a gradient evaluation
    }
    return f;
  };
  p.lower = Eigen::VectorXd::Constant(2, -2.0);
  p.upper = Eigen::VectorXd::Constant(2, 2.0);
  p.x0 = Eigen::VectorXd::Constant(2, 1.5);
  minimize_boxed(p);
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i] <= seen[i - 1] + 1e-15);
}

TEST_CASE("non-finite objective raises") {
  BoxedProblem p;
  p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) (*g)[0] = -1.0;
    return x[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : -x[0];
  };
  p.lower = Eigen::VectorXd::Constant(1, 0.0);
  p.upper = Eigen::VectorXd::Constant(1, 1.0);
  p.x0 = Eigen::VectorXd::Constant(1, 0.0);
  CHECK_THROWS_AS(minimize_boxed(p), NonFiniteObjective);
}

TEST_CASE("scalar minimizer on smooth convex functions") {
  {
    const ScalarResult r =
        minimize_scalar([](double x) { return (x - 0.7) * (x - 0.7); }, 0.0, 2.0);
    CHECK(r.x_star == doctest::Approx(0.7).epsilon(1e-6));
    CHECK(r.f_star < 1e-10);
  }
  {
    // minimizer at the left boundary
    const ScalarResult r =
        minimize_scalar([](double x) { return std::exp(x); }, -1.0, 1.0);
    CHECK(r.x_star == doctest::Approx(-1.0).epsilon(1e-4));
  }
  {
    // minimizer at the right boundary
    const ScalarResult r =
        minimize_scalar([](double x) { return -x; }, 2.0, 5.0);
    CHECK(r.x_star == doctest::Approx(5.0).epsilon(1e-4));
  }
}

TEST_CASE("scalar minimizer matches a dense grid on the shape objective") {
  // objective of the per-entry shape subproblem for a handful of residuals
  for (double v : {0.0, 0.3, 1.0, 3.0, 10.0}) {
    const double gamma = 2.0;
    const auto f = [v, gamma](double a) {
      return phi(v, {clamp_alpha(a), 1.0}) + gamma * (2.0 - a) * (2.0 - a);
    };
    const ScalarResult r = minimize_scalar(f, kAlphaMin, kAlphaMax, 1e-8);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100000; ++i) {
      const double a = kAlphaMin + (kAlphaMax - kAlphaMin) * i / 100000.0;
      best = std::min(best, f(a));
    }
    CHECK(r.f_star <= best + 1e-8);
  }
}
