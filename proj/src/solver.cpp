#include "armhe/solver.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace armhe {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                        const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

void check_finite(double f, const Eigen::VectorXd* g) {
  if (!std::isfinite(f))
    throw NonFiniteObjective("objective returned non-finite value");
  if (g && !g->allFinite())
    throw NonFiniteObjective("gradient returned non-finite value");
}

}  // namespace

SolveReport minimize_boxed(const BoxedProblem& p, const SolverOptions& opt) {
  const Eigen::Index n = p.x0.size();
  Eigen::VectorXd x = project(p.x0, p.lower, p.upper);
  Eigen::VectorXd g(n);
  double f = p.objective(x, &g);
  check_finite(f, &g);

  struct Pair {
    Eigen::VectorXd s, y;
    double rho;
  };
  std::deque<Pair> mem;

  SolveReport rep;
  rep.x_star = x;
  rep.f_star = f;

  for (int it = 0; it < opt.max_iter; ++it) {
    const double pg_norm =
        (x - project(x - g, p.lower, p.upper)).lpNorm<Eigen::Infinity>();
    rep.gradient_norm = pg_norm;
    rep.iterations = it;
    if (pg_norm <= opt.tol) {
      rep.converged = true;
      break;
    }

    // two-loop recursion for the quasi-Newton direction
    Eigen::VectorXd d = -g;
    if (!mem.empty()) {
      std::vector<double> alpha(mem.size());
      for (std::size_t i = mem.size(); i-- > 0;) {
        alpha[i] = mem[i].rho * mem[i].s.dot(d);
        d -= alpha[i] * mem[i].y;
      }
      const auto& last = mem.back();
      d *= last.s.dot(last.y) / last.y.squaredNorm();
      for (std::size_t i = 0; i < mem.size(); ++i) {
        const double beta = mem[i].rho * mem[i].y.dot(d);
        d += (alpha[i] - beta) * mem[i].s;
      }
    }

    // backtracking Armijo on the projected path, falling back to steepest
    // descent if the quasi-Newton direction stalls
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      if (pass == 1) {
        d = -g;
        mem.clear();
      }
      double step = 1.0;
      for (int bt = 0; bt < opt.max_backtracks; ++bt) {
        x_new = project(x + step * d, p.lower, p.upper);
        const Eigen::VectorXd dx = x_new - x;
        const double slope = g.dot(dx);
        if (slope < 0.0) {
          f_new = p.objective(x_new, nullptr);
          check_finite(f_new, nullptr);
          if (f_new <= f + opt.armijo_c1 * slope) {
            accepted = true;
            break;
          }
        }
        step *= opt.backtrack;
      }
    }
    if (!accepted) break;  // no descent step found: report current iterate

    Eigen::VectorXd g_new(n);
    const double f_check = p.objective(x_new, &g_new);
    check_finite(f_check, &g_new);

    Pair pr;
    pr.s = x_new - x;
    pr.y = g_new - g;
    const double sy = pr.s.dot(pr.y);
    if (sy > 1e-12 * pr.s.norm() * pr.y.norm()) {
      pr.rho = 1.0 / sy;
      mem.push_back(std::move(pr));
      if (static_cast<int>(mem.size()) > opt.history) mem.pop_front();
    }

    x = x_new;
    g = g_new;
    f = f_new;
    rep.x_star = x;
    rep.f_star = f;
  }
  rep.gradient_norm =
      (x - project(x - g, p.lower, p.upper)).lpNorm<Eigen::Infinity>();
  if (rep.gradient_norm <= opt.tol) rep.converged = true;
  return rep;
}

ScalarResult minimize_scalar(const std::function<double(double)>& f, double lo,
                             double hi, double tol) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - kInvPhi * (b - a);
  double x2 = a + kInvPhi * (b - a);
  double f1 = f(x1), f2 = f(x2);

  double best_x = f1 <= f2 ? x1 : x2;
  double best_f = std::min(f1, f2);
  auto consider = [&](double x, double fx) {
    if (fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  };

  while (b - a > tol) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kInvPhi * (b - a);
      f1 = f(x1);
      consider(x1, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kInvPhi * (b - a);
      f2 = f(x2);
      consider(x2, f2);
    }
  }

  // final parabolic refinement through (a, best, b)
  {
    const double fa = f(a), fb = f(b);
    consider(a, fa);
    consider(b, fb);
    const double x0 = a, x1p = best_x, x2p = b;
    const double d1 = (x1p - x0), d2 = (x2p - x1p);
    if (d1 > 0.0 && d2 > 0.0) {
      const double f0 = fa, fm = best_f, f2v = fb;
      const double num = d1 * d1 * (fm - f2v) - d2 * d2 * (fm - f0);
      const double den = d1 * (fm - f2v) + d2 * (fm - f0);
      if (std::abs(den) > 1e-300) {
        double xp = x1p - 0.5 * num / den;
        if (xp > lo && xp < hi) consider(xp, f(xp));
      }
    }
  }
  // post condition: never worse than the guarded endpoints or midpoint
  consider(lo + tol, f(lo + tol));
  consider(hi - tol, f(hi - tol));
  consider(0.5 * (lo + hi), f(0.5 * (lo + hi)));
  return {best_x, best_f};
}

}  // namespace armhe
