#include "armhe/loss.hpp"

#include <algorithm>

namespace armhe {

namespace {

// Shared subexpressions: t = (r/c)^2, b = 1/|alpha-2|, L = log(1 + b*t).
struct LossTerms {
  double t;
  double b;
  double L;
};

LossTerms terms(double r, double alpha, double c) {
  const double rc = r / c;
  const double t = rc * rc;
  const double b = 1.0 / std::abs(alpha - 2.0);
  return {t, b, std::log1p(b * t)};
}

}  // namespace

double rho(double r, const LossParams& p) {
  const auto [t, b, L] = terms(r, p.alpha, p.c);
  return (std::abs(p.alpha - 2.0) / p.alpha) * std::expm1(0.5 * p.alpha * L);
}

double rho_as_printed(double r, const LossParams& p) {
  const auto [t, b, L] = terms(r, p.alpha, p.c);
  return (std::abs(p.alpha - 2.0) / p.alpha) * std::exp((0.5 * p.alpha - 1.0) * L);
}

double phi(double r, const LossParams& p) {
  const auto [t, b, L] = terms(r, p.alpha, p.c);
  return t / (p.c * p.c) * std::exp((p.alpha - 2.0) * L);
}

double phi_grad_r(double r, const LossParams& p) {
  // d phi / d r = (2 r / c^4) (1 + b t)^(alpha-3) (1 + b t (alpha-1))
  const auto [t, b, L] = terms(r, p.alpha, p.c);
  const double c2 = p.c * p.c;
  return 2.0 * r / (c2 * c2) * std::exp((p.alpha - 3.0) * L) *
         (1.0 + b * t * (p.alpha - 1.0));
}

double phi_grad_alpha(double r, const LossParams& p) {
  // d phi / d alpha = phi * (L - b t / (1 + b t)) for alpha < 2.
  const auto [t, b, L] = terms(r, p.alpha, p.c);
  const double ph = t / (p.c * p.c) * std::exp((p.alpha - 2.0) * L);
  return ph * (L - b * t / (1.0 + b * t));
}

SpecialCaseReport special_case_check(double alpha_target, double c) {
  const bool quadratic = alpha_target > 1.5;
  const double alpha = quadratic ? kAlphaMax : 1.0;  // alpha = 1 is regular
  double worst = 0.0;
  for (int i = 0; i <= 500; ++i) {
    const double r = 5.0 * i / 500.0;
    const double rc = r / c;
    const double got = rho(r, {alpha, c});
    const double want =
        quadratic ? 0.5 * rc * rc : std::sqrt(rc * rc + 1.0) - 1.0;
    worst = std::max(worst, std::abs(got - want));
  }
  return {quadratic ? "quadratic-limit" : "pseudo-huber", worst};
}

}  // namespace armhe
