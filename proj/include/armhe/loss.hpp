#pragma once

#include <cmath>
#include <stdexcept>

// Adaptive robust loss family restricted to shape parameters in (1, 2):
// rho is the smooth robust loss, phi is the square of its derivative and
// serves as the stage-cost kernel. Both are evaluated with the power term
// in log space so large residuals do not overflow.

namespace armhe {

inline constexpr double kAlphaEps = 1e-6;
inline constexpr double kAlphaMin = 1.0 + kAlphaEps;
inline constexpr double kAlphaMax = 2.0 - kAlphaEps;

struct LossParams {
  double alpha = 1.5;  // shape, clamped interval [kAlphaMin, kAlphaMax]
  double c = 1.0;      // scale, width of the near-quadratic region

  bool valid() const {
    return alpha >= kAlphaMin && alpha <= kAlphaMax && c > 0.0 &&
           std::isfinite(alpha) && std::isfinite(c);
  }
};

inline double clamp_alpha(double alpha) {
  if (alpha < kAlphaMin) return kAlphaMin;
  if (alpha > kAlphaMax) return kAlphaMax;
  return alpha;
}

/// Robust loss rho(r, alpha, c) = (|a-2|/a) * ((1 + (r/c)^2/|a-2|)^(a/2) - 1).
double rho(double r, const LossParams& p);

/// The loss family as printed in some references: exponent a/2 - 1 and no
/// "-1" offset. Bounded and decreasing at alpha = 1; kept only for
/// comparison, not used by the estimator.
double rho_as_printed(double r, const LossParams& p);

/// Stage-cost kernel phi(r, alpha, c) = (1/c^2)(r/c)^2 (1 + (r/c)^2/|a-2|)^(a-2).
/// Equals (d rho / d r)^2. Class-K-infinity in |r| for alpha in (1, 2).
double phi(double r, const LossParams& p);

/// Analytic d phi / d r. Odd in r.
double phi_grad_r(double r, const LossParams& p);

/// Analytic d phi / d alpha.
double phi_grad_alpha(double r, const LossParams& p);

struct SpecialCaseReport {
  const char* name;      // "quadratic-limit" or "pseudo-huber"
  double max_deviation;  // over the fixed residual grid
};

/// Checks rho against its closed-form special cases on r in [0, 5]:
/// alpha -> 2 gives (r/c)^2 / 2, alpha = 1 gives sqrt((r/c)^2 + 1) - 1.
/// alpha_target must be 2.0 (evaluated at kAlphaMax) or 1.0 (evaluated at
/// kAlphaMin; the identity holds exactly at alpha = 1).
SpecialCaseReport special_case_check(double alpha_target, double c = 1.0);

}  // namespace armhe
