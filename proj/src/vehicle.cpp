#include "armhe/vehicle.hpp"

#include <algorithm>
#include <cmath>

namespace armhe {

double wrap_angle(double a) {
  a = std::fmod(a + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

Vec7 aligned_state(double x0, double y0, double theta, const VehicleParams& vp) {
  Vec7 q;
  q[kBeta1] = 0.0;
  q[kTheta0] = theta;
  q[kTheta1] = theta;
  q[kX0] = x0;
  q[kY0] = y0;
  q[kX1] = x0 - vp.hitch_length * std::cos(theta);
  q[kY1] = y0 - vp.hitch_length * std::sin(theta);
  return q;
}

Vec7 step_unwrapped(const Vec7& q, const ControlInput& u, const Vec7& w,
                    const VehicleParams& vp) {
  const double ts = vp.ts;
  const double l1 = vp.hitch_length;
  Vec7 n;
  n[kTheta0] = q[kTheta0] + ts * u.omega0;
  n[kX0] = q[kX0] + ts * u.v0 * std::cos(q[kTheta0]);
  n[kY0] = q[kY0] + ts * u.v0 * std::sin(q[kTheta0]);
  n[kTheta1] = q[kTheta1] + ts * (u.v0 / l1) * std::sin(q[kBeta1]);
  n[kBeta1] = n[kTheta0] - n[kTheta1];
  n[kX1] = n[kX0] - l1 * std::cos(n[kTheta1]);
  n[kY1] = n[kY0] - l1 * std::sin(n[kTheta1]);
  return n + w;
}

Vec7 step(const Vec7& q, const ControlInput& u, const Vec7& w,
          const VehicleParams& vp) {
  Vec7 n = step_unwrapped(q, u, w, vp);
  n[kTheta0] = wrap_angle(n[kTheta0]);
  n[kTheta1] = wrap_angle(n[kTheta1]);
  n[kBeta1] = wrap_angle(n[kBeta1]);
  return n;
}

Mat7 step_jacobian(const Vec7& q, const ControlInput& u,
                   const VehicleParams& vp) {
  const double ts = vp.ts;
  const double l1 = vp.hitch_length;
  Mat7 a = Mat7::Zero();
  // theta0+
  a(kTheta0, kTheta0) = 1.0;
  // x0+, y0+
  a(kX0, kX0) = 1.0;
  a(kX0, kTheta0) = -ts * u.v0 * std::sin(q[kTheta0]);
  a(kY0, kY0) = 1.0;
  a(kY0, kTheta0) = ts * u.v0 * std::cos(q[kTheta0]);
  // theta1+
  a(kTheta1, kTheta1) = 1.0;
  a(kTheta1, kBeta1) = ts * (u.v0 / l1) * std::cos(q[kBeta1]);
  // beta1+ = theta0+ - theta1+
  a.row(kBeta1) = a.row(kTheta0) - a.row(kTheta1);
  // x1+ = x0+ - l1 cos(theta1+), y1+ = y0+ - l1 sin(theta1+)
  const double th1n = q[kTheta1] + ts * (u.v0 / l1) * std::sin(q[kBeta1]);
  a.row(kX1) = a.row(kX0) + l1 * std::sin(th1n) * a.row(kTheta1);
  a.row(kY1) = a.row(kY0) - l1 * std::cos(th1n) * a.row(kTheta1);
  return a;
}

Vec4 output(const Vec7& q) {
  return Vec4(q[kBeta1], q[kTheta0], q[kX0], q[kY0]);
}

std::vector<Eigen::Vector2d> reference_path(const PathSpec& spec) {
  std::vector<Eigen::Vector2d> path;
  const double ds = spec.speed * spec.ts;
  const double turn_len = M_PI * spec.turn_radius;
  // Row out, semicircular headland turn, row back (offset by row_spacing).
  // The turn is a half circle of diameter row_spacing traced by two
  // quarter-arcs of radius turn_radius when spacing == 2 * radius; for the
  // general case a single semicircle of radius spacing / 2 would change the
  // spacing, so the arc radius follows spacing / 2 unless overridden.
  const double r = (spec.turn_radius > 0.0) ? spec.turn_radius
                                            : 0.5 * spec.row_spacing;
  double s = 0.0;
  const double total = 2.0 * spec.row_length + turn_len;
  (void)total;
  // first row: (0,0) -> (row_length, 0), heading +x
  for (s = 0.0; s < spec.row_length; s += ds)
    path.emplace_back(s, 0.0);
  // headland: semicircle centred at (row_length, spacing/2); when the turn
  // radius differs from spacing/2 the arc is scaled vertically so the exit
  // lands on the return row.
  const double cy = 0.5 * spec.row_spacing;
  const double arc_len = M_PI * r;
  for (s = 0.0; s < arc_len; s += ds) {
    const double ang = -M_PI / 2.0 + s / r;  // -pi/2 .. +pi/2
    path.emplace_back(spec.row_length + r * std::cos(ang),
                      cy + cy * std::sin(ang));
  }
  // return row: (row_length, spacing) -> (0, spacing), heading -x
  for (s = 0.0; s < spec.row_length; s += ds)
    path.emplace_back(spec.row_length - s, spec.row_spacing);
  path.emplace_back(0.0, spec.row_spacing);
  return path;
}

std::size_t nearest_path_index(const Vec7& q,
                               const std::vector<Eigen::Vector2d>& path,
                               std::size_t hint) {
  const Eigen::Vector2d p(q[kX0], q[kY0]);
  std::size_t best = hint;
  double best_d = (path[std::min(hint, path.size() - 1)] - p).squaredNorm();
  const std::size_t lo = hint > 20 ? hint - 20 : 0;
  const std::size_t hi = std::min(path.size(), hint + 60);
  for (std::size_t i = lo; i < hi; ++i) {
    const double d = (path[i] - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

ControlInput follow(const Vec7& q, const std::vector<Eigen::Vector2d>& path,
                    std::size_t k, const VehicleParams& vp,
                    const FollowerParams& fp, double prev_v) {
  const Eigen::Vector2d p(q[kX0], q[kY0]);
  const std::size_t near = nearest_path_index(q, path, k);
  // advance to the lookahead point
  std::size_t target = near;
  while (target + 1 < path.size() &&
         (path[target] - p).norm() < fp.lookahead)
    ++target;
  const Eigen::Vector2d d = path[target] - p;
  const double heading_err = wrap_angle(std::atan2(d.y(), d.x()) - q[kTheta0]);
  const double ld = std::max(d.norm(), 1e-6);
  // pure pursuit curvature command, scaled by speed
  double omega = 2.0 * prev_v * std::sin(heading_err) / ld;
  if (std::abs(prev_v) < 1e-6) omega = heading_err / vp.ts;
  omega = std::clamp(omega, -vp.omega_max, vp.omega_max);
  // speed ramp under the acceleration limit; slow down at path end
  double v_des = std::min(fp.cruise_speed, vp.v_max);
  if (target + 2 >= path.size()) v_des = 0.0;
  double v = std::clamp(v_des, prev_v - vp.a_max * vp.ts,
                        prev_v + vp.a_max * vp.ts);
  v = std::clamp(v, 0.0, vp.v_max);
  return {omega, v};
}

}  // namespace armhe
