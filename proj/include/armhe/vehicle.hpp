#pragma once

#include <Eigen/Dense>
#include <vector>

// Discrete-time 1-trailer kinematic vehicle (on-axle hitch), its output map,
// a field-pattern reference path and a pure-pursuit follower that stands in
// for a model predictive controller.

namespace armhe {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using Vec4 = Eigen::Matrix<double, 4, 1>;
using Mat7 = Eigen::Matrix<double, 7, 7>;

// State ordering: (beta1, theta0, theta1, x0, y0, x1, y1).
enum StateIndex { kBeta1 = 0, kTheta0, kTheta1, kX0, kY0, kX1, kY1 };

// Measurement ordering: (beta1, theta0, x0, y0).
inline constexpr int kMeasDim = 4;
inline constexpr int kStateDim = 7;
inline constexpr int kMeasToState[kMeasDim] = {kBeta1, kTheta0, kX0, kY0};

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

struct VehicleParams {
  double hitch_length = 1.5;  // m
  double ts = 0.1;            // s
  double v_max = 1.5;         // m/s
  double omega_max = 1.0;     // rad/s
  double a_max = 0.5;         // m/s^2
};

struct ControlInput {
  double omega0 = 0.0;  // steering rate, rad/s
  double v0 = 0.0;      // longitudinal speed, m/s
};

/// Aligned configuration: tractor at (x0, y0) with heading theta, trailer
/// placed rigidly one hitch length behind, zero joint angle.
Vec7 aligned_state(double x0, double y0, double theta, const VehicleParams& vp);

/// One Euler step of the kinematics plus additive disturbance w. With w = 0
/// the trailer stays exactly one hitch length behind the tractor and
/// beta1 = wrap(theta0 - theta1) by construction.
Vec7 step(const Vec7& q, const ControlInput& u, const Vec7& w,
          const VehicleParams& vp);

/// Jacobian of the disturbance-free step with respect to q (angles treated as
/// unwrapped reals, which is how the estimator rolls the model forward).
Mat7 step_jacobian(const Vec7& q, const ControlInput& u,
                   const VehicleParams& vp);

/// Unwrapped variant of step used inside the estimator: identical arithmetic
/// but without the final angle wrap, so the map is smooth.
Vec7 step_unwrapped(const Vec7& q, const ControlInput& u, const Vec7& w,
                    const VehicleParams& vp);

/// Noise-free output map h(q) = (beta1, theta0, x0, y0).
Vec4 output(const Vec7& q);

struct PathSpec {
  double row_length = 40.0;   // m
  double row_spacing = 6.0;   // m (also the turn diameter)
  double turn_radius = 3.0;   // m
  double speed = 1.0;         // m/s, spacing between successive samples
  double ts = 0.1;            // s
};

/// Two parallel rows joined by a semicircular headland turn, sampled at
/// speed * ts spacing. Starts at the origin heading +x.
std::vector<Eigen::Vector2d> reference_path(const PathSpec& spec);

struct FollowerParams {
  double lookahead = 2.0;  // m
  double cruise_speed = 1.0;
};

/// Pure pursuit on the tractor. Searches the path forward from sample k for
/// the lookahead point, saturates the heading-rate command and ramps speed
/// under the acceleration limit. prev_v is the speed commanded last step.
ControlInput follow(const Vec7& q, const std::vector<Eigen::Vector2d>& path,
                    std::size_t k, const VehicleParams& vp,
                    const FollowerParams& fp, double prev_v);

/// Index of the path sample nearest to the tractor, searched from `hint`.
std::size_t nearest_path_index(const Vec7& q,
                               const std::vector<Eigen::Vector2d>& path,
                               std::size_t hint);

}  // namespace armhe
