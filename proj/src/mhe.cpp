#include "armhe/mhe.hpp"

#include <cmath>
#include <sstream>

namespace armhe {

namespace {

double wrap_residual(int meas_idx, double raw) {
  // joint angle and heading channels live on the circle
  return meas_idx <= 1 ? wrap_angle(raw) : raw;
}

double box_penalty(double v, double bound, double weight) {
  if (!std::isfinite(bound)) return 0.0;
  const double excess = std::abs(v) - bound;
  return excess > 0.0 ? weight * excess * excess : 0.0;
}

double box_penalty_grad(double v, double bound, double weight) {
  if (!std::isfinite(bound)) return 0.0;
  const double excess = std::abs(v) - bound;
  if (excess <= 0.0) return 0.0;
  return 2.0 * weight * excess * (v > 0.0 ? 1.0 : -1.0);
}

// Residual cost of one window slot and its derivative with respect to v.
double slot_residual_cost(const Vec4& v, const Vec4& alpha_col,
                          const StageCostParams& p, Vec4* dcost_dv) {
  double cost = 0.0;
  for (int i = 0; i < kMeasDim; ++i) {
    const LossParams lp{alpha_col[i], p.c};
    cost += p.delta[i] / kMeasDim *
            (phi(v[i], lp) + p.gamma[i] * (2.0 - alpha_col[i]) * (2.0 - alpha_col[i]));
    cost += box_penalty(v[i], p.v_bound[i], p.v_penalty);
    if (dcost_dv) {
      (*dcost_dv)[i] = p.delta[i] / kMeasDim * phi_grad_r(v[i], lp) +
                       box_penalty_grad(v[i], p.v_bound[i], p.v_penalty);
    }
  }
  return cost;
}

Vec7 wrap_chi(const Vec7& x0, const Vec7& prior) {
  Vec7 chi = x0 - prior;
  chi[kBeta1] = wrap_angle(chi[kBeta1]);
  chi[kTheta0] = wrap_angle(chi[kTheta0]);
  chi[kTheta1] = wrap_angle(chi[kTheta1]);
  return chi;
}

struct Rollout {
  std::vector<Vec7> x;                                   // N+1 states
  Eigen::Matrix<double, kMeasDim, Eigen::Dynamic> v;     // residuals
};

Rollout roll_forward(const EstimationWindow& w, const std::vector<Vec7>& what,
                     const Vec7& x0, const VehicleParams& vp) {
  const int nw = w.horizon();
  Rollout r;
  r.x.resize(nw + 1);
  r.v.resize(kMeasDim, nw + 1);
  r.x[0] = x0;
  for (int j = 0; j < nw; ++j)
    r.x[j + 1] = step_unwrapped(r.x[j], w.controls[j], what[j], vp);
  for (int j = 0; j <= nw; ++j) {
    const Vec4 h = output(r.x[j]);
    for (int i = 0; i < kMeasDim; ++i)
      r.v(i, j) = wrap_residual(i, w.measurements[j][i] - h[i]);
  }
  return r;
}

}  // namespace

double stage_cost(const Vec7* w, const Vec4& v, const Vec4& alpha_col,
                  const StageCostParams& p) {
  double cost = 0.0;
  if (w) cost += w->cwiseProduct(p.w_weight.cwiseProduct(*w)).sum();
  for (int i = 0; i < kMeasDim; ++i) {
    const LossParams lp{alpha_col[i], p.c};
    cost += p.delta[i] / kMeasDim *
            (phi(v[i], lp) +
             p.gamma[i] * (2.0 - alpha_col[i]) * (2.0 - alpha_col[i]));
  }
  return cost;
}

double arrival_cost(const Vec7& chi, const Vec7& prior_weight) {
  return chi.cwiseProduct(prior_weight.cwiseProduct(chi)).sum();
}

double window_cost(const EstimationWindow& w, const StageCostParams& p,
                   const std::vector<Vec7>& xhat, const std::vector<Vec7>& what,
                   const VehicleParams& vp) {
  const Rollout r = roll_forward(w, what, xhat[0], vp);
  double cost = arrival_cost(wrap_chi(xhat[0], w.prior), p.prior_weight);
  for (int j = 0; j <= w.horizon(); ++j) {
    if (j < w.horizon())
      cost += what[j].cwiseProduct(p.w_weight.cwiseProduct(what[j])).sum();
    cost += slot_residual_cost(r.v.col(j), w.alpha.col(j), p, nullptr);
  }
  return cost;
}

EstimatorSolution solve_states(const EstimationWindow& w,
                               const StageCostParams& p,
                               const VehicleParams& vp,
                               const EstimatorSolution* warm,
                               const SolverOptions& opt) {
  const int nw = w.horizon();
  const int dim = kStateDim * (1 + nw);

  auto unpack = [nw](const Eigen::VectorXd& z, Vec7& x0,
                     std::vector<Vec7>& what) {
    x0 = z.head<kStateDim>();
    what.resize(nw);
    for (int j = 0; j < nw; ++j)
      what[j] = z.segment<kStateDim>(kStateDim * (1 + j));
  };

  BoxedProblem prob;
  prob.lower = Eigen::VectorXd::Constant(dim, -std::numeric_limits<double>::infinity());
  prob.upper = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
  for (int j = 0; j < nw; ++j) {
    prob.lower.segment<kStateDim>(kStateDim * (1 + j)).setConstant(-p.w_bound);
    prob.upper.segment<kStateDim>(kStateDim * (1 + j)).setConstant(p.w_bound);
  }
  prob.x0 = Eigen::VectorXd::Zero(dim);
  if (warm && static_cast<int>(warm->what.size()) == nw &&
      !warm->xhat.empty()) {
    prob.x0.head<kStateDim>() = warm->xhat[0];
    for (int j = 0; j < nw; ++j)
      prob.x0.segment<kStateDim>(kStateDim * (1 + j)) = warm->what[j];
  } else {
    prob.x0.head<kStateDim>() = w.prior;
  }

  prob.objective = [&w, &p, &vp, nw, &unpack](const Eigen::VectorXd& z,
                                              Eigen::VectorXd* grad) {
    Vec7 x0;
    std::vector<Vec7> what;
    unpack(z, x0, what);
    const Rollout r = roll_forward(w, what, x0, vp);

    const Vec7 chi = wrap_chi(x0, w.prior);
    double cost = arrival_cost(chi, p.prior_weight);
    std::vector<Vec4> dv(nw + 1);
    for (int j = 0; j <= nw; ++j) {
      cost += slot_residual_cost(r.v.col(j), w.alpha.col(j), p,
                                 grad ? &dv[j] : nullptr);
      if (j < nw)
        cost += what[j].cwiseProduct(p.w_weight.cwiseProduct(what[j])).sum();
    }
    if (grad) {
      grad->setZero(z.size());
      // adjoint sweep: lambda_j = dJ/dx_j holding later stages via dynamics
      Vec7 lambda = Vec7::Zero();
      for (int j = nw; j >= 0; --j) {
        Vec7 direct = Vec7::Zero();
        for (int i = 0; i < kMeasDim; ++i)
          direct[kMeasToState[i]] -= dv[j][i];  // v = y - h(x)
        lambda += direct;
        if (j > 0) {
          grad->segment<kStateDim>(kStateDim * j) =
              2.0 * p.w_weight.cwiseProduct(what[j - 1]) + lambda;
          const Mat7 a = step_jacobian(r.x[j - 1], w.controls[j - 1], vp);
          lambda = a.transpose() * lambda;
        }
      }
      grad->head<kStateDim>() =
          lambda + 2.0 * p.prior_weight.cwiseProduct(chi);
    }
    return cost;
  };

  const SolveReport rep = minimize_boxed(prob, opt);

  EstimatorSolution sol;
  Vec7 x0;
  std::vector<Vec7> what;
  unpack(rep.x_star, x0, what);
  const Rollout r = roll_forward(w, what, x0, vp);
  sol.xhat = r.x;
  sol.what = std::move(what);
  sol.vhat = r.v;
  sol.alpha = w.alpha;
  sol.cost = rep.f_star;
  sol.cost_trace = {rep.f_star};
  sol.converged = rep.converged;
  sol.inner_iterations = 1;
  return sol;
}

AlphaMatrix solve_alphas(
    const Eigen::Matrix<double, kMeasDim, Eigen::Dynamic>& vhat,
    const AlphaMatrix& incumbent, const StageCostParams& p) {
  AlphaMatrix out(kMeasDim, vhat.cols());
  for (Eigen::Index j = 0; j < vhat.cols(); ++j) {
    for (int i = 0; i < kMeasDim; ++i) {
      const double v = vhat(i, j);
      const double gamma = p.gamma[i];
      auto f = [&](double a) {
        return p.delta[i] / kMeasDim *
               (phi(v, {a, p.c}) + gamma * (2.0 - a) * (2.0 - a));
      };
      // coarse bracket first: the objective need not be unimodal in alpha
      constexpr int kCoarse = 48;
      int best_k = 0;
      double best_fk = std::numeric_limits<double>::infinity();
      for (int k = 0; k <= kCoarse; ++k) {
        const double a = kAlphaMin + (kAlphaMax - kAlphaMin) * k / kCoarse;
        const double fa = f(a);
        if (fa < best_fk) {
          best_fk = fa;
          best_k = k;
        }
      }
      const double span = (kAlphaMax - kAlphaMin) / kCoarse;
      const double lo = std::max(kAlphaMin, kAlphaMin + (best_k - 1) * span);
      const double hi = std::min(kAlphaMax, kAlphaMin + (best_k + 1) * span);
      const ScalarResult res = minimize_scalar(f, lo, hi, 1e-7);
      // keep the incumbent when the scalar search cannot improve on it
      const double inc = incumbent(i, j);
      out(i, j) = res.f_star < f(inc) ? res.x_star : inc;
    }
  }
  return out;
}

std::string variant_name(const EstimatorVariant& v) {
  std::ostringstream os;
  if (const auto* f = std::get_if<FixedAlphaVariant>(&v)) {
    os << "fixed-a" << f->alpha0;
  } else if (const auto* g = std::get_if<GridSearchVariant>(&v)) {
    os << "grid-m" << g->grid.size();
  } else {
    os << "adaptive-m" << std::get<AdaptiveVariant>(v).max_iterations;
  }
  return os.str();
}

EstimatorSolution estimate_step(const EstimationWindow& w,
                                const StageCostParams& p,
                                const VehicleParams& vp,
                                const EstimatorVariant& variant,
                                const EstimatorSolution* warm,
                                const SolverOptions& opt) {
  if (const auto* f = std::get_if<FixedAlphaVariant>(&variant)) {
    EstimationWindow wv = w;
    wv.alpha.setConstant(clamp_alpha(f->alpha0));
    EstimatorSolution sol = solve_states(wv, p, vp, warm, opt);
    sol.iterate_estimates = {sol.xhat.back()};
    return sol;
  }

  if (const auto* g = std::get_if<GridSearchVariant>(&variant)) {
    EstimatorSolution best;
    bool have = false;
    for (double a0 : g->grid) {
      EstimationWindow wv = w;
      wv.alpha.setConstant(clamp_alpha(a0));
      EstimatorSolution sol = solve_states(wv, p, vp, warm, opt);
      if (!have || sol.cost < best.cost) {
        best = std::move(sol);
        have = true;
      }
    }
    best.cost_trace = {best.cost};
    best.inner_iterations = static_cast<int>(g->grid.size());
    best.iterate_estimates = {best.xhat.back()};
    return best;
  }

  // alternating state / shape-parameter estimation
  const auto& ad = std::get<AdaptiveVariant>(variant);
  EstimationWindow wv = w;
  std::vector<double> trace;
  std::vector<Vec7> iterates;
  EstimatorSolution sol;
  int done = 0;
  for (int i = 1; i <= ad.max_iterations; ++i) {
    sol = solve_states(wv, p, vp, i == 1 ? warm : &sol, opt);  // J_x_i
    trace.push_back(sol.cost);
    iterates.push_back(sol.xhat.back());
    wv.alpha = solve_alphas(sol.vhat, wv.alpha, p);
    const double j_alpha = window_cost(wv, p, sol.xhat, sol.what, vp);  // J_a_i
    const double j_x = trace.back();
    trace.push_back(j_alpha);
    sol.alpha = wv.alpha;
    sol.cost = j_alpha;
    done = i;
    if (j_x - j_alpha <= ad.epsilon) break;
  }
  sol.cost_trace = std::move(trace);
  sol.iterate_estimates = std::move(iterates);
  sol.inner_iterations = done;
  return sol;
}

EstimationWindow recede(const EstimationWindow& w, const Vec4& new_y,
                        const ControlInput& new_u,
                        const EstimatorSolution& solution) {
  EstimationWindow n;
  n.measurements.assign(w.measurements.begin() + 1, w.measurements.end());
  n.measurements.push_back(new_y);
  n.controls.assign(w.controls.begin() + 1, w.controls.end());
  n.controls.push_back(new_u);
  n.alpha.resize(kMeasDim, w.alpha.cols());
  n.alpha.leftCols(w.alpha.cols() - 1) = solution.alpha.rightCols(w.alpha.cols() - 1);
  n.alpha.col(w.alpha.cols() - 1).setConstant(kAlphaMax);
  n.prior = solution.xhat.size() > 1 ? solution.xhat[1] : solution.xhat[0];
  return n;
}

MovingHorizonEstimator::MovingHorizonEstimator(int horizon,
                                               StageCostParams params,
                                               VehicleParams vehicle,
                                               EstimatorVariant variant,
                                               const Vec7& initial_guess,
                                               SolverOptions opt)
    : horizon_(horizon),
      params_(std::move(params)),
      vehicle_(vehicle),
      variant_(std::move(variant)),
      opt_(opt) {
  window_.prior = initial_guess;
  window_.alpha.resize(kMeasDim, 0);
}

const EstimatorSolution& MovingHorizonEstimator::update(const Vec4& y,
                                                        const ControlInput& u) {
  EstimatorSolution warm;
  bool have_warm = false;
  if (!started_) {
    window_.measurements = {y};
    window_.controls.clear();
    window_.alpha.resize(kMeasDim, 1);
    window_.alpha.setConstant(kAlphaMax);
    started_ = true;
  } else if (static_cast<int>(window_.measurements.size()) <= horizon_) {
    // growing horizon: keep the initial prior, extend the buffers
    window_.measurements.push_back(y);
    window_.controls.push_back(u);
    AlphaMatrix a(kMeasDim, window_.alpha.cols() + 1);
    a.leftCols(window_.alpha.cols()) = solution_.alpha;
    a.col(window_.alpha.cols()).setConstant(kAlphaMax);
    window_.alpha = a;
    warm = solution_;
    warm.xhat.push_back(
        step_unwrapped(solution_.xhat.back(), u, Vec7::Zero(), vehicle_));
    warm.what.push_back(Vec7::Zero());
    have_warm = true;
  } else {
    window_ = recede(window_, y, u, solution_);
    warm.xhat.assign(solution_.xhat.begin() + 1, solution_.xhat.end());
    warm.xhat.push_back(
        step_unwrapped(solution_.xhat.back(), u, Vec7::Zero(), vehicle_));
    warm.what.assign(solution_.what.begin() + 1, solution_.what.end());
    warm.what.push_back(Vec7::Zero());
    have_warm = true;
  }
  solution_ = estimate_step(window_, params_, vehicle_, variant_,
                            have_warm ? &warm : nullptr, opt_);
  window_.alpha = solution_.alpha;
  return solution_;
}

}  // namespace armhe
