#include "armhe/bench.hpp"

#include <atomic>
#include <chrono>
#include <cstring>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

namespace armhe {

namespace {

double wrapped_sq_error(const Vec7& est, const Vec7& truth) {
  double s = 0.0;
  for (int i = 0; i < kStateDim; ++i) {
    double d = est[i] - truth[i];
    if (i == kBeta1 || i == kTheta0 || i == kTheta1) d = wrap_angle(d);
    s += d * d;
  }
  return s;
}

}  // namespace

std::uint64_t hash_measurements(const std::vector<LogRow>& rows) {
  // FNV-1a over the measurement bytes
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& r : rows)
    for (int i = 0; i < kMeasDim; ++i) mix(r.y[i]);
  return h;
}

TrialLog simulate_trial(const ScenarioSpec& spec, int trial_index) {
  Rng rng = Rng(spec.seed).split(static_cast<std::uint64_t>(trial_index));
  const auto path = reference_path(spec.path);
  const int steps = static_cast<int>(spec.duration_s / spec.vehicle.ts);

  TrialLog log;
  log.rows.reserve(steps);
  Vec7 q = aligned_state(0.0, 0.0, 0.0, spec.vehicle);
  double prev_v = 0.0;
  std::size_t path_hint = 0;
  for (int k = 0; k < steps; ++k) {
    LogRow row;
    row.k = k;
    row.q = q;
    const CorruptResult cr = corrupt(output(q), spec.noise, rng);
    row.y = cr.noisy;
    row.outlier = cr.outlier;
    const ControlInput u =
        follow(q, path, path_hint, spec.vehicle, spec.follower, prev_v);
    row.u = u;
    log.rows.push_back(row);
    path_hint = nearest_path_index(q, path, path_hint);
    prev_v = u.v0;
    q = step(q, u, Vec7::Zero(), spec.vehicle);
  }

  // initial guess: true tractor position perturbed, feasible configuration
  // rebuilt around the true headings
  const Vec7& q0 = log.rows.front().q;
  Vec7 guess = q0;
  guess[kX0] += rng.normal(0.0, spec.initial_guess_sigma);
  guess[kY0] += rng.normal(0.0, spec.initial_guess_sigma);
  guess[kX1] = guess[kX0] - spec.vehicle.hitch_length * std::cos(guess[kTheta1]);
  guess[kY1] = guess[kY0] - spec.vehicle.hitch_length * std::sin(guess[kTheta1]);
  log.initial_guess = guess;
  return log;
}

TrialMetrics run_variant_on_log(const TrialLog& log, const ScenarioSpec& spec,
                                const EstimatorVariant& variant,
                                std::vector<EstimatorSolution>* per_step) {
  TrialMetrics m;
  m.measurement_hash = hash_measurements(log.rows);
  MovingHorizonEstimator est(spec.horizon, spec.cost, spec.vehicle, variant,
                             log.initial_guess, spec.solver);

  const bool adaptive = std::holds_alternative<AdaptiveVariant>(variant);
  const int max_m =
      adaptive ? std::get<AdaptiveVariant>(variant).max_iterations : 1;
  std::vector<double> curve_sum(max_m, 0.0);
  int curve_steps = 0;

  double psi_sum = 0.0, delta_sum = 0.0, eta_sum = 0.0, inner_sum = 0.0;
  ControlInput prev_u;
  try {
    for (std::size_t k = 0; k < log.rows.size(); ++k) {
      const LogRow& row = log.rows[k];
      const auto t0 = std::chrono::steady_clock::now();
      const EstimatorSolution& sol = est.update(row.y, prev_u);
      const auto t1 = std::chrono::steady_clock::now();
      prev_u = row.u;

      eta_sum += std::chrono::duration<double>(t1 - t0).count();
      const Vec7& xk = sol.xhat.back();
      psi_sum += wrapped_sq_error(xk, row.q);
      const double dx = xk[kX0] - row.q[kX0];
      const double dy = xk[kY0] - row.q[kY0];
      delta_sum += dx * dx + dy * dy;
      inner_sum += sol.inner_iterations;

      if (adaptive && !sol.iterate_estimates.empty()) {
        const double e1 = wrapped_sq_error(sol.iterate_estimates[0], row.q);
        if (e1 > 1e-30) {
          double last = 1.0;
          for (int i = 0; i < max_m; ++i) {
            if (i < static_cast<int>(sol.iterate_estimates.size()))
              last = wrapped_sq_error(sol.iterate_estimates[i], row.q) / e1;
            curve_sum[i] += last;  // carry the last value once converged
          }
          ++curve_steps;
        }
      }
      if (per_step) per_step->push_back(sol);
    }
  } catch (const std::exception& e) {
    m.failed = true;
    m.error = e.what();
    return m;
  }

  const double n = static_cast<double>(log.rows.size());
  m.psi = psi_sum / n;
  m.delta = delta_sum / n;
  m.eta = eta_sum / n;
  m.mean_inner_iterations = inner_sum / n;
  if (adaptive && curve_steps > 0) {
    m.iteration_error_curve.resize(max_m);
    for (int i = 0; i < max_m; ++i)
      m.iteration_error_curve[i] = curve_sum[i] / curve_steps;
  }
  return m;
}

TrialResult run_trial(const ScenarioSpec& spec, int trial_index,
                      bool keep_log) {
  TrialResult res;
  res.index = trial_index;
  TrialLog log = simulate_trial(spec, trial_index);
  res.per_variant.reserve(spec.variants.size());
  for (const auto& v : spec.variants)
    res.per_variant.push_back(run_variant_on_log(log, spec, v));
  if (keep_log) res.log = std::move(log);
  return res;
}

std::vector<TrialResult> run_scenario(const ScenarioSpec& spec, int threads,
                                      bool keep_logs) {
  const int n = spec.trial_count;
  std::vector<TrialResult> results(n);
  if (threads <= 0)
    threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));

  std::atomic<int> next{0};
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      results[i] = run_trial(spec, i, keep_logs && i == 0);
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return results;
}

ScenarioAggregate aggregate(const ScenarioSpec& spec,
                            const std::vector<TrialResult>& results) {
  ScenarioAggregate agg;
  agg.scenario = spec.name;
  for (std::size_t vi = 0; vi < spec.variants.size(); ++vi) {
    VariantAggregate va;
    va.variant = variant_name(spec.variants[vi]);
    std::vector<double> curve;
    for (const auto& r : results) {
      const TrialMetrics& m = r.per_variant[vi];
      if (m.failed) {
        ++va.trials_failed;
        continue;
      }
      ++va.trials_ok;
      va.mean_psi += m.psi;
      va.mean_delta += m.delta;
      va.mean_eta += m.eta;
      va.mean_inner_iterations += m.mean_inner_iterations;
      if (!m.iteration_error_curve.empty()) {
        if (curve.size() < m.iteration_error_curve.size())
          curve.resize(m.iteration_error_curve.size(), 0.0);
        for (std::size_t i = 0; i < m.iteration_error_curve.size(); ++i)
          curve[i] += m.iteration_error_curve[i];
      }
    }
    if (va.trials_ok > 0) {
      va.mean_psi /= va.trials_ok;
      va.mean_delta /= va.trials_ok;
      va.mean_eta /= va.trials_ok;
      va.mean_inner_iterations /= va.trials_ok;
      for (double& c : curve) c /= va.trials_ok;
    }
    va.iteration_curve = std::move(curve);
    agg.variants.push_back(std::move(va));
  }
  return agg;
}

// ---------------------------------------------------------------- reports

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void write_trials_csv(const std::filesystem::path& file,
                      const std::vector<TrialResult>& results,
                      std::size_t variant_index) {
  // deterministic columns only; wall-clock timing goes to timing.csv
  std::ofstream out(file);
  out << "trial,psi,delta,mean_inner_iterations,failed\n";
  for (const auto& r : results) {
    const TrialMetrics& m = r.per_variant[variant_index];
    out << r.index << ',' << fmt(m.psi) << ',' << fmt(m.delta) << ','
        << fmt(m.mean_inner_iterations) << ',' << (m.failed ? 1 : 0) << '\n';
  }
  std::ofstream timing(file.parent_path() / "timing.csv");
  timing << "trial,eta\n";
  for (const auto& r : results)
    timing << r.index << ',' << fmt(r.per_variant[variant_index].eta) << '\n';
}

std::vector<TrialMetrics> read_trials_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::string line;
  std::getline(in, line);  // header
  std::vector<TrialMetrics> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string tok;
    TrialMetrics m;
    std::getline(is, tok, ',');  // trial index, unused here
    std::getline(is, tok, ',');
    m.psi = std::stod(tok);
    std::getline(is, tok, ',');
    m.delta = std::stod(tok);
    std::getline(is, tok, ',');
    m.mean_inner_iterations = std::stod(tok);
    std::getline(is, tok, ',');
    m.failed = tok == "1";
    out.push_back(m);
  }
  return out;
}

void write_log_csv(const std::filesystem::path& file, const TrialLog& log) {
  std::ofstream out(file);
  out << "k,beta1,theta0,theta1,x0,y0,x1,y1,omega0,v0,"
         "y_beta1,y_theta0,y_x0,y_y0,out_beta1,out_theta0,out_x0,out_y0\n";
  out << "guess";
  for (int i = 0; i < kStateDim; ++i) out << ',' << fmt(log.initial_guess[i]);
  for (int i = 0; i < 10; ++i) out << ",0";
  out << '\n';
  for (const auto& r : log.rows) {
    out << r.k;
    for (int i = 0; i < kStateDim; ++i) out << ',' << fmt(r.q[i]);
    out << ',' << fmt(r.u.omega0) << ',' << fmt(r.u.v0);
    for (int i = 0; i < kMeasDim; ++i) out << ',' << fmt(r.y[i]);
    for (int i = 0; i < kMeasDim; ++i) out << ',' << (r.outlier[i] ? 1 : 0);
    out << '\n';
  }
}

TrialLog read_log_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  TrialLog log;
  std::string line;
  std::getline(in, line);  // header
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream is(line);
    std::vector<std::string> toks;
    std::string tok;
    while (std::getline(is, tok, ',')) toks.push_back(tok);
    if (toks.size() != 18)
      throw std::runtime_error("truncated log row at line " +
                               std::to_string(lineno));
    try {
      if (toks[0] == "guess") {
        for (int i = 0; i < kStateDim; ++i)
          log.initial_guess[i] = std::stod(toks[1 + i]);
        continue;
      }
      LogRow r;
      r.k = std::stoi(toks[0]);
      for (int i = 0; i < kStateDim; ++i) r.q[i] = std::stod(toks[1 + i]);
      r.u.omega0 = std::stod(toks[8]);
      r.u.v0 = std::stod(toks[9]);
      for (int i = 0; i < kMeasDim; ++i) r.y[i] = std::stod(toks[10 + i]);
      for (int i = 0; i < kMeasDim; ++i) r.outlier[i] = toks[14 + i] == "1";
      log.rows.push_back(r);
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("malformed log row at line " +
                               std::to_string(lineno));
    }
  }
  return log;
}

void write_svg_plot(
    const std::filesystem::path& file,
    const std::vector<std::pair<std::string, std::vector<Eigen::Vector2d>>>& series,
    const std::string& title) {
  const int w = 720, h = 480, margin = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [name, pts] : series) {
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.x());
      xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y());
      ymax = std::max(ymax, p.y());
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  auto sx = [&](double x) {
    return margin + (x - xmin) / (xmax - xmin) * (w - 2 * margin);
  };
  auto sy = [&](double y) {
    return h - margin - (y - ymin) / (ymax - ymin) * (h - 2 * margin);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#ff7f0e", "#9467bd", "#8c564b"};
  std::ofstream out(file);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
  out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\""
      << w - 2 * margin << "\" height=\"" << h - 2 * margin
      << "\" fill=\"none\" stroke=\"#333\"/>\n";
  int ci = 0;
  for (const auto& [name, pts] : series) {
    const char* color = colors[ci % 6];
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    out << std::setprecision(8);
    for (const auto& p : pts) out << sx(p.x()) << ',' << sy(p.y()) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << w - margin - 10 << "\" y=\""
        << margin + 18 * (ci + 1) << "\" text-anchor=\"end\" "
           "font-family=\"sans-serif\" font-size=\"12\" fill=\""
        << color << "\">" << name << "</text>\n";
    ++ci;
  }
  out << "</svg>\n";
}

void emit_report(const std::vector<ScenarioAggregate>& aggs,
                 const std::map<std::string, std::vector<TrialResult>>& raw,
                 const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  for (const auto& agg : aggs) {
    const auto it = raw.find(agg.scenario);
    for (std::size_t vi = 0; vi < agg.variants.size(); ++vi) {
      const fs::path vdir = out_dir / agg.scenario / agg.variants[vi].variant;
      fs::create_directories(vdir);
      if (it != raw.end())
        write_trials_csv(vdir / "trials.csv", it->second, vi);
      if (!agg.variants[vi].iteration_curve.empty()) {
        std::ofstream out(vdir / "iteration_curve.csv");
        out << "iteration,mean_normalized_error\n";
        for (std::size_t i = 0; i < agg.variants[vi].iteration_curve.size(); ++i)
          out << (i + 1) << ',' << fmt(agg.variants[vi].iteration_curve[i])
              << '\n';
        std::vector<Eigen::Vector2d> pts;
        for (std::size_t i = 0; i < agg.variants[vi].iteration_curve.size(); ++i)
          pts.emplace_back(static_cast<double>(i + 1),
                           agg.variants[vi].iteration_curve[i]);
        write_svg_plot(vdir / "iteration_curve.svg",
                       {{agg.variants[vi].variant, pts}},
                       "Normalized error reduction per iteration (" +
                           agg.scenario + ")");
      }
    }
    // trajectory overlay from the retained first-trial log
    if (it != raw.end() && !it->second.empty() &&
        !it->second.front().log.rows.empty()) {
      std::vector<Eigen::Vector2d> truth, meas;
      for (const auto& r : it->second.front().log.rows) {
        truth.emplace_back(r.q[kX0], r.q[kY0]);
        meas.emplace_back(r.y[2], r.y[3]);
      }
      write_svg_plot(out_dir / agg.scenario / "trajectory.svg",
                     {{"true", truth}, {"measured", meas}},
                     "Tractor trajectory (" + agg.scenario + ")");
    }
  }

  std::ofstream md(out_dir / "summary.md");
  md << "# Benchmark summary\n\n";
  md << "| scenario | variant | psi | delta | eta (s) | mean inner iters | ok | failed |\n";
  md << "|---|---|---|---|---|---|---|---|\n";
  for (const auto& agg : aggs) {
    for (const auto& va : agg.variants) {
      md << "| " << agg.scenario << " | " << va.variant << " | "
         << std::setprecision(6) << va.mean_psi << " | " << va.mean_delta
         << " | " << va.mean_eta << " | " << va.mean_inner_iterations << " | "
         << va.trials_ok << " | " << va.trials_failed << " |\n";
    }
  }
}

}  // namespace armhe
