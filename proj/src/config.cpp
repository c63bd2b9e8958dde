#include "armhe/config.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

namespace armhe {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

class KeyMap {
 public:
  void set(const std::string& k, const std::string& v) { map_[k] = v; }

  bool take(const std::string& k, std::string* out) {
    const auto it = map_.find(k);
    if (it == map_.end()) return false;
    *out = it->second;
    map_.erase(it);
    return true;
  }

  void number(const std::string& k, double* dst) {
    std::string v;
    if (take(k, &v)) *dst = to_double(k, v);
  }
  void integer(const std::string& k, int* dst) {
    std::string v;
    if (take(k, &v)) *dst = static_cast<int>(to_int(k, v));
  }
  void u64(const std::string& k, std::uint64_t* dst) {
    std::string v;
    if (take(k, &v)) *dst = static_cast<std::uint64_t>(to_int(k, v));
  }
  void boolean(const std::string& k, bool* dst) {
    std::string v;
    if (take(k, &v)) *dst = to_bool(k, v);
  }
  void text(const std::string& k, std::string* dst) {
    std::string v;
    if (take(k, &v)) *dst = v;
  }

  void reject_leftovers() const {
    if (!map_.empty())
      throw ConfigError("unknown config key '" + map_.begin()->first + "'");
  }

 private:
  std::map<std::string, std::string> map_;
};

void load_noise(KeyMap& m, const std::string& prefix, NoiseSpec* n) {
  m.number(prefix + ".sigma_beta", &n->sigma_beta);
  m.number(prefix + ".sigma_theta", &n->sigma_theta);
  m.number(prefix + ".sigma_xy", &n->sigma_xy);
  m.number(prefix + ".outlier_prob", &n->outlier_prob);
  m.number(prefix + ".outlier_scale", &n->outlier_scale);
  m.boolean(prefix + ".per_channel_events", &n->per_channel_events);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

EstimatorVariant parse_variant(const std::string& text, double epsilon) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg =
      colon == std::string::npos ? "" : text.substr(colon + 1);
  if (colon != std::string::npos && arg.empty())
    throw ConfigError("variant '" + kind + "': empty argument");
  if (kind == "adaptive") {
    AdaptiveVariant v;
    v.epsilon = epsilon;
    if (!arg.empty()) v.max_iterations = static_cast<int>(to_int("variant", arg));
    if (v.max_iterations < 1)
      throw ConfigError("variant 'adaptive': M must be >= 1");
    return v;
  }
  if (kind == "fixed") {
    FixedAlphaVariant v;
    if (!arg.empty()) v.alpha0 = to_double("variant", arg);
    return v;
  }
  if (kind == "grid") {
    GridSearchVariant v;
    if (!arg.empty()) {
      v.grid.clear();
      std::istringstream is(arg);
      std::string tok;
      while (std::getline(is, tok, '|')) v.grid.push_back(to_double("variant", tok));
    }
    if (v.grid.empty()) throw ConfigError("variant 'grid': empty alpha set");
    return v;
  }
  throw ConfigError("unknown variant kind '" + kind + "'");
}

Config default_config() {
  Config c;
  c.variants = {AdaptiveVariant{10, c.epsilon}, AdaptiveVariant{3, c.epsilon},
                GridSearchVariant{{1.1, 1.5, 1.8}}, FixedAlphaVariant{1.5}};
  return c;
}

Config parse_config_text(const std::string& text) {
  KeyMap keys;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    keys.set(section.empty() ? key : section + "." + key, val);
  }

  Config c = default_config();
  keys.number("vehicle.hitch_length", &c.vehicle.hitch_length);
  keys.number("vehicle.ts", &c.vehicle.ts);
  keys.number("vehicle.v_max", &c.vehicle.v_max);
  keys.number("vehicle.omega_max", &c.vehicle.omega_max);
  keys.number("vehicle.a_max", &c.vehicle.a_max);

  keys.number("path.row_length", &c.path.row_length);
  keys.number("path.row_spacing", &c.path.row_spacing);
  keys.number("path.turn_radius", &c.path.turn_radius);
  keys.number("path.speed", &c.path.speed);

  keys.number("follower.lookahead", &c.follower.lookahead);
  keys.number("follower.cruise_speed", &c.follower.cruise_speed);

  load_noise(keys, "noise_normal", &c.noise_normal);
  load_noise(keys, "noise_uniform", &c.noise_uniform);

  double delta = c.cost.delta[0], gamma = c.cost.gamma[0];
  double w_weight = c.cost.w_weight[0], prior_weight = c.cost.prior_weight[0];
  double v_bound_angle = c.cost.v_bound[0];
  keys.number("cost.c", &c.cost.c);
  keys.number("cost.delta", &delta);
  keys.number("cost.gamma", &gamma);
  keys.number("cost.w_weight", &w_weight);
  keys.number("cost.prior_weight", &prior_weight);
  keys.number("cost.w_bound", &c.cost.w_bound);
  keys.number("cost.v_bound_angle", &v_bound_angle);
  keys.number("cost.v_penalty", &c.cost.v_penalty);
  c.cost.delta.setConstant(delta);
  c.cost.gamma.setConstant(gamma);
  c.cost.w_weight.setConstant(w_weight);
  c.cost.prior_weight.setConstant(prior_weight);
  c.cost.v_bound[0] = c.cost.v_bound[1] = v_bound_angle;

  keys.integer("estimator.horizon", &c.horizon);
  keys.number("estimator.epsilon", &c.epsilon);
  keys.integer("estimator.max_iterations", &c.max_iterations);
  std::string variants;
  if (keys.take("estimator.variants", &variants)) {
    c.variants.clear();
    std::istringstream is(variants);
    std::string tok;
    while (is >> tok) c.variants.push_back(parse_variant(tok, c.epsilon));
  } else {
    for (auto& v : c.variants)
      if (auto* a = std::get_if<AdaptiveVariant>(&v)) a->epsilon = c.epsilon;
  }

  keys.number("solver.tol", &c.solver.tol);
  keys.integer("solver.max_iter", &c.solver.max_iter);

  keys.integer("bench.trials", &c.trial_count);
  keys.number("bench.duration", &c.duration_s);
  keys.u64("bench.seed", &c.seed);
  keys.number("bench.initial_guess_sigma", &c.initial_guess_sigma);
  keys.text("bench.out_dir", &c.out_dir);

  keys.reject_leftovers();
  validate(c);
  return c;
}

Config parse_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config file: " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const Config& c) {
  std::ostringstream o;
  o << "[vehicle]\n"
    << "hitch_length = " << fmt(c.vehicle.hitch_length) << "\n"
    << "ts = " << fmt(c.vehicle.ts) << "\n"
    << "v_max = " << fmt(c.vehicle.v_max) << "\n"
    << "omega_max = " << fmt(c.vehicle.omega_max) << "\n"
    << "a_max = " << fmt(c.vehicle.a_max) << "\n\n";
  o << "[path]\n"
    << "row_length = " << fmt(c.path.row_length) << "\n"
    << "row_spacing = " << fmt(c.path.row_spacing) << "\n"
    << "turn_radius = " << fmt(c.path.turn_radius) << "\n"
    << "speed = " << fmt(c.path.speed) << "\n\n";
  o << "[follower]\n"
    << "lookahead = " << fmt(c.follower.lookahead) << "\n"
    << "cruise_speed = " << fmt(c.follower.cruise_speed) << "\n\n";
  auto noise_section = [&o](const char* name, const NoiseSpec& n) {
    o << '[' << name << "]\n"
      << "sigma_beta = " << fmt(n.sigma_beta) << "\n"
      << "sigma_theta = " << fmt(n.sigma_theta) << "\n"
      << "sigma_xy = " << fmt(n.sigma_xy) << "\n"
      << "outlier_prob = " << fmt(n.outlier_prob) << "\n"
      << "outlier_scale = " << fmt(n.outlier_scale) << "\n"
      << "per_channel_events = " << (n.per_channel_events ? "true" : "false")
      << "\n\n";
  };
  noise_section("noise_normal", c.noise_normal);
  noise_section("noise_uniform", c.noise_uniform);
  o << "[cost]\n"
    << "c = " << fmt(c.cost.c) << "\n"
    << "delta = " << fmt(c.cost.delta[0]) << "\n"
    << "gamma = " << fmt(c.cost.gamma[0]) << "\n"
    << "w_weight = " << fmt(c.cost.w_weight[0]) << "\n"
    << "prior_weight = " << fmt(c.cost.prior_weight[0]) << "\n"
    << "w_bound = " << fmt(c.cost.w_bound) << "\n"
    << "v_bound_angle = " << fmt(c.cost.v_bound[0]) << "\n"
    << "v_penalty = " << fmt(c.cost.v_penalty) << "\n\n";
  o << "[estimator]\n"
    << "horizon = " << c.horizon << "\n"
    << "epsilon = " << fmt(c.epsilon) << "\n"
    << "max_iterations = " << c.max_iterations << "\n"
    << "variants =";
  for (const auto& v : c.variants) {
    o << ' ';
    if (const auto* f = std::get_if<FixedAlphaVariant>(&v)) {
      o << "fixed:" << fmt(f->alpha0);
    } else if (const auto* g = std::get_if<GridSearchVariant>(&v)) {
      o << "grid:";
      for (std::size_t i = 0; i < g->grid.size(); ++i)
        o << (i ? "|" : "") << fmt(g->grid[i]);
    } else {
      o << "adaptive:" << std::get<AdaptiveVariant>(v).max_iterations;
    }
  }
  o << "\n\n";
  o << "[solver]\n"
    << "tol = " << fmt(c.solver.tol) << "\n"
    << "max_iter = " << c.solver.max_iter << "\n\n";
  o << "[bench]\n"
    << "trials = " << c.trial_count << "\n"
    << "duration = " << fmt(c.duration_s) << "\n"
    << "seed = " << c.seed << "\n"
    << "initial_guess_sigma = " << fmt(c.initial_guess_sigma) << "\n"
    << "out_dir = " << c.out_dir << "\n";
  return o.str();
}

void validate(const Config& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ConfigError(std::string("config invariant violated: ") + what);
  };
  require(c.vehicle.hitch_length > 0.0, "vehicle.hitch_length > 0");
  require(c.vehicle.ts > 0.0, "vehicle.ts > 0");
  require(c.vehicle.v_max > 0.0, "vehicle.v_max > 0");
  require(c.vehicle.omega_max > 0.0, "vehicle.omega_max > 0");
  require(c.vehicle.a_max > 0.0, "vehicle.a_max > 0");
  require(c.path.row_length > 0.0, "path.row_length > 0");
  require(c.path.speed > 0.0, "path.speed > 0");
  require(c.noise_normal.valid(), "noise_normal scales/probability");
  require(c.noise_uniform.valid(), "noise_uniform scales/probability");
  require(c.cost.valid(), "cost parameters");
  require(c.horizon >= 1, "estimator.horizon >= 1");
  require(c.epsilon > 0.0, "estimator.epsilon > 0");
  require(c.max_iterations >= 1, "estimator.max_iterations >= 1");
  require(!c.variants.empty(), "estimator.variants non-empty");
  for (const auto& v : c.variants) {
    if (const auto* f = std::get_if<FixedAlphaVariant>(&v))
      require(f->alpha0 > 1.0 && f->alpha0 < 2.0, "fixed alpha in (1,2)");
    if (const auto* g = std::get_if<GridSearchVariant>(&v))
      for (double a : g->grid)
        require(a > 1.0 && a < 2.0, "grid alphas in (1,2)");
  }
  require(c.trial_count >= 1, "bench.trials >= 1");
  require(c.duration_s > 0.0, "bench.duration > 0");
  require(c.initial_guess_sigma >= 0.0, "bench.initial_guess_sigma >= 0");
}

ScenarioSpec Config::scenario(const std::string& name) const {
  ScenarioSpec s;
  s.name = name;
  if (name == "normal") {
    s.noise = noise_normal;
    s.noise.kind = NoiseKind::kNormal;
  } else if (name == "uniform") {
    s.noise = noise_uniform;
    s.noise.kind = NoiseKind::kUniform;
  } else {
    throw ConfigError("unknown scenario '" + name + "' (normal|uniform)");
  }
  s.path = path;
  s.path.ts = vehicle.ts;
  s.follower = follower;
  s.vehicle = vehicle;
  s.cost = cost;
  s.variants = variants;
  s.horizon = horizon;
  s.duration_s = duration_s;
  s.trial_count = trial_count;
  s.seed = seed;
  s.initial_guess_sigma = initial_guess_sigma;
  s.solver = solver;
  return s;
}

}  // namespace armhe
