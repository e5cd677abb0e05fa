#include "saddlenet/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace saddlenet {

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::single_run: return "single_run";
    case ExperimentKind::escape_sweep: return "escape_sweep";
    case ExperimentKind::deviation_sweep: return "deviation_sweep";
    case ExperimentKind::descent_check: return "descent_check";
    case ExperimentKind::surface_grid: return "surface_grid";
  }
  return "?";
}

namespace {

ExperimentKind parse_kind(const std::string& s) {
  for (auto k : {ExperimentKind::single_run, ExperimentKind::escape_sweep,
                 ExperimentKind::deviation_sweep, ExperimentKind::descent_check,
                 ExperimentKind::surface_grid})
    if (to_string(k) == s) return k;
  throw ValidationError("field 'experiment': unknown experiment kind '" + s + "'");
}

bool nonnegative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

// Reads one JSON object, remembering which keys were consumed so leftovers can
// be reported as unknown fields.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError("field '" + display() + "' must be an object");
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ValidationError("missing required field '" + child(key) + "'");
    return convert<T>(j_.at(key), key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!used_.count(it.key()))
        throw ValidationError("unknown field '" + child(it.key()) + "'");
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  template <class T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ValidationError("");
      } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
        if (!v.is_number_integer()) throw ValidationError("");
        if constexpr (std::is_unsigned_v<T>)
          if (!nonnegative_integer(v)) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ValidationError("");
      } else if constexpr (std::is_same_v<T, std::string>) {
        if (!v.is_string()) throw ValidationError("");
      }
      return v.get<T>();
    } catch (const std::exception&) {
      throw ValidationError("field '" + child(key) + "' has the wrong type (got " +
                            v.dump() + ")");
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::vector<double> number_list(const json& v, const std::string& path) {
  if (!v.is_array()) throw ValidationError("field '" + path + "' must be an array of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) throw ValidationError("field '" + path + "' must contain only numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<double> matrix_rows(const json& v, const std::string& path, std::size_t n) {
  // Accepts a flat row-major list or a list of rows.
  std::vector<double> out;
  if (v.is_array() && !v.empty() && v.front().is_array()) {
    if (v.size() != n) throw ValidationError("field '" + path + "' must have " + std::to_string(n) + " rows");
    for (const auto& row : v) {
      auto r = number_list(row, path);
      if (r.size() != n)
        throw ValidationError("field '" + path + "' rows must have " + std::to_string(n) + " entries");
      out.insert(out.end(), r.begin(), r.end());
    }
  } else {
    out = number_list(v, path);
    if (out.size() != n * n)
      throw ValidationError("field '" + path + "' must hold " + std::to_string(n * n) + " entries");
  }
  return out;
}

Matrix to_matrix(const std::vector<double>& flat, std::size_t n) {
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * n + j];
  return m;
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

NetworkSpec parse_network(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  NetworkSpec spec;
  spec.n_agents = r.require<std::size_t>("n_agents");
  if (spec.n_agents == 0) throw ValidationError("field '" + r.child("n_agents") + "' must be >= 1");
  const auto topology = r.get<std::string>("topology", "edges");
  if (topology == "complete" || topology == "ring") {
    if (r.has("edges"))
      throw ValidationError("field '" + r.child("edges") + "' conflicts with topology '" +
                            topology + "'");
    const Topology t = topology == "complete" ? Topology::complete(spec.n_agents)
                                              : Topology::ring(spec.n_agents);
    for (auto [a, b] : t.edges) spec.edges.push_back({a, b});
  } else if (topology == "edges") {
    if (r.has("edges")) {
      const json& e = r.raw("edges");
      if (!e.is_array()) throw ValidationError("field '" + r.child("edges") + "' must be an array");
      for (const auto& pair : e) {
        if (!pair.is_array() || pair.size() != 2 || !nonnegative_integer(pair[0]) ||
            !nonnegative_integer(pair[1]))
          throw ValidationError("field '" + r.child("edges") +
                                "' entries must be pairs of agent indices");
        spec.edges.push_back({pair[0].get<std::size_t>(), pair[1].get<std::size_t>()});
      }
    }
  } else {
    throw ValidationError("field '" + r.child("topology") + "': unknown topology '" + topology +
                          "' (expected complete, ring or edges)");
  }
  if (r.has("self_loops")) {
    const json& s = r.raw("self_loops");
    if (s.is_boolean()) {
      spec.self_loops.assign(spec.n_agents, s.get<bool>());
    } else if (s.is_array()) {
      for (const auto& b : s) {
        if (!b.is_boolean())
          throw ValidationError("field '" + r.child("self_loops") + "' must hold booleans");
        spec.self_loops.push_back(b.get<bool>());
      }
    } else {
      throw ValidationError("field '" + r.child("self_loops") + "' must be a boolean or list");
    }
  } else {
    spec.self_loops.assign(spec.n_agents, true);
  }
  spec.rule = r.get<std::string>("rule", "averaging");
  if (spec.rule != "averaging" && spec.rule != "metropolis" && spec.rule != "explicit")
    throw ValidationError("field '" + r.child("rule") + "': unknown rule '" + spec.rule +
                          "' (expected averaging, metropolis or explicit)");
  if (r.has("entries")) {
    if (spec.rule != "explicit")
      throw ValidationError("field '" + r.child("entries") + "' is only valid with rule 'explicit'");
    spec.entries = matrix_rows(r.raw("entries"), r.child("entries"), spec.n_agents);
  } else if (spec.rule == "explicit") {
    throw ValidationError("missing required field '" + r.child("entries") + "' for rule 'explicit'");
  }
  r.finish();
  return spec;
}

ProblemSpec parse_problem(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  ProblemSpec spec;
  spec.kind = r.get<std::string>("kind", "logistic");
  if (spec.kind == "logistic") {
    spec.reg = r.get<double>("reg", 0.1);
    spec.quadrature_nodes = r.get<int>("quadrature_nodes", LogisticNNProblem::kDefaultNodes);
    if (spec.quadrature_nodes < 2)
      throw ValidationError("field '" + r.child("quadrature_nodes") + "' must be >= 2");
    if (!(spec.reg >= 0.0)) throw ValidationError("field '" + r.child("reg") + "' must be >= 0");
  } else if (spec.kind == "quadratic_saddle" || spec.kind == "cubic_saddle") {
    const json& h = r.raw("hessian");
    std::size_t m = 0;
    if (h.is_array() && !h.empty() && h.front().is_array()) m = h.size();
    else if (h.is_array()) m = static_cast<std::size_t>(std::llround(std::sqrt(double(h.size()))));
    if (m == 0) throw ValidationError("field '" + r.child("hessian") + "' must be a square matrix");
    spec.hessian = matrix_rows(h, r.child("hessian"), m);
    if (spec.kind == "cubic_saddle") {
      spec.direction = number_list(r.raw("direction"), r.child("direction"));
      spec.kappa = r.require<double>("kappa");
    }
  } else {
    throw ValidationError("field '" + r.child("kind") + "': unknown problem kind '" + spec.kind + "'");
  }
  r.finish();
  return spec;
}

NoiseSpec parse_noise(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  NoiseSpec spec;
  if (r.has("components")) {
    const json& comps = r.raw("components");
    if (!comps.is_array()) throw ValidationError("field '" + r.child("components") + "' must be an array");
    for (std::size_t i = 0; i < comps.size(); ++i) {
      ObjectReader c(comps[i], r.child("components") + "[" + std::to_string(i) + "]");
      NoiseComponentSpec cs;
      cs.kind = c.require<std::string>("kind");
      if (cs.kind == "directional") {
        cs.direction = number_list(c.raw("direction"), c.child("direction"));
        cs.stddev = c.require<double>("std");
      } else if (cs.kind == "isotropic") {
        cs.stddev = c.require<double>("std");
      } else if (cs.kind != "natural_sampling") {
        throw ValidationError("field '" + c.child("kind") + "': unknown noise kind '" + cs.kind + "'");
      }
      c.finish();
      spec.components.push_back(cs);
    }
  }
  if (r.has("declared")) {
    ObjectReader d(r.raw("declared"), r.child("declared"));
    spec.declared.sigma2 = d.get<double>("sigma2", 0.0);
    spec.declared.sigma4 = d.get<double>("sigma4", 0.0);
    spec.declared.sigma_l2 = d.get<double>("sigma_l2", 0.0);
    spec.declared.sigma_u2 = d.get<double>("sigma_u2", 0.0);
    spec.declared.beta_r = d.get<double>("beta_r", 0.0);
    spec.declared.gamma = d.get<double>("gamma", 1.0);
    d.finish();
  }
  r.finish();
  return spec;
}

RunSpec parse_run(const json& j) {
  ObjectReader r(j, "run");
  RunSpec spec;
  spec.mu = r.require<double>("mu");
  spec.n_iterations = r.get<std::int64_t>("n_iterations", 1);
  spec.seed = r.get<std::uint64_t>("seed", 0);
  spec.burn_in = r.get<std::int64_t>("burn_in", 0);
  spec.trace_stride = r.get<std::int64_t>("trace_stride", 1);
  spec.divergence_cap = r.get<double>("divergence_cap", 1e6);
  spec.record_agents = r.get<bool>("record_agents", false);
  if (!r.has("network")) throw ValidationError("missing required field 'run.network'");
  spec.network = parse_network(r.raw("network"), "run.network");

  const std::size_t n = spec.network.n_agents;
  if (r.has("problem")) {
    const json& p = r.raw("problem");
    if (p.is_array()) {
      if (p.size() != n)
        throw ValidationError("field 'run.problem' must list one problem per agent (" +
                              std::to_string(n) + ")");
      for (std::size_t k = 0; k < n; ++k)
        spec.problems.push_back(parse_problem(p[k], "run.problem[" + std::to_string(k) + "]"));
    } else {
      spec.problems.assign(n, parse_problem(p, "run.problem"));
    }
  } else {
    spec.problems.assign(n, ProblemSpec{});
  }
  spec.noise = r.has("noise") ? parse_noise(r.raw("noise"), "run.noise") : NoiseSpec{};

  if (r.has("initial")) {
    ObjectReader init(r.raw("initial"), "run.initial");
    if (init.has("point") == init.has("agents"))
      throw ValidationError("field 'run.initial' needs exactly one of 'point' or 'agents'");
    if (init.has("point")) {
      spec.initial.assign(n, number_list(init.raw("point"), "run.initial.point"));
    } else {
      const json& a = init.raw("agents");
      if (!a.is_array() || a.size() != n)
        throw ValidationError("field 'run.initial.agents' must hold one row per agent");
      for (std::size_t k = 0; k < n; ++k)
        spec.initial.push_back(number_list(a[k], "run.initial.agents"));
    }
    init.finish();
  }
  r.finish();
  return spec;
}

void check_mu_constraint(double mu, const ConstantsSpec& c, const std::string& where) {
  if (!(mu < 1.0 / (2.0 * c.delta)))
    throw ValidationError("constraint violated at " + where +
                          ": mu < 1/(2*delta) so that c1 = (1 - 2*mu*delta)/2 > 0 (mu=" +
                          std::to_string(mu) + ", delta=" + std::to_string(c.delta) + ")");
}

std::vector<double> mu_list_of(ObjectReader& r, const std::string& key) {
  auto list = number_list(r.raw(key), r.child(key));
  if (list.empty()) throw ValidationError("field '" + r.child(key) + "' must not be empty");
  for (double mu : list)
    if (!(mu > 0.0)) throw ValidationError("field '" + r.child(key) + "' entries must be positive");
  return list;
}

}  // namespace

CombinationMatrix build_network(const NetworkSpec& spec) {
  Topology t;
  t.n_agents = spec.n_agents;
  t.self_loops = spec.self_loops;
  for (auto e : spec.edges) t.edges.emplace_back(e[0], e[1]);
  if (spec.rule == "averaging") return build_combination_matrix(t, AveragingRule{});
  if (spec.rule == "metropolis") return build_combination_matrix(t, MetropolisRule{});
  return build_combination_matrix(t, ExplicitWeights{to_matrix(spec.entries, spec.n_agents)});
}

namespace {

ProblemPtr build_problem(const ProblemSpec& spec) {
  if (spec.kind == "logistic")
    return std::make_shared<LogisticNNProblem>(spec.reg, spec.quadrature_nodes);
  const auto m = static_cast<std::size_t>(std::llround(std::sqrt(double(spec.hessian.size()))));
  if (spec.kind == "quadratic_saddle")
    return std::make_shared<QuadraticSaddleProblem>(to_matrix(spec.hessian, m));
  return std::make_shared<CubicSaddleProblem>(to_matrix(spec.hessian, m), to_vector(spec.direction),
                                              spec.kappa);
}

}  // namespace

AgentProblems build_problems(const RunSpec& spec) {
  AgentProblems out;
  // Identical specs share one instance so the aggregate cost is exact.
  std::vector<std::pair<ProblemSpec, ProblemPtr>> cache;
  for (const auto& ps : spec.problems) {
    auto hit = std::find_if(cache.begin(), cache.end(), [&](auto& c) { return c.first == ps; });
    if (hit == cache.end()) {
      cache.emplace_back(ps, build_problem(ps));
      hit = cache.end() - 1;
    }
    out.push_back(hit->second);
  }
  return out;
}

NoiseModel build_noise(const NoiseSpec& spec) {
  std::vector<NoiseComponent> comps;
  for (const auto& c : spec.components) {
    if (c.kind == "natural_sampling") comps.emplace_back(NaturalSampling{});
    if (c.kind == "directional") comps.emplace_back(DirectionalNoise{to_vector(c.direction), c.stddev});
    if (c.kind == "isotropic") comps.emplace_back(IsotropicNoise{c.stddev});
  }
  return NoiseModel(std::move(comps), spec.declared);
}

RunConfig build_run_config(const RunSpec& spec) {
  RunConfig cfg;
  cfg.mu = spec.mu;
  cfg.n_iterations = spec.n_iterations;
  cfg.seed = spec.seed;
  cfg.burn_in = spec.burn_in;
  cfg.trace_stride = spec.trace_stride;
  cfg.divergence_cap = spec.divergence_cap;
  cfg.record_agents = spec.record_agents;
  cfg.network = build_network(spec.network);
  cfg.problems = build_problems(spec);
  cfg.noise = build_noise(spec.noise);
  const auto m = cfg.problems.front()->dimension();
  cfg.initial = Matrix::Zero(static_cast<Eigen::Index>(spec.network.n_agents), m);
  for (std::size_t k = 0; k < spec.initial.size(); ++k) {
    if (static_cast<Eigen::Index>(spec.initial[k].size()) != m)
      throw ValidationError("field 'run.initial': agent " + std::to_string(k) +
                            " has dimension " + std::to_string(spec.initial[k].size()) +
                            ", problem dimension is " + std::to_string(m));
    cfg.initial.row(static_cast<Eigen::Index>(k)) = to_vector(spec.initial[k]).transpose();
  }
  cfg.validate();
  return cfg;
}

Constants build_constants(const ConstantsSpec& spec, double mu, const DeclaredMoments& noise) {
  Constants c;
  c.mu = mu;
  c.delta = spec.delta;
  c.sigma2 = noise.sigma2;
  c.pi_confidence = spec.pi;
  c.tau = spec.tau;
  c.sigma_u2 = noise.sigma_u2;
  c.sigma_l2 = noise.sigma_l2;
  c.validate();
  return c;
}

ExperimentConfig validate_config(const json& document) {
  ObjectReader r(document, "");
  ExperimentConfig cfg;
  cfg.schema_version = r.require<int>("schema_version");
  if (cfg.schema_version != kSchemaVersion)
    throw ValidationError("field 'schema_version': unsupported version " +
                          std::to_string(cfg.schema_version) + " (expected " +
                          std::to_string(kSchemaVersion) + ")");
  cfg.experiment = parse_kind(r.require<std::string>("experiment"));
  cfg.output_dir = r.get<std::string>("output_dir", "out");
  if (!r.has("run")) throw ValidationError("missing required field 'run'");
  cfg.run = parse_run(r.raw("run"));

  if (r.has("constants")) {
    ObjectReader c(r.raw("constants"), "constants");
    ConstantsSpec cs;
    cs.delta = c.require<double>("delta");
    cs.pi = c.get<double>("pi", 0.5);
    cs.tau = c.get<double>("tau", 0.1);
    c.finish();
    cfg.constants = cs;
  }

  if (r.has("replica_seeds") && r.has("replicas"))
    throw ValidationError("give either 'replica_seeds' or 'replicas', not both");
  if (r.has("replica_seeds")) {
    const json& s = r.raw("replica_seeds");
    if (!s.is_array()) throw ValidationError("field 'replica_seeds' must be an array");
    for (const auto& v : s) {
      if (!nonnegative_integer(v))
        throw ValidationError("field 'replica_seeds' must hold nonnegative integers");
      cfg.replica_seeds.push_back(v.get<std::uint64_t>());
    }
  } else if (r.has("replicas")) {
    ObjectReader rep(r.raw("replicas"), "replicas");
    const auto count = rep.require<std::size_t>("count");
    const auto master = rep.get<std::uint64_t>("master_seed", cfg.run.seed);
    rep.finish();
    cfg.replica_seeds = derive_seeds(master, count);
  }
  {
    auto sorted = cfg.replica_seeds;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      throw ValidationError("field 'replica_seeds': seeds must be distinct");
  }

  if (r.has("escape")) {
    ObjectReader e(r.raw("escape"), "escape");
    EscapeSpec es;
    es.mu_list = e.has("mu_list") ? mu_list_of(e, "mu_list") : std::vector<double>{cfg.run.mu};
    es.criterion = e.get<std::string>("criterion", "ball_exit");
    if (es.criterion != "ball_exit" && es.criterion != "loss_drop" &&
        es.criterion != "theorem_descent")
      throw ValidationError("field 'escape.criterion': unknown criterion '" + es.criterion + "'");
    es.threshold = e.get<double>("threshold", es.criterion == "ball_exit" ? 0.1 : 0.0);
    es.horizon = e.get<std::int64_t>("horizon", 50'000);
    es.run_to_horizon = e.get<bool>("run_to_horizon", false);
    es.tail_window = e.get<std::int64_t>("tail_window", 0);
    e.finish();
    if (es.criterion != "theorem_descent" && !(es.threshold > 0.0))
      throw ValidationError("field 'escape.threshold' must be positive");
    if (es.horizon < 1) throw ValidationError("field 'escape.horizon' must be >= 1");
    if (es.tail_window < 0 || es.tail_window > es.horizon ||
        (es.tail_window > 0 && !es.run_to_horizon))
      throw ValidationError("field 'escape.tail_window' must lie in [0, horizon] and needs run_to_horizon");
    cfg.escape = es;
  }
  if (r.has("deviation")) {
    ObjectReader d(r.raw("deviation"), "deviation");
    DeviationSpec ds;
    ds.mu_list = mu_list_of(d, "mu_list");
    ds.horizon_T = d.get<double>("T", 1.0);
    ds.anchor_iteration = d.get<std::int64_t>("anchor_iteration", 0);
    ds.disagreement_burn_in = d.get<std::int64_t>("disagreement_burn_in", 0);
    ds.disagreement_window = d.get<std::int64_t>("disagreement_window", 0);
    d.finish();
    if (ds.mu_list.size() < 2)
      throw ValidationError("field 'deviation.mu_list' needs at least two step sizes");
    const auto [lo, hi] = std::minmax_element(ds.mu_list.begin(), ds.mu_list.end());
    if (*hi < 4.0 * *lo * (1.0 - 1e-12))
      throw ValidationError("field 'deviation.mu_list' must span at least a 4x range");
    if (!(ds.horizon_T > 0.0)) throw ValidationError("field 'deviation.T' must be positive");
    if (ds.anchor_iteration < 0 || ds.disagreement_burn_in < 0 || ds.disagreement_window < 0)
      throw ValidationError("deviation iteration counts must be >= 0");
    cfg.deviation = ds;
  }
  if (r.has("descent")) {
    ObjectReader d(r.raw("descent"), "descent");
    DescentSpec ds;
    ds.region = d.get<std::string>("region", "H");
    if (ds.region != "G" && ds.region != "H")
      throw ValidationError("field 'descent.region' must be 'G' or 'H'");
    ds.box_lo = number_list(d.raw("box_lo"), "descent.box_lo");
    ds.box_hi = number_list(d.raw("box_hi"), "descent.box_hi");
    ds.max_attempts = d.get<long>("max_attempts", 100'000);
    d.finish();
    cfg.descent = ds;
  }
  if (r.has("surface")) {
    ObjectReader s(r.raw("surface"), "surface");
    SurfaceSpec ss;
    if (s.has("lo")) ss.lo = number_list(s.raw("lo"), "surface.lo");
    if (s.has("hi")) ss.hi = number_list(s.raw("hi"), "surface.hi");
    if (s.has("points")) {
      ss.points.clear();
      for (const auto& v : s.raw("points")) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 2)
          throw ValidationError("field 'surface.points' entries must be integers >= 2");
        ss.points.push_back(v.get<std::int64_t>());
      }
    }
    s.finish();
    if (ss.lo.size() != 2 || ss.hi.size() != 2 || ss.points.size() != 2)
      throw ValidationError("field 'surface' describes a 2-D grid: lo, hi, points need 2 entries");
    if (!(ss.lo[0] < ss.hi[0] && ss.lo[1] < ss.hi[1]))
      throw ValidationError("field 'surface': lo must be below hi");
    cfg.surface = ss;
  }
  r.finish();

  // Cross-field requirements.
  const auto kind = cfg.experiment;
  auto need = [&](bool present, const char* section) {
    if (!present)
      throw ValidationError(std::string("experiment '") + to_string(kind) +
                            "' requires the '" + section + "' section");
  };
  if (kind == ExperimentKind::escape_sweep) {
    need(cfg.escape.has_value(), "escape");
    need(cfg.constants.has_value(), "constants");
  }
  if (kind == ExperimentKind::deviation_sweep) need(cfg.deviation.has_value(), "deviation");
  if (kind == ExperimentKind::descent_check) {
    need(cfg.descent.has_value(), "descent");
    need(cfg.constants.has_value(), "constants");
  }
  if (kind == ExperimentKind::surface_grid && !cfg.surface) cfg.surface = SurfaceSpec{};
  if ((kind == ExperimentKind::escape_sweep || kind == ExperimentKind::deviation_sweep ||
       kind == ExperimentKind::descent_check) &&
      cfg.replica_seeds.empty())
    throw ValidationError("experiment '" + to_string(kind) +
                          "' requires 'replica_seeds' or 'replicas'");

  if (cfg.constants) {
    check_mu_constraint(cfg.run.mu, *cfg.constants, "run.mu");
    if (cfg.escape)
      for (double mu : cfg.escape->mu_list) check_mu_constraint(mu, *cfg.constants, "escape.mu_list");
    if (cfg.deviation)
      for (double mu : cfg.deviation->mu_list)
        check_mu_constraint(mu, *cfg.constants, "deviation.mu_list");
    build_constants(*cfg.constants, cfg.run.mu, cfg.run.noise.declared);
  }
  if (cfg.escape && cfg.escape->criterion == "theorem_descent" &&
      !(cfg.run.noise.declared.sigma_u2 > 0.0))
    throw ValidationError("escape criterion 'theorem_descent' needs run.noise.declared.sigma_u2 > 0");
  if (cfg.run.initial.empty()) {
    // Default start: every agent at the origin of the problem's space.
    const auto m = build_problems(cfg.run).front()->dimension();
    cfg.run.initial.assign(cfg.run.network.n_agents,
                           std::vector<double>(static_cast<std::size_t>(m), 0.0));
  }
  if (cfg.descent) {
    const auto m = cfg.run.initial.front().size();
    if (cfg.descent->box_lo.size() != m || cfg.descent->box_hi.size() != m)
      throw ValidationError("field 'descent.box_lo/box_hi' must match the problem dimension");
  }
  if (kind == ExperimentKind::surface_grid && cfg.run.initial.front().size() != 2)
    throw ValidationError("surface_grid needs a two-dimensional problem");

  // Builds every domain object once so structural errors surface here.
  build_run_config(cfg.run);
  return cfg;
}

namespace {

json network_json(const NetworkSpec& s) {
  json j;
  j["n_agents"] = s.n_agents;
  j["topology"] = "edges";
  json edges = json::array();
  for (auto e : s.edges) edges.push_back({e[0], e[1]});
  j["edges"] = edges;
  j["self_loops"] = s.self_loops;
  j["rule"] = s.rule;
  if (s.rule == "explicit") j["entries"] = s.entries;
  return j;
}

json problem_json(const ProblemSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "logistic") {
    j["reg"] = s.reg;
    j["quadrature_nodes"] = s.quadrature_nodes;
  } else {
    j["hessian"] = s.hessian;
    if (s.kind == "cubic_saddle") {
      j["direction"] = s.direction;
      j["kappa"] = s.kappa;
    }
  }
  return j;
}

json noise_json(const NoiseSpec& s) {
  json comps = json::array();
  for (const auto& c : s.components) {
    json cj;
    cj["kind"] = c.kind;
    if (c.kind == "directional") cj["direction"] = c.direction;
    if (c.kind != "natural_sampling") cj["std"] = c.stddev;
    comps.push_back(cj);
  }
  const auto& d = s.declared;
  return json{{"components", comps},
              {"declared",
               {{"sigma2", d.sigma2},
                {"sigma4", d.sigma4},
                {"sigma_l2", d.sigma_l2},
                {"sigma_u2", d.sigma_u2},
                {"beta_r", d.beta_r},
                {"gamma", d.gamma}}}};
}

}  // namespace

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["schema_version"] = cfg.schema_version;
  j["experiment"] = to_string(cfg.experiment);
  j["output_dir"] = cfg.output_dir;
  const auto& r = cfg.run;
  json run;
  run["mu"] = r.mu;
  run["n_iterations"] = r.n_iterations;
  run["seed"] = r.seed;
  run["burn_in"] = r.burn_in;
  run["trace_stride"] = r.trace_stride;
  run["divergence_cap"] = r.divergence_cap;
  run["record_agents"] = r.record_agents;
  run["network"] = network_json(r.network);
  json problems = json::array();
  for (const auto& p : r.problems) problems.push_back(problem_json(p));
  run["problem"] = problems;
  run["noise"] = noise_json(r.noise);
  run["initial"] = json{{"agents", r.initial}};
  j["run"] = run;
  if (cfg.constants)
    j["constants"] = {{"delta", cfg.constants->delta},
                      {"pi", cfg.constants->pi},
                      {"tau", cfg.constants->tau}};
  j["replica_seeds"] = cfg.replica_seeds;
  if (cfg.escape) {
    const auto& e = *cfg.escape;
    j["escape"] = {{"mu_list", e.mu_list},       {"criterion", e.criterion},
                   {"threshold", e.threshold},   {"horizon", e.horizon},
                   {"run_to_horizon", e.run_to_horizon}, {"tail_window", e.tail_window}};
  }
  if (cfg.deviation) {
    const auto& d = *cfg.deviation;
    j["deviation"] = {{"mu_list", d.mu_list},
                      {"T", d.horizon_T},
                      {"anchor_iteration", d.anchor_iteration},
                      {"disagreement_burn_in", d.disagreement_burn_in},
                      {"disagreement_window", d.disagreement_window}};
  }
  if (cfg.descent) {
    const auto& d = *cfg.descent;
    j["descent"] = {{"region", d.region},
                    {"box_lo", d.box_lo},
                    {"box_hi", d.box_hi},
                    {"max_attempts", d.max_attempts}};
  }
  if (cfg.surface) {
    const auto& s = *cfg.surface;
    j["surface"] = {{"lo", s.lo}, {"hi", s.hi}, {"points", s.points}};
  }
  return j;
}

}  // namespace saddlenet
