#include "saddlenet/engine.hpp"

#include "saddlenet/analysis.hpp"

#include <cmath>
#include <sstream>

namespace saddlenet {

bool NetworkState::is_consensus() const {
  for (Eigen::Index k = 1; k < iterates.rows(); ++k)
    if (iterates.row(k) != iterates.row(0)) return false;
  return true;
}

NetworkState consensus_state(std::size_t n_agents, const Vector& w) {
  NetworkState s;
  s.iterates = w.transpose().replicate(static_cast<Eigen::Index>(n_agents), 1);
  return s;
}

char to_char(SetKind kind) {
  switch (kind) {
    case SetKind::G: return 'G';
    case SetKind::H: return 'H';
    case SetKind::M: return 'M';
  }
  return '?';
}

void RunConfig::validate() const {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw ValidationError("mu must be positive");
  if (n_iterations < 1) throw ValidationError("n_iterations must be >= 1");
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  if (trace_stride < 1) throw ValidationError("trace_stride must be >= 1");
  if (!(divergence_cap > 0.0)) throw ValidationError("divergence_cap must be positive");
  const auto n = network.size();
  if (n == 0) throw ValidationError("run config has no combination matrix");
  if (!network.cached_perron())
    throw ValidationError("combination matrix is not strongly connected");
  if (problems.size() != n)
    throw ValidationError("need one problem per agent: " + std::to_string(problems.size()) +
                          " problems for " + std::to_string(n) + " agents");
  const auto m = problems.front()->dimension();
  for (const auto& q : problems)
    if (!q || q->dimension() != m)
      throw ValidationError("agent problems must share one dimension");
  if (initial.rows() != static_cast<Eigen::Index>(n) || initial.cols() != m)
    throw ValidationError("initial state must be N x M");
  if (!initial.allFinite()) throw ValidationError("initial state must be finite");
  if (noise.uses_natural_sampling())
    for (const auto& q : problems)
      if (!q->has_sample_gradient())
        throw ValidationError("natural_sampling noise requires a per-sample gradient; "
                              "problem '" + q->name() + "' has none");
}

Matrix adapt_step(const NetworkState& state, const AgentProblems& problems,
                  const NoiseModel& noise, double mu, std::uint64_t seed,
                  Matrix* gradients_out) {
  const auto n = static_cast<Eigen::Index>(state.n_agents());
  if (static_cast<Eigen::Index>(problems.size()) != n)
    throw ValidationError("adapt_step: problem count does not match agent count");
  const std::int64_t next = state.iteration + 1;
  Matrix phi(n, state.dimension());
  if (gradients_out) gradients_out->resize(n, state.dimension());
  for (Eigen::Index k = 0; k < n; ++k) {
    Rng rng(seed, static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(next));
    const Vector w = state.iterates.row(k).transpose();
    const Vector g = stochastic_gradient(*problems[static_cast<std::size_t>(k)], noise, w, rng);
    if (!g.allFinite()) {
      std::ostringstream os;
      os << "non-finite stochastic gradient for agent " << k << " at iteration " << next;
      throw DivergenceError(os.str(), next);
    }
    phi.row(k) = (w - mu * g).transpose();
    if (gradients_out) gradients_out->row(k) = g.transpose();
  }
  return phi;
}

NetworkState combine_step(const Matrix& phi, const CombinationMatrix& A,
                          std::int64_t iteration) {
  const auto n = phi.rows();
  if (static_cast<std::size_t>(n) != A.size())
    throw ValidationError("combine_step: " + std::to_string(n) + " agents but a " +
                          std::to_string(A.size()) + "x" + std::to_string(A.size()) +
                          " combination matrix");
  const Matrix& a = A.entries();
  NetworkState out;
  out.iteration = iteration;
  out.iterates = phi;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      if (l != k && a(l, k) != 0.0)
        out.iterates.row(k) += a(l, k) * (phi.row(l) - phi.row(k));
  return out;
}

Vector centroid(const NetworkState& state, const Vector& p) {
  if (p.size() != state.iterates.rows())
    throw ValidationError("centroid: Perron vector length mismatch");
  return state.iterates.transpose() * p;
}

DisagreementMoments disagreement_moments(const NetworkState& state, const Vector& p) {
  const Vector wc = centroid(state, p);
  DisagreementMoments m;
  for (Eigen::Index k = 0; k < state.iterates.rows(); ++k) {
    const double d2 = (state.iterates.row(k).transpose() - wc).squaredNorm();
    m.second += p(k) * d2;
    m.fourth += p(k) * d2 * d2;
  }
  return m;
}

PerturbationTerms perturbation_terms(const NetworkState& state,
                                     const AgentProblems& problems, const Vector& p,
                                     const Matrix& stochastic_gradients) {
  const Vector wc = centroid(state, p);
  PerturbationTerms t{Vector::Zero(wc.size()), Vector::Zero(wc.size())};
  for (Eigen::Index k = 0; k < state.iterates.rows(); ++k) {
    const auto& q = *problems[static_cast<std::size_t>(k)];
    const Vector wk = state.iterates.row(k).transpose();
    const Vector gk = q.gradient(wk);
    t.d += p(k) * (gk - q.gradient(wc));
    t.s += p(k) * (stochastic_gradients.row(k).transpose() - gk);
  }
  return t;
}

Simulation::Simulation(const RunConfig& config)
    : config_(&config),
      p_(perron_vector(config.network)),
      cost_(config.problems, p_) {
  config.validate();
  state_.iterates = config.initial;
  state_.iteration = 0;
}

void Simulation::check_finite() const {
  for (Eigen::Index k = 0; k < state_.iterates.rows(); ++k) {
    const double norm = state_.iterates.row(k).norm();
    if (!std::isfinite(norm) || norm > config_->divergence_cap) {
      std::ostringstream os;
      os << "agent " << k << " left the divergence cap (||w|| = " << norm << " > "
         << config_->divergence_cap << ") at iteration " << state_.iteration;
      throw DivergenceError(os.str(), state_.iteration);
    }
  }
}

PerturbationTerms Simulation::step() {
  const Matrix phi = adapt_step(state_, config_->problems, config_->noise, config_->mu,
                                config_->seed, &gradients_);
  PerturbationTerms terms = perturbation_terms(state_, config_->problems, p_, gradients_);
  state_ = combine_step(phi, config_->network, state_.iteration + 1);
  check_finite();
  return terms;
}

void Simulation::advance() {
  const Matrix phi =
      adapt_step(state_, config_->problems, config_->noise, config_->mu, config_->seed);
  state_ = combine_step(phi, config_->network, state_.iteration + 1);
  check_finite();
}

namespace {

TraceRecord make_record(const Simulation& sim, const RunConfig& config,
                        const Constants* labels) {
  TraceRecord r;
  r.iteration = sim.state().iteration;
  r.centroid = sim.centroid();
  r.centroid_loss = sim.cost().loss(r.centroid);
  r.centroid_grad_norm2 = sim.cost().gradient(r.centroid).squaredNorm();
  const auto dm = disagreement_moments(sim.state(), sim.perron());
  r.disagreement2 = dm.second;
  r.disagreement4 = dm.fourth;
  if (labels) r.set_label = classify(r.centroid, sim.cost(), *labels).label;
  r.in_burn_in = r.iteration < config.burn_in;
  if (config.record_agents) r.agents = sim.state().iterates;
  return r;
}

}  // namespace

RunResult run(const RunConfig& config, const Constants* labels) {
  Simulation sim(config);
  RunResult result;
  result.records.push_back(make_record(sim, config, labels));
  try {
    for (std::int64_t i = 1; i <= config.n_iterations; ++i) {
      sim.advance();
      if (i % config.trace_stride == 0)
        result.records.push_back(make_record(sim, config, labels));
    }
  } catch (const DivergenceError& e) {
    result.divergence = e.what();
    result.divergence_iteration = e.iteration();
  }
  return result;
}

ShortTermTrace coupled_short_term_run(const RunConfig& config,
                                      std::int64_t anchor_iteration,
                                      std::int64_t horizon, double horizon_T) {
  if (anchor_iteration < 0 || horizon < 1)
    throw ValidationError("coupled_short_term_run: need anchor >= 0 and horizon >= 1");
  Simulation sim(config);
  for (std::int64_t i = 0; i < anchor_iteration; ++i) sim.advance();

  ShortTermTrace trace;
  trace.anchor = sim.centroid();
  trace.anchor_gradient = sim.cost().gradient(trace.anchor);
  trace.anchor_hessian = sim.cost().hessian(trace.anchor);
  if (static_cast<double>(horizon) > horizon_T / config.mu) {
    std::ostringstream os;
    os << "horizon " << horizon << " exceeds T/mu = " << horizon_T / config.mu;
    trace.warning = os.str();
  }

  const Eigen::Index m = trace.anchor.size();
  const Matrix propagator = Matrix::Identity(m, m) - config.mu * trace.anchor_hessian;
  Vector model = Vector::Zero(m);
  trace.steps.reserve(static_cast<std::size_t>(horizon));
  for (std::int64_t i = 0; i < horizon; ++i) {
    const PerturbationTerms terms = sim.step();
    model = (propagator * model + config.mu * (trace.anchor_gradient + terms.s)).eval();
    const Vector dev = trace.anchor - sim.centroid();
    ShortTermStep st;
    st.dev2 = dev.squaredNorm();
    st.dev3 = st.dev2 * std::sqrt(st.dev2);
    st.dev4 = st.dev2 * st.dev2;
    st.model_gap2 = (dev - model).squaredNorm();
    st.model2 = model.squaredNorm();
    trace.steps.push_back(st);
  }
  return trace;
}

}  // namespace saddlenet
