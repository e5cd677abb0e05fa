#include "saddlenet/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace saddlenet {

namespace {

// Ceiling that treats values within a relative 1e-9 of an integer as that
// integer, so closed forms that are integral by hand stay integral.
std::int64_t tolerant_ceil(double x) {
  const double nearest = std::round(x);
  if (std::abs(x - nearest) <= 1e-9 * std::max(1.0, std::abs(x)))
    return static_cast<std::int64_t>(nearest);
  return static_cast<std::int64_t>(std::ceil(x));
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void Constants::validate() const {
  if (!(mu > 0.0)) throw ValidationError("constraint violated: mu > 0 (got mu=" + fmt(mu) + ")");
  if (!(delta > 0.0))
    throw ValidationError("constraint violated: delta > 0 (got delta=" + fmt(delta) + ")");
  if (!(c1() > 0.0))
    throw ValidationError("constraint violated: mu < 1/(2*delta), i.e. c1 = "
                          "(1 - 2*mu*delta)/2 > 0 (got mu=" + fmt(mu) + ", delta=" +
                          fmt(delta) + ", c1=" + fmt(c1()) + ")");
  if (!(sigma2 >= 0.0))
    throw ValidationError("constraint violated: sigma2 >= 0 (got " + fmt(sigma2) + ")");
  if (!(pi_confidence > 0.0 && pi_confidence < 1.0))
    throw ValidationError("constraint violated: 0 < pi < 1 (got pi=" + fmt(pi_confidence) +
                          ")");
  if (!(tau > 0.0)) throw ValidationError("constraint violated: tau > 0 (got " + fmt(tau) + ")");
  if (!(sigma_u2 >= 0.0 && sigma_l2 >= 0.0))
    throw ValidationError("constraint violated: sigma_u2, sigma_l2 >= 0");
  if (sigma_u2 > sigma2)
    throw ValidationError("constraint violated: sigma_u2 <= sigma2 (got sigma_u2=" +
                          fmt(sigma_u2) + ", sigma2=" + fmt(sigma2) + ")");
}

Constants Constants::with_mu(double new_mu) const {
  Constants c = *this;
  c.mu = new_mu;
  return c;
}

SetLabel classify(const Vector& w, const Problem& cost, const Constants& constants) {
  SetLabel out;
  out.grad_norm2 = cost.gradient(w).squaredNorm();
  out.lambda_min = lambda_min(cost.hessian(w));
  if (out.grad_norm2 >= constants.gradient_threshold())
    out.label = SetKind::G;
  else if (out.lambda_min <= -constants.tau)
    out.label = SetKind::H;
  else
    out.label = SetKind::M;
  return out;
}

std::int64_t escape_time_bound(int m_dim, double sigma_u2, double sigma_l2, double mu,
                               double tau) {
  if (!(sigma_l2 > 0.0))
    throw ValidationError("escape_time_bound: sigma_l2 = " + fmt(sigma_l2) +
                          " violates the descent-subspace noise floor (sigma_l2 > 0); "
                          "no finite escape bound");
  if (!(mu > 0.0) || !(tau > 0.0) || m_dim < 1 || sigma_u2 < 0.0)
    throw ValidationError("escape_time_bound: need mu > 0, tau > 0, M >= 1, sigma_u2 >= 0");
  const double ratio =
      std::log(2.0 * m_dim * sigma_u2 / sigma_l2 + 1.0) / std::log1p(2.0 * mu * tau);
  return std::max<std::int64_t>(1, tolerant_ceil(ratio));
}

std::int64_t second_order_iteration_bound(double j0, double j_floor, double mu, double c2,
                                          double pi_confidence, std::int64_t i_s) {
  if (j_floor > j0)
    throw ValidationError("second_order_iteration_bound: J_floor = " + fmt(j_floor) +
                          " exceeds J0 = " + fmt(j0));
  if (!(mu > 0.0 && c2 > 0.0 && pi_confidence > 0.0 && i_s > 0))
    throw ValidationError("second_order_iteration_bound: parameters must be positive");
  return tolerant_ceil((j0 - j_floor) / (mu * mu * c2 * pi_confidence) *
                       static_cast<double>(i_s));
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0 || lo + 1 >= values.size()) return values[lo];
  const double a = values[lo], b = values[lo + 1];
  if (std::isinf(b)) return b;
  return a + frac * (b - a);
}

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ValidationError("loglog_slope needs at least two matched points");
  const auto n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

EscapeStats empirical_escape_time(const RunConfig& tmpl, const Constants& constants,
                                  const ExitCriterion& criterion,
                                  std::span<const std::uint64_t> seeds,
                                  const EscapeOptions& options, Execution exec) {
  if (options.horizon < 1) throw ValidationError("escape horizon must be >= 1");
  if (options.tail_window < 0 || options.tail_window > options.horizon)
    throw ValidationError("tail_window must lie in [0, horizon]");
  if (options.tail_window > 0 && !options.run_to_horizon)
    throw ValidationError("tail_window requires run_to_horizon");

  const Vector p = perron_vector(tmpl.network);
  const AggregateCost cost(tmpl.problems, p);
  const Vector anchor = options.anchor ? *options.anchor : Vector(tmpl.initial.transpose() * p);
  if (anchor.size() != cost.dimension()) throw ValidationError("escape anchor has the wrong dimension");
  const SetLabel label = classify(anchor, cost, constants.with_mu(tmpl.mu));
  if (label.label != SetKind::H) {
    std::ostringstream os;
    os << "escape anchor is not in H (label " << to_char(label.label)
       << ", ||grad||^2=" << label.grad_norm2 << ", lambda_min=" << label.lambda_min
       << ", tau=" << constants.tau << ")";
    throw ValidationError(os.str());
  }
  const double anchor_loss = cost.loss(anchor);

  auto one = [&](std::size_t r) {
    RunConfig cfg = tmpl;
    cfg.seed = seeds[r];
    Simulation sim(cfg);
    ReplicaEscape out;
    out.seed = cfg.seed;
    out.escape_iteration = options.horizon + 1;
    Vector tail = Vector::Zero(anchor.size());
    const std::int64_t tail_start = options.horizon - options.tail_window;
    try {
      for (std::int64_t i = 1; i <= options.horizon; ++i) {
        sim.advance();
        const bool need_check = out.censored;
        if (!need_check && !options.run_to_horizon) break;
        const Vector wc = sim.centroid();
        if (need_check) {
          const bool hit = criterion.kind == ExitCriterion::Kind::ball_exit
                               ? (wc - anchor).norm() > criterion.threshold
                               : anchor_loss - cost.loss(wc) >= criterion.threshold;
          if (hit) {
            out.censored = false;
            out.escape_iteration = i;
            if (!options.run_to_horizon) {
              out.final_centroid = wc;
              break;
            }
          }
        }
        if (i > tail_start) tail += wc;
        out.final_centroid = wc;
      }
    } catch (const DivergenceError&) {
      out.diverged = true;
    }
    if (out.final_centroid.size() == 0) out.final_centroid = sim.centroid();
    if (options.tail_window > 0 && !out.diverged)
      out.tail_centroid = tail / static_cast<double>(options.tail_window);
    return out;
  };

  EscapeStats stats;
  stats.mu = tmpl.mu;
  stats.tau = constants.tau;
  stats.criterion = criterion;
  stats.horizon = options.horizon;
  stats.replicas = map_replicas<ReplicaEscape>(exec, seeds.size(), one);
  std::vector<double> times;
  for (const auto& r : stats.replicas) {
    times.push_back(r.censored ? std::numeric_limits<double>::infinity()
                               : static_cast<double>(r.escape_iteration));
    stats.n_escaped += r.censored ? 0 : 1;
  }
  stats.median = quantile(times, 0.5);
  stats.q1 = quantile(times, 0.25);
  stats.q3 = quantile(times, 0.75);
  return stats;
}

DescentResult descent_experiment(Region region, const RunConfig& tmpl,
                                 const Constants& constants, const Box& start_box,
                                 std::span<const std::uint64_t> seeds, Execution exec,
                                 long max_attempts) {
  const Constants c = constants.with_mu(tmpl.mu);
  c.validate();
  if (start_box.degenerate() || start_box.lo.size() != tmpl.initial.cols())
    throw ValidationError("descent_experiment: start box has zero measure");
  const Vector p = perron_vector(tmpl.network);
  const AggregateCost cost(tmpl.problems, p);
  const SetKind wanted = region == Region::G ? SetKind::G : SetKind::H;
  const std::int64_t steps =
      region == Region::G
          ? 1
          : escape_time_bound(static_cast<int>(tmpl.initial.cols()), c.sigma_u2, c.sigma_l2,
                              c.mu, c.tau);

  struct Outcome {
    Vector start;
    double drop = 0.0;
  };
  auto one = [&](std::size_t r) {
    Rng sampler(seeds[r], kSamplerStream, 0);
    Vector start;
    long attempt = 0;
    for (; attempt < max_attempts; ++attempt) {
      Vector candidate = start_box.sample(sampler);
      if (classify(candidate, cost, c).label == wanted) {
        start = std::move(candidate);
        break;
      }
    }
    if (attempt == max_attempts)
      throw ValidationError(std::string("descent_experiment: no start point found in region ") +
                            (region == Region::G ? "G" : "H") + " after " +
                            std::to_string(max_attempts) + " attempts");
    RunConfig cfg = tmpl;
    cfg.seed = seeds[r];
    cfg.initial = consensus_state(tmpl.network.size(), start).iterates;
    Simulation sim(cfg);
    for (std::int64_t i = 0; i < steps; ++i) sim.advance();
    return Outcome{start, cost.loss(start) - cost.loss(sim.centroid())};
  };

  const auto outcomes = map_replicas<Outcome>(exec, seeds.size(), one);
  DescentResult res;
  res.region = region;
  res.steps = steps;
  double sum = 0.0;
  for (const auto& o : outcomes) {
    res.drops.push_back(o.drop);
    res.starts.push_back(o.start);
    sum += o.drop;
  }
  const double n = static_cast<double>(outcomes.size());
  res.mean_drop = sum / n;
  double ss = 0.0;
  for (double d : res.drops) ss += (d - res.mean_drop) * (d - res.mean_drop);
  res.standard_error = n > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  return res;
}

namespace {

void check_mu_list(std::span<const double> mu_list, bool need_span) {
  if (mu_list.size() < 2) throw ValidationError("sweep needs at least two step sizes");
  for (double mu : mu_list)
    if (!(mu > 0.0)) throw ValidationError("sweep step sizes must be positive");
  const auto [lo, hi] = std::minmax_element(mu_list.begin(), mu_list.end());
  if (need_span && *hi < 4.0 * *lo * (1.0 - 1e-12))
    throw ValidationError("deviation sweep step sizes must span at least a 4x range");
}

}  // namespace

DeviationSweep deviation_scaling_sweep(std::span<const double> mu_list, double horizon_T,
                                       const RunConfig& tmpl,
                                       std::span<const std::uint64_t> seeds,
                                       std::int64_t anchor_iteration, Execution exec) {
  check_mu_list(mu_list, true);
  if (seeds.empty()) throw ValidationError("deviation sweep needs replicas");
  DeviationSweep sweep;
  for (double mu : mu_list) {
    RunConfig cfg = tmpl;
    cfg.mu = mu;
    const double ratio = horizon_T / mu;
    const auto horizon = static_cast<std::int64_t>(std::floor(ratio + 1e-9 * ratio));
    auto one = [&](std::size_t r) {
      RunConfig local = cfg;
      local.seed = seeds[r];
      return coupled_short_term_run(local, anchor_iteration, horizon, horizon_T).steps;
    };
    const auto traces = map_replicas<std::vector<ShortTermStep>>(exec, seeds.size(), one);
    DeviationRow row;
    row.mu = mu;
    row.horizon = horizon;
    const double n = static_cast<double>(traces.size());
    for (std::int64_t i = 0; i < horizon; ++i) {
      ShortTermStep mean;
      for (const auto& t : traces) {
        const auto& s = t[static_cast<std::size_t>(i)];
        mean.dev2 += s.dev2;
        mean.dev3 += s.dev3;
        mean.dev4 += s.dev4;
        mean.model_gap2 += s.model_gap2;
        mean.model2 += s.model2;
      }
      row.dev2 = std::max(row.dev2, mean.dev2 / n);
      row.dev3 = std::max(row.dev3, mean.dev3 / n);
      row.dev4 = std::max(row.dev4, mean.dev4 / n);
      row.model_gap2 = std::max(row.model_gap2, mean.model_gap2 / n);
      row.model2 = std::max(row.model2, mean.model2 / n);
    }
    sweep.rows.push_back(row);
  }
  auto slope = [&](double DeviationRow::*field) {
    std::vector<double> x, y;
    for (const auto& r : sweep.rows) {
      x.push_back(r.mu);
      y.push_back(r.*field);
    }
    return loglog_slope(x, y);
  };
  sweep.slope_dev2 = slope(&DeviationRow::dev2);
  sweep.slope_dev3 = slope(&DeviationRow::dev3);
  sweep.slope_dev4 = slope(&DeviationRow::dev4);
  sweep.slope_model_gap2 = slope(&DeviationRow::model_gap2);
  sweep.slope_model2 = slope(&DeviationRow::model2);
  return sweep;
}

DisagreementSweep disagreement_scaling_sweep(std::span<const double> mu_list,
                                             const RunConfig& tmpl, std::int64_t burn_in,
                                             std::int64_t window,
                                             std::span<const std::uint64_t> seeds,
                                             Execution exec) {
  check_mu_list(mu_list, false);
  if (burn_in < 0 || window < 1) throw ValidationError("need burn_in >= 0 and window >= 1");
  if (seeds.empty()) throw ValidationError("disagreement sweep needs replicas");
  DisagreementSweep sweep;
  for (double mu : mu_list) {
    RunConfig cfg = tmpl;
    cfg.mu = mu;
    auto one = [&](std::size_t r) {
      RunConfig local = cfg;
      local.seed = seeds[r];
      Simulation sim(local);
      for (std::int64_t i = 0; i < burn_in; ++i) sim.advance();
      DisagreementMoments acc;
      for (std::int64_t i = 0; i < window; ++i) {
        sim.advance();
        const auto m = disagreement_moments(sim.state(), sim.perron());
        acc.second += m.second;
        acc.fourth += m.fourth;
      }
      acc.second /= static_cast<double>(window);
      acc.fourth /= static_cast<double>(window);
      return acc;
    };
    const auto per = map_replicas<DisagreementMoments>(exec, seeds.size(), one);
    DisagreementRow row;
    row.mu = mu;
    for (const auto& m : per) {
      row.mean2 += m.second;
      row.mean4 += m.fourth;
    }
    row.mean2 /= static_cast<double>(per.size());
    row.mean4 /= static_cast<double>(per.size());
    sweep.rows.push_back(row);
  }
  std::vector<double> x, y2, y4;
  for (const auto& r : sweep.rows) {
    x.push_back(r.mu);
    y2.push_back(r.mean2);
    y4.push_back(r.mean4);
  }
  sweep.slope2 = loglog_slope(x, y2);
  sweep.slope4 = loglog_slope(x, y4);
  return sweep;
}

}  // namespace saddlenet
