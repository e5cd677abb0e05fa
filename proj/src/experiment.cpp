#include "saddlenet/experiment.hpp"

#include "saddlenet/analysis.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace saddlenet {

namespace fs = std::filesystem;

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 digest failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

namespace {

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) text_ += ',';
      text_ += cells[i];
    }
    text_ += '\n';
  }

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

std::string num(double v) { return format_double(v); }
std::string num(std::int64_t v) { return std::to_string(v); }
std::string num(std::uint64_t v) { return std::to_string(v); }

std::vector<std::string> indexed(const std::string& prefix, Eigen::Index m) {
  std::vector<std::string> out;
  for (Eigen::Index i = 0; i < m; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

void append(std::vector<std::string>& cells, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) cells.push_back(num(v(i)));
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Collects outputs and writes the manifest once everything else is on disk.
class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  void write(const std::string& name, const std::string& content,
             const std::vector<std::uint64_t>& seeds) {
    const fs::path path = dir_ / name;
    {
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
      out << content;
      if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
    }
    files_.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"seeds", seeds}});
  }

  fs::path write_manifest(json manifest) {
    manifest["files"] = files_;
    const fs::path path = dir_ / "manifest.json";
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << manifest.dump(2) << '\n';
    if (!out.flush()) throw IoError("write failed for '" + path.string() + "'");
    return path;
  }

 private:
  fs::path dir_;
  json files_ = json::array();
};

struct Status {
  int code = kExitOk;
  std::string message;
};

std::string trace_csv(const RunResult& result, Eigen::Index m) {
  auto header = std::vector<std::string>{"iter"};
  for (auto& c : indexed("wc_", m)) header.push_back(c);
  for (const char* c : {"loss", "grad_norm2", "disagree2", "disagree4", "label", "burn_in"})
    header.emplace_back(c);
  Csv csv(header);
  for (const auto& rec : result.records) {
    std::vector<std::string> cells{num(rec.iteration)};
    append(cells, rec.centroid);
    cells.push_back(num(rec.centroid_loss));
    cells.push_back(num(rec.centroid_grad_norm2));
    cells.push_back(num(rec.disagreement2));
    cells.push_back(num(rec.disagreement4));
    cells.push_back(rec.set_label ? std::string(1, to_char(*rec.set_label)) : std::string());
    cells.push_back(rec.in_burn_in ? "1" : "0");
    csv.row(cells);
  }
  return csv.text();
}

std::string agents_csv(const RunResult& result, Eigen::Index m) {
  auto header = std::vector<std::string>{"iter", "agent"};
  for (auto& c : indexed("w_", m)) header.push_back(c);
  Csv csv(header);
  for (const auto& rec : result.records) {
    if (!rec.agents) continue;
    for (Eigen::Index k = 0; k < rec.agents->rows(); ++k) {
      std::vector<std::string> cells{num(rec.iteration), std::to_string(k)};
      append(cells, rec.agents->row(k).transpose());
      csv.row(cells);
    }
  }
  return csv.text();
}

Status single_run(const ExperimentConfig& cfg, const RunConfig& rc,
                  const std::optional<Constants>& constants, OutputSet& out, json& summary) {
  // Without a replica list the run seed is the only realisation.
  std::vector<std::uint64_t> seeds = cfg.replica_seeds;
  const bool replicated = !seeds.empty();
  if (!replicated) seeds.push_back(cfg.run.seed);

  Status status;
  json runs = json::array();
  const auto m = rc.initial.cols();
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    RunConfig local = rc;
    local.seed = seeds[r];
    const RunResult result = run(local, constants ? &*constants : nullptr);
    const std::string suffix = replicated ? "_" + std::to_string(r) : "";
    out.write("trace" + suffix + ".csv", trace_csv(result, m), {seeds[r]});
    if (cfg.run.record_agents) out.write("agents" + suffix + ".csv", agents_csv(result, m), {seeds[r]});

    json entry{{"seed", seeds[r]}, {"diverged", result.diverged()}};
    if (!result.records.empty()) {
      const auto& last = result.records.back();
      entry["final_iteration"] = last.iteration;
      entry["final_centroid"] = vector_json(last.centroid);
      entry["final_loss"] = last.centroid_loss;
      entry["left_start"] = (last.centroid - result.records.front().centroid).norm() > 0.0;
    }
    if (result.diverged()) {
      entry["divergence"] = *result.divergence;
      status = {kExitDivergence, "replica " + std::to_string(r) + ": " + *result.divergence};
    }
    runs.push_back(entry);
  }
  summary["runs"] = runs;
  return status;
}

ExitCriterion make_criterion(const EscapeSpec& spec, const Constants& c, Eigen::Index m) {
  if (spec.criterion == "ball_exit") return ExitCriterion::ball(spec.threshold);
  if (spec.criterion == "loss_drop") return ExitCriterion::loss_drop(spec.threshold);
  return ExitCriterion::theorem_descent(c, m);
}

Status escape_sweep(const ExperimentConfig& cfg, const RunConfig& rc, const Constants& base,
                    Execution exec, OutputSet& out, json& summary) {
  const auto& spec = *cfg.escape;
  const auto m = rc.initial.cols();
  EscapeOptions options;
  options.horizon = spec.horizon;
  options.run_to_horizon = spec.run_to_horizon;
  options.tail_window = spec.tail_window;

  Csv per_replica({"mu", "replica", "escape_iter", "censored", "diverged", "seed"});
  Csv stats({"mu", "tau", "criterion", "threshold", "horizon", "replicas", "n_escaped",
             "median", "q1", "q3", "bound_is"});
  auto final_header = std::vector<std::string>{"mu", "replica"};
  for (auto& c : indexed("final_", m)) final_header.push_back(c);
  for (auto& c : indexed("tail_", m)) final_header.push_back(c);
  Csv finals(final_header);

  Status status;
  json rows = json::array();
  for (double mu : spec.mu_list) {
    const Constants c = base.with_mu(mu);
    RunConfig local = rc;
    local.mu = mu;
    const ExitCriterion criterion = make_criterion(spec, c, m);
    const EscapeStats s = empirical_escape_time(local, c, criterion, cfg.replica_seeds, options, exec);

    std::optional<std::int64_t> bound;
    if (c.sigma_l2 > 0.0) bound = escape_time_bound(static_cast<int>(m), c.sigma_u2, c.sigma_l2, mu, c.tau);

    std::size_t diverged = 0;
    for (std::size_t r = 0; r < s.replicas.size(); ++r) {
      const auto& rep = s.replicas[r];
      diverged += rep.diverged ? 1 : 0;
      per_replica.row({num(mu), std::to_string(r), num(rep.escape_iteration),
                       rep.censored ? "1" : "0", rep.diverged ? "1" : "0", num(rep.seed)});
      std::vector<std::string> cells{num(mu), std::to_string(r)};
      append(cells, rep.final_centroid);
      if (rep.tail_centroid.size() == m) append(cells, rep.tail_centroid);
      else cells.insert(cells.end(), static_cast<std::size_t>(m), "nan");
      finals.row(cells);
    }
    stats.row({num(mu), num(c.tau), spec.criterion, num(criterion.threshold), num(spec.horizon),
               num(s.replicas.size()), num(s.n_escaped), num(s.median), num(s.q1), num(s.q3),
               bound ? num(*bound) : std::string("inf")});
    json row{{"mu", mu},
             {"replicas", s.replicas.size()},
             {"n_escaped", s.n_escaped},
             {"n_diverged", diverged},
             {"median", std::isfinite(s.median) ? json(s.median) : json(nullptr)},
             {"threshold", criterion.threshold},
             {"bound_is", bound ? json(*bound) : json(nullptr)}};
    rows.push_back(row);
    if (diverged > 0)
      status = {kExitDivergence, std::to_string(diverged) + " replica(s) diverged at mu=" + num(mu)};
  }
  out.write("escape.csv", per_replica.text(), cfg.replica_seeds);
  out.write("escape_final.csv", finals.text(), cfg.replica_seeds);
  out.write("escape_stats.csv", stats.text(), cfg.replica_seeds);
  summary["criterion"] = spec.criterion;
  summary["horizon"] = spec.horizon;
  summary["rows"] = rows;
  return status;
}

Status deviation_sweep(const ExperimentConfig& cfg, const RunConfig& rc, Execution exec,
                       OutputSet& out, json& summary) {
  const auto& spec = *cfg.deviation;
  const DeviationSweep sweep = deviation_scaling_sweep(spec.mu_list, spec.horizon_T, rc,
                                                       cfg.replica_seeds, spec.anchor_iteration, exec);
  Csv csv({"mu", "moment", "value", "slope"});
  json slopes;
  for (const auto& row : sweep.rows) {
    csv.row({num(row.mu), "dev2", num(row.dev2), num(sweep.slope_dev2)});
    csv.row({num(row.mu), "dev3", num(row.dev3), num(sweep.slope_dev3)});
    csv.row({num(row.mu), "dev4", num(row.dev4), num(sweep.slope_dev4)});
    csv.row({num(row.mu), "model_gap2", num(row.model_gap2), num(sweep.slope_model_gap2)});
    csv.row({num(row.mu), "model2", num(row.model2), num(sweep.slope_model2)});
  }
  slopes["dev2"] = sweep.slope_dev2;
  slopes["dev3"] = sweep.slope_dev3;
  slopes["dev4"] = sweep.slope_dev4;
  slopes["model_gap2"] = sweep.slope_model_gap2;
  slopes["model2"] = sweep.slope_model2;
  if (spec.disagreement_window > 0) {
    const DisagreementSweep d = disagreement_scaling_sweep(
        spec.mu_list, rc, spec.disagreement_burn_in, spec.disagreement_window, cfg.replica_seeds, exec);
    for (const auto& row : d.rows) {
      csv.row({num(row.mu), "disagree2", num(row.mean2), num(d.slope2)});
      csv.row({num(row.mu), "disagree4", num(row.mean4), num(d.slope4)});
    }
    slopes["disagree2"] = d.slope2;
    slopes["disagree4"] = d.slope4;
  }
  out.write("deviation.csv", csv.text(), cfg.replica_seeds);
  summary["slopes"] = slopes;
  summary["mu_list"] = spec.mu_list;
  summary["T"] = spec.horizon_T;
  return {};
}

Status descent_check(const ExperimentConfig& cfg, const RunConfig& rc, const Constants& c,
                     Execution exec, OutputSet& out, json& summary) {
  const auto& spec = *cfg.descent;
  const Box box{Eigen::Map<const Vector>(spec.box_lo.data(), Eigen::Index(spec.box_lo.size())),
                Eigen::Map<const Vector>(spec.box_hi.data(), Eigen::Index(spec.box_hi.size()))};
  const Region region = spec.region == "G" ? Region::G : Region::H;
  const DescentResult res = descent_experiment(region, rc, c, box, cfg.replica_seeds, exec,
                                               spec.max_attempts);
  const auto m = rc.initial.cols();
  auto header = std::vector<std::string>{"replica", "seed"};
  for (auto& h : indexed("start_", m)) header.push_back(h);
  header.emplace_back("drop");
  Csv csv(header);
  for (std::size_t r = 0; r < res.drops.size(); ++r) {
    std::vector<std::string> cells{std::to_string(r), num(cfg.replica_seeds[r])};
    append(cells, res.starts[r]);
    cells.push_back(num(res.drops[r]));
    csv.row(cells);
  }
  out.write("descent.csv", csv.text(), cfg.replica_seeds);
  summary["region"] = spec.region;
  summary["steps"] = res.steps;
  summary["mean_drop"] = res.mean_drop;
  summary["standard_error"] = res.standard_error;
  return {};
}

Status surface_grid(const ExperimentConfig& cfg, const RunConfig& rc, OutputSet& out,
                    json& summary) {
  const auto& spec = *cfg.surface;
  const AggregateCost cost(rc.problems, perron_vector(rc.network));
  Csv csv({"w_0", "w_1", "loss"});
  const auto n0 = spec.points[0];
  const auto n1 = spec.points[1];
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::int64_t i = 0; i < n0; ++i) {
    const double x = spec.lo[0] + (spec.hi[0] - spec.lo[0]) * double(i) / double(n0 - 1);
    for (std::int64_t j = 0; j < n1; ++j) {
      const double y = spec.lo[1] + (spec.hi[1] - spec.lo[1]) * double(j) / double(n1 - 1);
      const double v = cost.loss(Vector{{x, y}});
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      csv.row({num(x), num(y), num(v)});
    }
  }
  out.write("surface.csv", csv.text(), {});
  summary["points"] = n0 * n1;
  summary["loss_min"] = lo;
  summary["loss_max"] = hi;
  return {};
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, Execution exec) {
  ExperimentOutcome outcome;
  const json resolved = to_json(cfg);
  const std::string resolved_text = resolved.dump(2) + "\n";
  json manifest{{"schema_version", cfg.schema_version},
                {"experiment", to_string(cfg.experiment)},
                {"config_hash", sha256_hex(resolved_text)},
                {"burn_in", cfg.run.burn_in},
                {"run_seed", cfg.run.seed},
                {"replica_seeds", cfg.replica_seeds}};
  try {
    OutputSet out(cfg.output_dir);
    out.write("resolved_config.json", resolved_text, {});
    json summary = json::object();
    Status status;
    try {
      const RunConfig rc = build_run_config(cfg.run);
      std::optional<Constants> constants;
      if (cfg.constants) constants = build_constants(*cfg.constants, cfg.run.mu, cfg.run.noise.declared);
      switch (cfg.experiment) {
        case ExperimentKind::single_run: status = single_run(cfg, rc, constants, out, summary); break;
        case ExperimentKind::escape_sweep: status = escape_sweep(cfg, rc, *constants, exec, out, summary); break;
        case ExperimentKind::deviation_sweep: status = deviation_sweep(cfg, rc, exec, out, summary); break;
        case ExperimentKind::descent_check: status = descent_check(cfg, rc, *constants, exec, out, summary); break;
        case ExperimentKind::surface_grid: status = surface_grid(cfg, rc, out, summary); break;
      }
    } catch (const DivergenceError& e) {
      status = {kExitDivergence, e.what()};
    } catch (const NumericalError& e) {
      status = {kExitDivergence, e.what()};
    }
    if (cfg.constants && (cfg.experiment == ExperimentKind::escape_sweep ||
                          cfg.experiment == ExperimentKind::descent_check)) {
      summary["tau"] = cfg.constants->tau;
      summary["delta"] = cfg.constants->delta;
    }
    manifest["status"] = status.code == kExitOk ? "ok" : "diverged";
    if (!status.message.empty()) manifest["message"] = status.message;
    manifest["summary"] = summary;
    outcome.manifest = out.write_manifest(manifest);
    outcome.exit_code = status.code;
    outcome.message = status.message;
  } catch (const IoError& e) {
    outcome.exit_code = kExitIo;
    outcome.message = e.what();
  } catch (const ValidationError& e) {
    outcome.exit_code = kExitValidation;
    outcome.message = e.what();
  }
  return outcome;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(digits);
  ss << v;
  return ss.str();
}

void summarize_escape(const json& summary, std::ostringstream& out) {
  const json& rows = summary.at("rows");
  out << "escape criterion: " << summary.value("criterion", std::string("?")) << ", horizon "
      << summary.value("horizon", 0) << "\n";
  std::vector<double> inv_mu, medians;
  for (const auto& row : rows) {
    const double mu = row.at("mu").get<double>();
    std::ostringstream line;
    line << "  mu=" << shortest(mu) << ": " << row.at("n_escaped").get<std::size_t>() << "/"
         << row.at("replicas").get<std::size_t>() << " replicas escaped";
    line << ", predicted i^s=" << (row.at("bound_is").is_null() ? std::string("n/a")
                                                      : std::to_string(row.at("bound_is").get<std::int64_t>()));
    if (row.at("median").is_null()) {
      line << ", median escape=censored";
    } else {
      const double med = row.at("median").get<double>();
      line << ", median escape=" << fixed(med, 1);
      inv_mu.push_back(1.0 / mu);
      medians.push_back(med);
    }
    out << line.str() << "\n";
  }
  if (inv_mu.size() >= 2)
    out << "log-log slope of median escape vs 1/mu: " << fixed(loglog_slope(inv_mu, medians), 3)
        << " (reference 1)\n";
}

void summarize_deviation(const json& summary, std::ostringstream& out) {
  static const std::map<std::string, double> reference{
      {"dev2", 1.0}, {"dev3", 1.5}, {"dev4", 2.0}, {"model_gap2", 2.0},
      {"model2", 1.0}, {"disagree2", 2.0}, {"disagree4", 4.0}};
  out << "log-log slopes vs mu (reference in parentheses):\n";
  for (const auto& [name, value] : summary.at("slopes").items()) {
    out << "  " << name << ": " << fixed(value.get<double>(), 3);
    if (auto it = reference.find(name); it != reference.end()) out << " (" << fixed(it->second, 1) << ")";
    out << "\n";
  }
}

}  // namespace

std::string summarize(const fs::path& manifest_path) {
  const std::string text = read_file(manifest_path);
  json manifest;
  try {
    manifest = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError("manifest '" + manifest_path.string() + "' is not valid JSON: " + e.what());
  }
  if (!manifest.is_object() || manifest.empty() || !manifest.contains("files") ||
      manifest.at("files").empty())
    throw ValidationError("manifest '" + manifest_path.string() + "' is empty");

  const fs::path dir = manifest_path.parent_path();
  std::vector<std::string> missing, altered;
  for (const auto& f : manifest.at("files")) {
    const fs::path p = dir / f.at("path").get<std::string>();
    if (!fs::exists(p)) {
      missing.push_back(p.string());
      continue;
    }
    if (sha256_hex(read_file(p)) != f.at("sha256").get<std::string>()) altered.push_back(p.string());
  }
  if (!missing.empty()) {
    std::string msg = "manifest lists missing files:";
    for (const auto& m : missing) msg += "\n  " + m;
    throw IoError(msg);
  }

  std::ostringstream out;
  const std::string kind = manifest.value("experiment", std::string("?"));
  out << "experiment: " << kind << "\n";
  out << "status: " << manifest.value("status", std::string("?"));
  if (manifest.contains("message")) out << " (" << manifest.at("message").get<std::string>() << ")";
  out << "\n";
  out << "config hash: " << manifest.value("config_hash", std::string("?")) << "\n";
  out << "files: " << manifest.at("files").size() << "\n";
  for (const auto& a : altered) out << "warning: content hash mismatch for " << a << "\n";

  const json summary = manifest.value("summary", json::object());
  if (kind == "escape_sweep" && summary.contains("rows")) {
    summarize_escape(summary, out);
  } else if (kind == "deviation_sweep" && summary.contains("slopes")) {
    summarize_deviation(summary, out);
  } else if (kind == "descent_check") {
    const double mean = summary.value("mean_drop", 0.0);
    const double se = summary.value("standard_error", 0.0);
    out << "region " << summary.value("region", std::string("?")) << ", " << summary.value("steps", 0)
        << " steps: mean loss drop " << format_double(mean) << " (se " << format_double(se)
        << "), one-sided 95% lower bound " << format_double(mean - 1.645 * se) << "\n";
  } else if (kind == "single_run" && summary.contains("runs")) {
    const auto& runs = summary.at("runs");
    std::size_t left = 0;
    for (const auto& r : runs) left += r.value("left_start", false) ? 1 : 0;
    out << left << "/" << runs.size() << " replicas escaped (left the initial centroid)\n";
    for (const auto& r : runs)
      if (r.contains("final_centroid"))
        out << "  seed " << r.at("seed").get<std::uint64_t>() << ": final centroid "
            << r.at("final_centroid").dump() << ", loss " << format_double(r.value("final_loss", 0.0))
            << "\n";
  } else if (kind == "surface_grid") {
    out << summary.value("points", 0) << " grid points, loss in [" << format_double(summary.value("loss_min", 0.0))
        << ", " << format_double(summary.value("loss_max", 0.0)) << "]\n";
  }
  return out.str();
}

}  // namespace saddlenet
