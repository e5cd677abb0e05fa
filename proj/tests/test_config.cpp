#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "saddlenet/config.hpp"

#include <string>

using namespace saddlenet;

namespace {

json minimal() {
  return json::parse(R"({
    "schema_version": 1,
    "experiment": "single_run",
    "run": {"mu": 0.01, "network": {"n_agents": 3, "topology": "complete"}}
  })");
}

json escape_doc() {
  return json::parse(R"({
    "schema_version": 1,
    "experiment": "escape_sweep",
    "run": {
      "mu": 0.01,
      "network": {"n_agents": 3, "topology": "complete"},
      "problem": {"kind": "logistic", "reg": 0.1},
      "noise": {
        "components": [{"kind": "natural_sampling"},
                       {"kind": "directional", "direction": [0.7071067811865476, 0.7071067811865476], "std": 1.4142135623730951}],
        "declared": {"sigma2": 0.6666666666666666, "sigma_l2": 0.6666666666666666, "sigma_u2": 0.6666666666666666}
      },
      "initial": {"point": [0, 0]}
    },
    "constants": {"delta": 1.0},
    "replica_seeds": [1, 2, 3],
    "escape": {"mu_list": [0.01, 0.005], "criterion": "theorem_descent"}
  })");
}

std::string error_of(const json& doc) {
  try {
    validate_config(doc);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

bool mentions(const std::string& haystack, const std::string& needle) {
  return haystack.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("minimal single_run resolves defaults") {
  const ExperimentConfig cfg = validate_config(minimal());
  CHECK(cfg.run.burn_in == 0);
  CHECK(cfg.run.trace_stride == 1);
  CHECK(cfg.run.n_iterations == 1);
  CHECK(cfg.run.network.rule == "averaging");
  CHECK(cfg.run.network.edges.size() == 3);
  CHECK(cfg.run.network.self_loops == std::vector<bool>{true, true, true});
  CHECK(cfg.run.problems.size() == 3);
  CHECK(cfg.run.problems[0].kind == "logistic");
  CHECK(cfg.run.problems[0].reg == 0.1);
  CHECK(cfg.run.initial == std::vector<std::vector<double>>(3, {0.0, 0.0}));
  CHECK(cfg.output_dir == "out");

  const json echoed = to_json(cfg);
  CHECK(echoed.at("run").at("burn_in") == 0);
  CHECK(echoed.at("run").at("trace_stride") == 1);
  CHECK(echoed.at("run").at("problem").at(0).at("quadrature_nodes") == 200);
}

TEST_CASE("step size violating c1 > 0 is rejected with the constraint quoted") {
  json doc = minimal();
  doc["run"]["mu"] = 0.6;
  doc["constants"] = {{"delta", 1.0}};
  const std::string err = error_of(doc);
  CHECK(mentions(err, "mu < 1/(2*delta)"));
  CHECK(mentions(err, "c1"));

  json sweep = escape_doc();
  sweep["escape"]["mu_list"] = {0.01, 0.7};
  CHECK(mentions(error_of(sweep), "escape.mu_list"));
}

TEST_CASE("duplicate replica seeds are rejected") {
  json doc = minimal();
  doc["replica_seeds"] = {4, 5, 4};
  CHECK(mentions(error_of(doc), "distinct"));
}

TEST_CASE("unknown fields are named") {
  json doc = minimal();
  doc["colour"] = "blue";
  CHECK(mentions(error_of(doc), "'colour'"));
  doc = minimal();
  doc["run"]["network"]["wieghts"] = 1;
  CHECK(mentions(error_of(doc), "'run.network.wieghts'"));
  doc = escape_doc();
  doc["run"]["noise"]["components"][1]["sdt"] = 1;
  CHECK(mentions(error_of(doc), "'run.noise.components[1].sdt'"));
}

TEST_CASE("structural errors") {
  json doc = minimal();
  doc["schema_version"] = 2;
  CHECK(mentions(error_of(doc), "schema_version"));
  doc = minimal();
  doc["experiment"] = "party";
  CHECK(mentions(error_of(doc), "party"));
  doc = minimal();
  doc["run"]["mu"] = "fast";
  CHECK(mentions(error_of(doc), "'run.mu'"));
  doc = minimal();
  doc["run"].erase("mu");
  CHECK(mentions(error_of(doc), "'run.mu'"));
  doc = minimal();
  doc["run"]["network"]["rule"] = "gossip";
  CHECK(mentions(error_of(doc), "gossip"));
  doc = escape_doc();
  doc["run"]["noise"]["components"][1]["direction"] = {1.0, 1.0};
  CHECK(mentions(error_of(doc), "unit"));
  doc = escape_doc();
  doc.erase("constants");
  CHECK(mentions(error_of(doc), "constants"));
  doc = escape_doc();
  doc.erase("replica_seeds");
  CHECK(mentions(error_of(doc), "replica_seeds"));
  doc = minimal();
  doc["run"]["initial"] = {{"point", {0.0, 0.0, 0.0}}};
  CHECK(mentions(error_of(doc), "dimension"));
  doc = minimal();
  doc["run"]["network"] = {{"n_agents", 4}, {"edges", {{0, 1}, {2, 3}}}};
  CHECK(mentions(error_of(doc), "strongly connected"));
}

TEST_CASE("explicit weights and sparsity") {
  json doc = minimal();
  doc["run"]["network"] = json::parse(R"({"n_agents": 2, "edges": [[0, 1]], "rule": "explicit",
                                          "entries": [[0.8, 0.4], [0.2, 0.6]]})");
  const ExperimentConfig cfg = validate_config(doc);
  const CombinationMatrix A = build_network(cfg.run.network);
  CHECK(A(0, 1) == 0.4);
  CHECK(cfg.run.network.entries == std::vector<double>{0.8, 0.4, 0.2, 0.6});

  doc["run"]["network"]["edges"] = json::array();
  CHECK_THROWS_AS(validate_config(doc), SparsityError);
}

TEST_CASE("replica shorthand expands to derived seeds") {
  json doc = minimal();
  doc["replicas"] = {{"count", 5}, {"master_seed", 9}};
  const ExperimentConfig cfg = validate_config(doc);
  CHECK(cfg.replica_seeds == derive_seeds(9, 5));
}

TEST_CASE("resolved config round-trips") {
  json hetero = minimal();
  hetero["run"]["problem"] = json::parse(R"([{"kind": "logistic", "reg": 0.1},
      {"kind": "logistic", "reg": 0.2},
      {"kind": "cubic_saddle", "hessian": [[0.1, -0.5], [-0.5, 0.1]], "direction": [0.6, 0.8], "kappa": 1}])");
  hetero["run"]["initial"] = {{"agents", {{0.1, 0.2}, {0.3, 0.4}, {0.5, 0.6}}}};
  hetero["run"]["record_agents"] = true;

  json deviation = minimal();
  deviation["experiment"] = "deviation_sweep";
  deviation["replicas"] = {{"count", 3}};
  deviation["deviation"] = {{"mu_list", {0.02, 0.005}}, {"disagreement_window", 100}};

  json descent = escape_doc();
  descent["experiment"] = "descent_check";
  descent.erase("escape");
  descent["descent"] = {{"box_lo", {-0.05, -0.05}}, {"box_hi", {0.05, 0.05}}};

  json surface = minimal();
  surface["experiment"] = "surface_grid";

  for (const json& doc : {minimal(), escape_doc(), hetero, deviation, descent, surface}) {
    const ExperimentConfig first = validate_config(doc);
    const json emitted = to_json(first);
    const ExperimentConfig second = validate_config(json::parse(emitted.dump()));
    CHECK(first == second);
    CHECK(to_json(second) == emitted);
  }
}

TEST_CASE("domain objects from a config") {
  const ExperimentConfig cfg = validate_config(escape_doc());
  const RunConfig rc = build_run_config(cfg.run);
  CHECK(rc.problems.size() == 3);
  CHECK(rc.problems[0] == rc.problems[2]);
  CHECK(rc.noise.uses_natural_sampling());
  CHECK(rc.initial == Matrix::Zero(3, 2));
  const Constants c = build_constants(*cfg.constants, 0.005, cfg.run.noise.declared);
  CHECK(c.mu == 0.005);
  CHECK(c.sigma_u2 == doctest::Approx(2.0 / 3.0));
  CHECK(c.tau == 0.1);
  CHECK(c.pi_confidence == 0.5);
}
