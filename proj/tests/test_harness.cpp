#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "volrank/harness.hpp"

using namespace volrank;

TEST_CASE("config parsing covers every key and rejects typos", "[harness]") {
  std::istringstream in(
      "# benchmark configuration\n"
      "model = d2m3\n"
      "delta_n = 1e-4\n"
      "T = 2.5\n"
      "\n"
      "theta = 0.5\n"
      "sigma_tilde_scale = 1.5\n"
      "alpha = 0.01\n"
      "n_reps = 42\n"
      "seed = 99\n"
      "k_n_override = 157\n"
      "variance_mode = prime\n"
      "workers = 2\n");
  const ExperimentConfig cfg = parse_config(in);
  CHECK(cfg.model == "d2m3");
  CHECK(cfg.delta_n == 1e-4);
  CHECK(cfg.T == 2.5);
  CHECK(cfg.theta == 0.5);
  CHECK(cfg.sigma_tilde_scale == 1.5);
  CHECK(cfg.alpha == 0.01);
  CHECK(cfg.n_reps == 42);
  CHECK(cfg.seed == 99);
  REQUIRE(cfg.k_n_override.has_value());
  CHECK(*cfg.k_n_override == 157);
  CHECK(cfg.variance_mode == VarianceMode::Prime);
  CHECK(cfg.workers == 2);

  std::istringstream defaults("");
  const ExperimentConfig def = parse_config(defaults);
  CHECK(def.model == "d1m1");
  CHECK(def.n_reps == 500);
  CHECK_FALSE(def.k_n_override.has_value());
  CHECK(def.variance_mode == VarianceMode::Combined);

  std::istringstream unknown("model = d1m1\nspeed = 9\n");
  CHECK_THROWS_WITH(parse_config(unknown),
                    Catch::Matchers::ContainsSubstring("line 2"));
  std::istringstream noeq("model d1m1\n");
  CHECK_THROWS_AS(parse_config(noeq), std::invalid_argument);
  std::istringstream badnum("delta_n = tiny\n");
  CHECK_THROWS_AS(parse_config(badnum), std::invalid_argument);
  std::istringstream badmode("variance_mode = both\n");
  CHECK_THROWS_AS(parse_config(badmode), std::invalid_argument);
}

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.model = "d1m1";
  cfg.delta_n = 1e-3;
  cfg.T = 1.0;
  cfg.n_reps = 8;
  cfg.seed = 77;
  cfg.workers = 1;
  return cfg;
}

}  // namespace

TEST_CASE("aggregates match a by-hand rerun of every repetition",
          "[harness]") {
  const ExperimentConfig cfg = tiny_config();
  const MCReport rep = run_experiment(cfg);

  CHECK(rep.d == 1);
  CHECK(rep.true_rank == 1);
  CHECK(rep.k_n == 33);  // floor((1/3) * 1e2)
  CHECK(rep.n_blocks == 10);
  CHECK(rep.n_obs == 1001);
  REQUIRE(rep.n_valid == 8);
  CHECK(rep.n_excluded == 0);
  REQUIRE(rep.reps.size() == 8);

  const ModelSpec model = model_by_label(cfg.model);
  const PerturbationConfig pert =
      PerturbationConfig::scaled_identity(1, cfg.sigma_tilde_scale);
  const auto [g, h] = canonical_pair();

  double m1 = 0, m2 = 0, m3 = 0, m4 = 0;
  double eq0 = 0, eq1 = 0, hits = 0;
  for (std::int64_t i = 0; i < cfg.n_reps; ++i) {
    const PathDataset path = simulate_path(model, pert, cfg.delta_n, cfg.T,
                                           mix_seed(cfg.seed, i));
    const RankTestReport rt = compute_report(path, g, h, cfg.theta);
    CHECK(rep.reps[static_cast<std::size_t>(i)].r_hat == rt.r_hat);
    CHECK(rep.reps[static_cast<std::size_t>(i)].V_used == rt.V_used);
    const double z = rt.standardized.at(1);
    m1 += z;
    m2 += z * z;
    m3 += z * z * z;
    m4 += z * z * z * z;
    eq0 += test_rank_equals(rt.r_hat, 0, rt.V_used, rt.u_n, cfg.alpha).reject;
    eq1 += test_rank_equals(rt.r_hat, 1, rt.V_used, rt.u_n, cfg.alpha).reject;
    hits += (rt.r_hat_int == 1);
  }
  const double n = 8.0;
  CHECK(rep.m1 == Catch::Approx(m1 / n).epsilon(1e-13));
  CHECK(rep.m2 == Catch::Approx(m2 / n).epsilon(1e-13));
  CHECK(rep.m3 == Catch::Approx(m3 / n).epsilon(1e-13));
  CHECK(rep.m4 == Catch::Approx(m4 / n).epsilon(1e-13));
  CHECK(rep.reject_eq_rate[0] == Catch::Approx(eq0 / n).margin(1e-15));
  CHECK(rep.reject_eq_rate[1] == Catch::Approx(eq1 / n).margin(1e-15));
  CHECK(rep.hit_rate == Catch::Approx(hits / n).margin(1e-15));
  CHECK(rep.wall_seconds >= 0.0);
}

TEST_CASE("experiment is deterministic and worker-count invariant",
          "[harness]") {
  ExperimentConfig cfg = tiny_config();
  cfg.n_reps = 6;
  cfg.workers = 1;
  const MCReport serial = run_experiment(cfg);
  cfg.workers = 3;
  const MCReport threaded = run_experiment(cfg);

  CHECK(serial.m1 == threaded.m1);
  CHECK(serial.m2 == threaded.m2);
  CHECK(serial.m3 == threaded.m3);
  CHECK(serial.m4 == threaded.m4);
  CHECK(serial.hit_rate == threaded.hit_rate);
  for (std::size_t i = 0; i < serial.reps.size(); ++i)
    CHECK(serial.reps[i].r_hat == threaded.reps[i].r_hat);

  cfg.workers = 1;
  cfg.seed = 78;
  const MCReport other = run_experiment(cfg);
  CHECK(other.m1 != serial.m1);
}

TEST_CASE("summary row round trips through text", "[harness]") {
  const MCReport rep = run_experiment(tiny_config());
  const std::string csv = table_csv(rep);
  std::istringstream is(csv);
  const auto [header, values] = parse_table_csv(is);

  REQUIRE(header.size() == values.size());
  REQUIRE(header.size() == 9);  // d = 1: two omega columns
  CHECK(header[0] == "delta_n");
  CHECK(header[2] == "m1");
  CHECK(header[6] == "omega0");
  CHECK(header[7] == "omega1");
  CHECK(header[8] == "hit_rate");
  CHECK(values[0] == rep.config.delta_n);
  CHECK(values[1] == static_cast<double>(rep.n_blocks));
  CHECK(values[2] == rep.m1);  // 17 digits: bitwise round trip
  CHECK(values[5] == rep.m4);
  CHECK(values[6] == rep.reject_eq_rate[0]);
  CHECK(values[7] == rep.reject_eq_rate[1]);
  CHECK(values[8] == rep.hit_rate);

  std::istringstream broken("a,b\n1\n");
  CHECK_THROWS_AS(parse_table_csv(broken), std::invalid_argument);
  std::istringstream headeronly("a,b\n");
  CHECK_THROWS_AS(parse_table_csv(headeronly), std::invalid_argument);
}

TEST_CASE("json summary carries the aggregate fields", "[harness]") {
  const MCReport rep = run_experiment(tiny_config());
  const nlohmann::json j = report_to_json(rep);
  for (const char* key :
       {"config", "d", "true_rank", "k_n", "u_n", "n_blocks", "n_obs",
        "n_valid", "n_excluded", "fallback_count", "moments", "reject_eq_rate",
        "reject_leq_rate", "hit_rate", "wall_seconds"}) {
    INFO(key);
    CHECK(j.contains(key));
  }
  CHECK_FALSE(j.contains("reps"));
  CHECK(j["moments"].size() == 4);
  CHECK(j["config"]["model"] == "d1m1");

  const nlohmann::json jr = report_to_json(rep, true);
  REQUIRE(jr.contains("reps"));
  CHECK(jr["reps"].size() == 8);
  CHECK(jr["reps"][0]["valid"].get<bool>());
}

TEST_CASE("experiment rejects impossible configurations", "[harness]") {
  ExperimentConfig cfg = tiny_config();
  cfg.n_reps = 0;
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = tiny_config();
  cfg.T = 0.05;  // shorter than one block round (3 u_n = 0.099)
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);

  cfg = tiny_config();
  cfg.model = "d9m9";
  CHECK_THROWS_AS(run_experiment(cfg), std::invalid_argument);
}

TEST_CASE("weight plot emits dense aligned samples", "[harness]") {
  const auto [g, h] = canonical_pair();
  std::ostringstream os;
  emit_weight_plot(g, h, 5, os);
  std::istringstream is(os.str());
  std::string line;
  int rows = 0;
  double x = -1, gv = -1, hv = -1;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    REQUIRE((ls >> x >> gv >> hv));
    ++rows;
  }
  CHECK(rows == 5);
  CHECK(x == 1.0);
  CHECK(gv == 0.0);
  CHECK(hv == 0.0);
  std::ostringstream sink;
  CHECK_THROWS_AS(emit_weight_plot(g, h, 1, sink), std::invalid_argument);
}
