#pragma once

// Repeated-experiment driver: simulate paths of a zoo model, evaluate the
// rank statistics and tests on each, and aggregate into the summary row used
// by the benchmark tables (raw moments of the standardized gap at the true
// rank, rejection proportions per candidate rank, integer hit rate).
//
// Determinism contract: repetition i is a pure function of (seed, i), worker
// threads only fill slot i, and every aggregate is reduced in repetition
// order with compensated sums -- so results are bit-identical for any worker
// count.  A repetition whose statistics degenerate is excluded from the
// aggregates and counted, never silently dropped.

#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "volrank/common.hpp"
#include "volrank/hypotest.hpp"
#include "volrank/models.hpp"
#include "volrank/preavg.hpp"
#include "volrank/rankstats.hpp"
#include "volrank/rng.hpp"
#include "volrank/simulate.hpp"
#include "volrank/weights.hpp"

namespace volrank {

struct ExperimentConfig {
  std::string model = "d1m1";
  double delta_n = 1e-5;
  double T = 1.0;
  double theta = 1.0 / 3.0;
  double sigma_tilde_scale = 2.0;
  double alpha = 0.05;
  std::int64_t n_reps = 500;
  std::uint64_t seed = 1;
  std::optional<int> k_n_override;
  VarianceMode variance_mode = VarianceMode::Combined;
  int workers = 0;  // 0: VOLRANK_WORKERS env var, then hardware
};

// Flat key=value configuration ('#' starts a comment line).  Unknown keys are
// rejected so typos cannot silently fall back to defaults.
inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    try {
      if (key == "model") {
        cfg.model = val;
      } else if (key == "delta_n") {
        cfg.delta_n = std::stod(val);
      } else if (key == "T") {
        cfg.T = std::stod(val);
      } else if (key == "theta") {
        cfg.theta = std::stod(val);
      } else if (key == "sigma_tilde_scale") {
        cfg.sigma_tilde_scale = std::stod(val);
      } else if (key == "alpha") {
        cfg.alpha = std::stod(val);
      } else if (key == "n_reps") {
        cfg.n_reps = std::stoll(val);
      } else if (key == "seed") {
        cfg.seed = std::stoull(val);
      } else if (key == "k_n_override") {
        cfg.k_n_override = std::stoi(val);
      } else if (key == "variance_mode") {
        if (val == "combined")
          cfg.variance_mode = VarianceMode::Combined;
        else if (val == "prime")
          cfg.variance_mode = VarianceMode::Prime;
        else
          throw std::invalid_argument("must be 'combined' or 'prime'");
      } else if (key == "workers") {
        cfg.workers = std::stoi(val);
      } else {
        throw std::invalid_argument("unknown key");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  " ('" + key + "'): " + e.what());
    }
  }
  return cfg;
}

struct RepResult {
  std::int64_t rep = 0;
  bool valid = false;
  std::string error;
  double r_hat = 0.0;
  int r_hat_int = 0;
  double S1 = 0.0, S2 = 0.0, V_used = 0.0;
  bool used_fallback = false;
  std::vector<double> standardized;       // index r = 0..d
  std::vector<std::uint8_t> reject_eq;    // H0: R = r
  std::vector<std::uint8_t> reject_leq;   // H0: R <= r
};

struct MCReport {
  ExperimentConfig config;
  int d = 0;
  int true_rank = 0;
  int k_n = 0;
  double u_n = 0.0;
  std::int64_t n_blocks = 0;
  std::int64_t n_obs = 0;

  std::vector<RepResult> reps;
  std::int64_t n_valid = 0;
  std::int64_t n_excluded = 0;
  std::int64_t fallback_count = 0;

  // Raw moments of the standardized gap at the true rank, over valid reps.
  double m1 = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
  std::vector<double> reject_eq_rate;   // per candidate rank 0..d
  std::vector<double> reject_leq_rate;  // per candidate rank 0..d
  double hit_rate = 0.0;                // r_hat_int == true_rank
  double wall_seconds = 0.0;
};

inline MCReport run_experiment(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.n_reps < 1)
    throw std::invalid_argument("run_experiment: n_reps must be positive");

  const ModelSpec model = model_by_label(cfg.model);
  const PerturbationConfig pert =
      PerturbationConfig::scaled_identity(model.d, cfg.sigma_tilde_scale);
  const auto [g, h] = canonical_pair();
  validate_pair(g, h);
  const PreAvgPlan plan = make_plan(cfg.delta_n, cfg.theta, cfg.k_n_override);

  MCReport rep;
  rep.config = cfg;
  rep.d = model.d;
  rep.true_rank = model.true_max_rank;
  rep.k_n = plan.k_n;
  rep.u_n = plan.u_n;
  rep.n_blocks = floor_snap(cfg.T / (3.0 * model.d * plan.u_n));
  rep.n_obs = floor_snap(cfg.T / cfg.delta_n) + 1;
  if (rep.n_blocks < 1)
    throw std::invalid_argument(
        "run_experiment: configuration yields zero blocks");
  rep.reps.assign(static_cast<std::size_t>(cfg.n_reps), RepResult{});

  parallel_for(cfg.n_reps, resolve_workers(cfg.workers), [&](std::int64_t i) {
    RepResult& row = rep.reps[static_cast<std::size_t>(i)];
    row.rep = i;
    try {
      const PathDataset path =
          simulate_path(model, pert, cfg.delta_n, cfg.T,
                        mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
      const RankTestReport rt = compute_report(path, g, h, cfg.theta,
                                               cfg.k_n_override,
                                               cfg.variance_mode);
      row.r_hat = rt.r_hat;
      row.r_hat_int = rt.r_hat_int;
      row.S1 = rt.S1;
      row.S2 = rt.S2;
      row.V_used = rt.V_used;
      row.used_fallback = rt.used_fallback;
      row.standardized.resize(static_cast<std::size_t>(model.d) + 1);
      row.reject_eq.resize(static_cast<std::size_t>(model.d) + 1);
      row.reject_leq.resize(static_cast<std::size_t>(model.d) + 1);
      for (int r = 0; r <= model.d; ++r) {
        row.standardized[static_cast<std::size_t>(r)] = rt.standardized.at(r);
        row.reject_eq[static_cast<std::size_t>(r)] =
            test_rank_equals(rt.r_hat, r, rt.V_used, rt.u_n, cfg.alpha).reject;
        row.reject_leq[static_cast<std::size_t>(r)] =
            test_rank_at_most(rt.r_hat, r, rt.V_used, rt.u_n, cfg.alpha).reject;
      }
      row.valid = true;
    } catch (const std::exception& e) {
      row.valid = false;
      row.error = e.what();
    }
  });

  // Reduce in repetition order (deterministic regardless of worker count).
  CompensatedSum s1, s2, s3, s4;
  std::vector<CompensatedSum> eq(static_cast<std::size_t>(rep.d) + 1);
  std::vector<CompensatedSum> leq(static_cast<std::size_t>(rep.d) + 1);
  std::int64_t hits = 0;
  for (const RepResult& row : rep.reps) {
    if (!row.valid) {
      ++rep.n_excluded;
      continue;
    }
    ++rep.n_valid;
    if (row.used_fallback) ++rep.fallback_count;
    const double z = row.standardized[static_cast<std::size_t>(rep.true_rank)];
    s1.add(z);
    s2.add(z * z);
    s3.add(z * z * z);
    s4.add(z * z * z * z);
    for (int r = 0; r <= rep.d; ++r) {
      eq[static_cast<std::size_t>(r)].add(row.reject_eq[static_cast<std::size_t>(r)]);
      leq[static_cast<std::size_t>(r)].add(
          row.reject_leq[static_cast<std::size_t>(r)]);
    }
    if (row.r_hat_int == rep.true_rank) ++hits;
  }
  if (rep.n_valid == 0)
    throw std::runtime_error("run_experiment: every repetition degenerated");
  const double n = static_cast<double>(rep.n_valid);
  rep.m1 = s1.value() / n;
  rep.m2 = s2.value() / n;
  rep.m3 = s3.value() / n;
  rep.m4 = s4.value() / n;
  rep.reject_eq_rate.resize(static_cast<std::size_t>(rep.d) + 1);
  rep.reject_leq_rate.resize(static_cast<std::size_t>(rep.d) + 1);
  for (int r = 0; r <= rep.d; ++r) {
    rep.reject_eq_rate[static_cast<std::size_t>(r)] =
        eq[static_cast<std::size_t>(r)].value() / n;
    rep.reject_leq_rate[static_cast<std::size_t>(r)] =
        leq[static_cast<std::size_t>(r)].value() / n;
  }
  rep.hit_rate = static_cast<double>(hits) / n;
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

// Summary row in stable column order; numbers are printed with 17 significant
// digits so parsing the row back reproduces the doubles bit for bit.
inline std::string table_csv(const MCReport& r) {
  std::ostringstream os;
  os.precision(17);
  os << "delta_n,n_blocks,m1,m2,m3,m4";
  for (int k = 0; k <= r.d; ++k) os << ",omega" << k;
  os << ",hit_rate\n";
  os << r.config.delta_n << ',' << r.n_blocks << ',' << r.m1 << ',' << r.m2
     << ',' << r.m3 << ',' << r.m4;
  for (int k = 0; k <= r.d; ++k)
    os << ',' << r.reject_eq_rate[static_cast<std::size_t>(k)];
  os << ',' << r.hit_rate << '\n';
  return os.str();
}

// Parses a table_csv payload back into (header, values) for round-tripping.
inline std::pair<std::vector<std::string>, std::vector<double>> parse_table_csv(
    std::istream& in) {
  std::string header, data;
  if (!std::getline(in, header) || !std::getline(in, data))
    throw std::invalid_argument("table csv: expected header and data line");
  std::pair<std::vector<std::string>, std::vector<double>> out;
  std::istringstream hs(header), ds(data);
  std::string cell;
  while (std::getline(hs, cell, ',')) out.first.push_back(cell);
  while (std::getline(ds, cell, ',')) out.second.push_back(std::stod(cell));
  if (out.first.size() != out.second.size())
    throw std::invalid_argument("table csv: header/data length mismatch");
  return out;
}

inline nlohmann::json report_to_json(const MCReport& r,
                                     bool include_reps = false) {
  nlohmann::json j;
  j["config"] = {{"model", r.config.model},
                 {"delta_n", r.config.delta_n},
                 {"T", r.config.T},
                 {"theta", r.config.theta},
                 {"sigma_tilde_scale", r.config.sigma_tilde_scale},
                 {"alpha", r.config.alpha},
                 {"n_reps", r.config.n_reps},
                 {"seed", r.config.seed},
                 {"variance_mode", r.config.variance_mode == VarianceMode::Combined
                                       ? "combined"
                                       : "prime"}};
  if (r.config.k_n_override) j["config"]["k_n_override"] = *r.config.k_n_override;
  j["d"] = r.d;
  j["true_rank"] = r.true_rank;
  j["k_n"] = r.k_n;
  j["u_n"] = r.u_n;
  j["n_blocks"] = r.n_blocks;
  j["n_obs"] = r.n_obs;
  j["n_valid"] = r.n_valid;
  j["n_excluded"] = r.n_excluded;
  j["fallback_count"] = r.fallback_count;
  j["moments"] = {r.m1, r.m2, r.m3, r.m4};
  j["reject_eq_rate"] = r.reject_eq_rate;
  j["reject_leq_rate"] = r.reject_leq_rate;
  j["hit_rate"] = r.hit_rate;
  j["wall_seconds"] = r.wall_seconds;
  if (include_reps) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.reps) {
      nlohmann::json jr{{"rep", row.rep}, {"valid", row.valid}};
      if (row.valid) {
        jr["r_hat"] = row.r_hat;
        jr["r_hat_int"] = row.r_hat_int;
        jr["S1"] = row.S1;
        jr["S2"] = row.S2;
        jr["V_used"] = row.V_used;
        jr["used_fallback"] = row.used_fallback;
        jr["standardized"] = row.standardized;
      } else {
        jr["error"] = row.error;
      }
      rows.push_back(std::move(jr));
    }
    j["reps"] = std::move(rows);
  }
  return j;
}

// Dense samples of a weight pair for plotting: "x g(x) h(x)" per line.
inline void emit_weight_plot(const WeightFunction& g, const WeightFunction& h,
                             int n_points, std::ostream& os) {
  if (n_points < 2)
    throw std::invalid_argument("emit_weight_plot: need at least 2 points");
  os.precision(17);
  for (int i = 0; i < n_points; ++i) {
    const double x = static_cast<double>(i) / (n_points - 1);
    os << x << ' ' << g(x) << ' ' << h(x) << '\n';
  }
}

}  // namespace volrank
