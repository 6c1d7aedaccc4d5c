// Command-line front end.
//
//   volrank simulate  --model d1m1 --delta 1e-4 --out path.csv
//   volrank test      --model d1m1 --delta 1e-5 [--json rep.json]
//   volrank test      --input path.csv
//   volrank mc        --config mc.cfg [--table row.csv] [--json full.json]
//   volrank oracle    --d 1 --q 1 --r 1 --alpha-scale 1 --draws 100000
//   volrank weights   [--plot pair.dat] [--out-prefix w] [--check g.txt h.txt]
//
// Worker count resolution everywhere: --workers flag / config, then the
// VOLRANK_WORKERS environment variable, then hardware concurrency.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "volrank/volrank.hpp"

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw CLI::RuntimeError("cannot open output file '" + path + "'", 1);
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw CLI::RuntimeError("cannot open input file '" + path + "'", 1);
  return is;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximal-rank inference for noisy high-frequency diffusions"};
  app.require_subcommand(1);

  // ---- simulate ------------------------------------------------------------
  struct {
    std::string model = "d1m1";
    double delta = 1e-4;
    double T = 1.0;
    double sigma_tilde_scale = 2.0;
    std::uint64_t seed = 1;
    bool latent = false;
    std::string out;
  } sim;
  auto* c_sim = app.add_subcommand("simulate", "Simulate one path, write CSV");
  c_sim->add_option("--model", sim.model, "Zoo model label (d{1..3}m{1..4})");
  c_sim->add_option("--delta", sim.delta, "Observation spacing delta_n");
  c_sim->add_option("-T,--horizon", sim.T, "Time horizon");
  c_sim->add_option("--sigma-tilde-scale", sim.sigma_tilde_scale,
                    "Perturbation scale (sigma_tilde = scale * I)");
  c_sim->add_option("--seed", sim.seed, "Master seed");
  c_sim->add_flag("--latent", sim.latent, "Also store the latent path");
  c_sim->add_option("-o,--out", sim.out, "Output CSV (default stdout)");

  // ---- test ----------------------------------------------------------------
  struct {
    std::string model = "d1m1";
    double delta = 1e-5;
    double T = 1.0;
    double theta = 1.0 / 3.0;
    double sigma_tilde_scale = 2.0;
    double alpha = 0.05;
    std::uint64_t seed = 1;
    std::optional<int> k_n;
    std::string input;
    std::string variance_mode = "combined";
    std::string json_out, csv_out;
  } tst;
  auto* c_test =
      app.add_subcommand("test", "Rank test on one simulated or imported path");
  c_test->add_option("--model", tst.model, "Zoo model label");
  c_test->add_option("--delta", tst.delta, "Observation spacing delta_n");
  c_test->add_option("-T,--horizon", tst.T, "Time horizon");
  c_test->add_option("--theta", tst.theta, "Window tuning constant");
  c_test->add_option("--sigma-tilde-scale", tst.sigma_tilde_scale,
                     "Perturbation scale");
  c_test->add_option("--alpha", tst.alpha, "Test level");
  c_test->add_option("--seed", tst.seed, "Master seed");
  c_test->add_option("--k-n", tst.k_n, "Window size override");
  c_test->add_option("-i,--input", tst.input,
                     "Read a previously exported CSV instead of simulating");
  c_test->add_option("--variance-mode", tst.variance_mode,
                     "Variance estimator: combined or prime")
      ->check(CLI::IsMember({"combined", "prime"}));
  c_test->add_option("--json", tst.json_out, "Write full report as JSON");
  c_test->add_option("--csv", tst.csv_out, "Write full report as CSV");

  // ---- mc ------------------------------------------------------------------
  struct {
    std::string config;
    std::string model;
    std::optional<double> delta, T, theta, alpha;
    std::optional<std::int64_t> reps;
    std::optional<std::uint64_t> seed;
    std::optional<int> k_n, workers;
    std::string table_out, json_out;
    bool rows = false;
  } mc;
  auto* c_mc = app.add_subcommand("mc", "Monte Carlo experiment over many paths");
  c_mc->add_option("-c,--config", mc.config, "Key=value configuration file");
  c_mc->add_option("--model", mc.model, "Override: zoo model label");
  c_mc->add_option("--delta", mc.delta, "Override: delta_n");
  c_mc->add_option("-T,--horizon", mc.T, "Override: horizon");
  c_mc->add_option("--theta", mc.theta, "Override: theta");
  c_mc->add_option("--alpha", mc.alpha, "Override: test level");
  c_mc->add_option("--reps", mc.reps, "Override: repetition count");
  c_mc->add_option("--seed", mc.seed, "Override: master seed");
  c_mc->add_option("--k-n", mc.k_n, "Override: window size");
  c_mc->add_option("--workers", mc.workers, "Override: worker threads");
  c_mc->add_option("--table", mc.table_out, "Write summary row CSV here");
  c_mc->add_option("--json", mc.json_out, "Write full JSON report here");
  c_mc->add_flag("--rows", mc.rows, "Include per-repetition rows in JSON");

  // ---- oracle --------------------------------------------------------------
  struct {
    int d = 1, q = 1, r = 1, kappa = 1, substeps = 2000;
    std::int64_t draws = 100000;
    double theta = 1.0 / 3.0;
    double alpha_scale = 1.0, beta_scale = 0.0, gamma_scale = 0.0,
           a_scale = 0.0, phi_scale = 0.0;
    std::uint64_t seed = 1;
    int workers = 0;
    bool pair = false;
  } orc;
  auto* c_orc = app.add_subcommand(
      "oracle", "Estimate limiting block-law constants by Monte Carlo");
  c_orc->add_option("--d", orc.d, "Block dimension");
  c_orc->add_option("--q", orc.q, "Driving Brownian dimension");
  c_orc->add_option("--r", orc.r, "Candidate rank");
  c_orc->add_option("--kappa", orc.kappa, "Spacing arm (1 or 2)")
      ->check(CLI::IsMember({1, 2}));
  c_orc->add_option("--draws", orc.draws, "Monte Carlo draws");
  c_orc->add_option("--substeps", orc.substeps, "Integration substeps per block");
  c_orc->add_option("--theta", orc.theta, "Window tuning constant");
  c_orc->add_option("--alpha-scale", orc.alpha_scale, "alpha = s * I (d x q)");
  c_orc->add_option("--beta-scale", orc.beta_scale, "beta = s * I");
  c_orc->add_option("--gamma-scale", orc.gamma_scale, "gamma[l] = s * I");
  c_orc->add_option("--a-scale", orc.a_scale, "a = s * ones");
  c_orc->add_option("--phi-scale", orc.phi_scale, "phi = s * I");
  c_orc->add_option("--seed", orc.seed, "Master seed");
  c_orc->add_option("--workers", orc.workers, "Worker threads");
  c_orc->add_flag("--pair", orc.pair,
                  "Compare (g, kappa=1) against (h, kappa=2) instead of a "
                  "single-arm estimate");

  // ---- weights -------------------------------------------------------------
  struct {
    std::string plot, out_prefix;
    std::vector<std::string> check;
    int points = 513;
  } wgt;
  auto* c_wgt =
      app.add_subcommand("weights", "Inspect or validate weight-function pairs");
  c_wgt->add_option("--plot", wgt.plot, "Write dense 'x g h' samples here");
  c_wgt->add_option("--points", wgt.points, "Sample count for --plot");
  c_wgt->add_option("--out-prefix", wgt.out_prefix,
                    "Write breakpoint files <prefix>_g.txt, <prefix>_h.txt");
  c_wgt->add_option("--check", wgt.check,
                    "Validate a pair from two breakpoint files")
      ->expected(2);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*c_sim) {
      const volrank::ModelSpec model = volrank::model_by_label(sim.model);
      const auto pert = volrank::PerturbationConfig::scaled_identity(
          model.d, sim.sigma_tilde_scale);
      const volrank::PathDataset path = volrank::simulate_path(
          model, pert, sim.delta, sim.T, sim.seed, sim.latent);
      if (sim.out.empty()) {
        volrank::export_csv(path, std::cout);
      } else {
        auto os = open_out(sim.out);
        volrank::export_csv(path, os);
        std::cerr << "wrote " << path.n_obs() << " observations to " << sim.out
                  << "\n";
      }
    } else if (*c_test) {
      const auto [g, h] = volrank::canonical_pair();
      volrank::PathDataset path;
      if (!tst.input.empty()) {
        auto is = open_in(tst.input);
        path = volrank::import_csv(is);
      } else {
        const volrank::ModelSpec model = volrank::model_by_label(tst.model);
        const auto pert = volrank::PerturbationConfig::scaled_identity(
            model.d, tst.sigma_tilde_scale);
        path = volrank::simulate_path(model, pert, tst.delta, tst.T, tst.seed);
      }
      const auto mode = tst.variance_mode == "prime"
                            ? volrank::VarianceMode::Prime
                            : volrank::VarianceMode::Combined;
      const volrank::RankTestReport rep =
          volrank::compute_report(path, g, h, tst.theta, tst.k_n, mode);
      std::cout << "r_hat = " << rep.r_hat << "  (integer estimate "
                << rep.r_hat_int << ", " << rep.n_blocks << " blocks, k_n = "
                << rep.k_n << (rep.used_fallback ? ", fallback variance" : "")
                << ")\n";
      for (int r = 0; r <= rep.d; ++r) {
        const auto eq = volrank::test_rank_equals(rep.r_hat, r, rep.V_used,
                                                  rep.u_n, tst.alpha);
        const auto le = volrank::test_rank_at_most(rep.r_hat, r, rep.V_used,
                                                   rep.u_n, tst.alpha);
        std::cout << "  H0 R=" << r << ": " << (eq.reject ? "reject" : "retain")
                  << "   H0 R<=" << r << ": "
                  << (le.reject ? "reject" : "retain") << "\n";
      }
      if (!tst.json_out.empty()) {
        auto os = open_out(tst.json_out);
        os << volrank::report_to_json(rep).dump(2) << "\n";
      }
      if (!tst.csv_out.empty()) {
        auto os = open_out(tst.csv_out);
        os << volrank::report_to_csv(rep);
      }
    } else if (*c_mc) {
      volrank::ExperimentConfig cfg;
      if (!mc.config.empty()) {
        auto is = open_in(mc.config);
        cfg = volrank::parse_config(is);
      }
      if (!mc.model.empty()) cfg.model = mc.model;
      if (mc.delta) cfg.delta_n = *mc.delta;
      if (mc.T) cfg.T = *mc.T;
      if (mc.theta) cfg.theta = *mc.theta;
      if (mc.alpha) cfg.alpha = *mc.alpha;
      if (mc.reps) cfg.n_reps = *mc.reps;
      if (mc.seed) cfg.seed = *mc.seed;
      if (mc.k_n) cfg.k_n_override = *mc.k_n;
      if (mc.workers) cfg.workers = *mc.workers;
      const volrank::MCReport rep = volrank::run_experiment(cfg);
      std::cout << volrank::table_csv(rep);
      std::cerr << "model " << cfg.model << ": " << rep.n_valid << "/"
                << cfg.n_reps << " valid repetitions, " << rep.fallback_count
                << " fallback, " << rep.wall_seconds << " s\n";
      if (!mc.table_out.empty()) {
        auto os = open_out(mc.table_out);
        os << volrank::table_csv(rep);
      }
      if (!mc.json_out.empty()) {
        auto os = open_out(mc.json_out);
        os << volrank::report_to_json(rep, mc.rows).dump(2) << "\n";
      }
    } else if (*c_orc) {
      volrank::LimitParams u = volrank::LimitParams::zeros(orc.d, orc.q, orc.theta);
      for (int i = 0; i < std::min(orc.d, orc.q); ++i)
        u.alpha(i, i) = orc.alpha_scale;
      u.beta = orc.beta_scale * Eigen::MatrixXd::Identity(orc.d, orc.d);
      for (auto& gm : u.gamma)
        gm = orc.gamma_scale * Eigen::MatrixXd::Identity(orc.q, orc.q);
      u.a = orc.a_scale * Eigen::VectorXd::Ones(orc.d);
      u.phi = orc.phi_scale * Eigen::MatrixXd::Identity(orc.d, orc.d);
      const auto [g, h] = volrank::canonical_pair();
      if (orc.pair) {
        const auto diag = volrank::check_pair_consistency(
            u, g, h, orc.r, orc.draws, orc.substeps, orc.seed, orc.workers);
        std::cout << "gamma(g,1)  = " << diag.first.gamma << " +/- "
                  << diag.first.se_gamma << "\n"
                  << "gamma(h,2)  = " << diag.second.gamma << " +/- "
                  << diag.second.se_gamma << "\n"
                  << "gamma'(g,1) = " << diag.first.gamma_prime << " +/- "
                  << diag.first.se_gamma_prime << "\n"
                  << "gamma'(h,2) = " << diag.second.gamma_prime << " +/- "
                  << diag.second.se_gamma_prime << "\n"
                  << "z(gamma) = " << diag.z_gamma
                  << "   z(gamma') = " << diag.z_gamma_prime << "\n";
      } else {
        const auto est = volrank::estimate_gamma(
            u, g, orc.kappa, orc.r, orc.draws, orc.substeps, orc.seed,
            orc.workers);
        std::cout << "gamma_" << orc.r << "  = " << est.gamma << " +/- "
                  << est.se_gamma << "\n"
                  << "gamma'_" << orc.r << " = " << est.gamma_prime << " +/- "
                  << est.se_gamma_prime << "\n";
      }
    } else if (*c_wgt) {
      volrank::WeightFunction g = volrank::canonical_pair().first;
      volrank::WeightFunction h = volrank::canonical_pair().second;
      if (wgt.check.size() == 2) {
        auto gi = open_in(wgt.check[0]);
        auto hi = open_in(wgt.check[1]);
        g = volrank::weight_from_text(gi);
        h = volrank::weight_from_text(hi);
      }
      volrank::validate_pair(g, h);
      const auto mg = volrank::psi_moments(g);
      const auto mh = volrank::psi_moments(h);
      std::cout << "pair valid: psi1(h) = 4 psi1(g), psi2/3/4 match\n";
      std::cout << "  g: psi1 = " << mg.psi1 << "  psi2 = " << mg.psi2
                << "  psi3 = " << mg.psi3 << "  psi4 = " << mg.psi4 << "\n";
      std::cout << "  h: psi1 = " << mh.psi1 << "  psi2 = " << mh.psi2
                << "  psi3 = " << mh.psi3 << "  psi4 = " << mh.psi4 << "\n";
      if (!wgt.out_prefix.empty()) {
        auto og = open_out(wgt.out_prefix + "_g.txt");
        og << volrank::to_text(g);
        auto oh = open_out(wgt.out_prefix + "_h.txt");
        oh << volrank::to_text(h);
      }
      if (!wgt.plot.empty()) {
        auto os = open_out(wgt.plot);
        volrank::emit_weight_plot(g, h, wgt.points, os);
      }
    }
  } catch (const CLI::RuntimeError& e) {
    std::cerr << "error: exit " << e.get_exit_code() << "\n";
    return e.get_exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
