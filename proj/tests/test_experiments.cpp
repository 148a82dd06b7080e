// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>
#include <cmath>

#include "robust_scatter/applications.hpp"
#include "robust_scatter/experiments.hpp"

using namespace robust_scatter;
using Catch::Approx;

namespace {

ExperimentConfig small_doa() {
  ExperimentConfig cfg = default_config(ExperimentKind::DoaRmse);
  cfg.n_grid = {10, 40};
  cfg.trials = 30;
  cfg.grid_step = 0.1;
  return cfg;
}

bool mentions(const ConfigError& e, const std::string& needle) {
  for (const auto& p : e.problems())
    if (p.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_CASE("config text parsing") {
  const RawConfig kv = parse_config_text("# comment\nexperiment = doa-rmse\nn-grid = 10, 20\n\ntrials=5 # trailing\n");
  REQUIRE(kv.at("experiment") == "doa-rmse");
  REQUIRE(kv.at("n-grid") == "10, 20");
  REQUIRE(kv.at("trials") == "5");
  const ExperimentConfig cfg = config_from_raw(kv);
  REQUIRE(cfg.n_grid == std::vector<std::size_t>{10, 20});
  REQUIRE(cfg.trials == 5);

  const RawConfig js = parse_config_text(R"({"experiment": "anmf-variance", "n-grid": [10, 20], "trials": 5,
                                             "scaled-overlay": true, "estimators": ["scm", "huber:0.9"]})");
  const ExperimentConfig j = config_from_raw(js);
  REQUIRE(j.experiment == ExperimentKind::AnmfVariance);
  REQUIRE(j.scaled_overlay);
  REQUIRE(j.estimators == std::vector<std::string>{"scm", "huber:0.9"});

  REQUIRE_THROWS_AS(parse_config_text("experiment = doa-rmse\nexperiment = anmf-variance\n"), ConfigError);
  REQUIRE_THROWS_AS(parse_config_text("{\"experiment\": 1"), ConfigError);
}

TEST_CASE("config validation lists every problem") {
  RawConfig raw = {{"experiment", "doa-rmse"}, {"n-grid", "10, 5, x"}, {"bogus", "1"}, {"model", "k-dist:-1"}};
  try {
    config_from_raw(raw);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(mentions(e, "N-grid"));
    REQUIRE(mentions(e, "bogus"));
    REQUIRE(mentions(e, "model"));
  }
  try {
    config_from_raw({{"experiment", "doa-rmse"}, {"n-grid", "20, 10"}});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    REQUIRE(mentions(e, "N-grid: must be strictly increasing"));
  }
  REQUIRE_THROWS_AS(config_from_raw({{"n-grid", "10"}}), ConfigError);
  REQUIRE_THROWS_AS(config_from_raw({{"experiment", "nope"}}), ConfigError);

  ExperimentConfig t2 = default_config(ExperimentKind::Theorem2Ratio);
  t2.estimators = {"huber:0.75"};
  REQUIRE_FALSE(validation_problems(t2).empty());
  ExperimentConfig cov = default_config(ExperimentKind::CovAsymptotics);
  cov.estimators = {"tyler"};
  REQUIRE_FALSE(validation_problems(cov).empty());
  REQUIRE(validation_problems(small_doa()).empty());
}

TEST_CASE("config round-trip and content hash") {
  const ExperimentConfig cfg = small_doa();
  const ExperimentConfig back = config_from_raw(config_to_raw(cfg));
  REQUIRE(config_json(back) == config_json(cfg));
  REQUIRE(config_hash(back) == config_hash(cfg));
  REQUIRE(config_hash(cfg).size() == 40);

  ExperimentConfig other = cfg;
  other.seed = 43;
  REQUIRE(config_hash(other) != config_hash(cfg));
  REQUIRE(config_hash(cfg) == config_hash(config_from_raw(parse_config_text(config_json(cfg)))));
}

TEST_CASE("stream ids and overlay counts") {
  REQUIRE(trial_stream(0, 0) == 0);
  REQUIRE(trial_stream(1, 2) == (std::uint64_t{1} << 32) + 2);
  REQUIRE(trial_stream(3, 7) != trial_stream(7, 3));
  REQUIRE(overlay_count(1.0, 100) == 100);
  REQUIRE(overlay_count(1.067, 100) == 107);
  REQUIRE(overlay_count(1.06, 100) == 106);
  REQUIRE(overlay_count(1.5, 3) == 5);
  REQUIRE(overlay_id("huber:0.75") == "huber:0.75@sigma1N");
}

TEST_CASE("format_double round-trips") {
  for (const double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 1e-300, 6.02e23})
    REQUIRE(std::stod(format_double(x)) == x);
  REQUIRE(format_double(std::nan("")) == "nan");
  REQUIRE(format_double(INFINITY) == "inf");
  REQUIRE(format_double(-INFINITY) == "-inf");
  REQUIRE(format_double(0.5) == "0.5");
}

TEST_CASE("single-trial RMSE equals the absolute error of that trial") {
  ExperimentConfig cfg = small_doa();
  cfg.trials = 1;
  cfg.estimators = {"scm"};
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.rows.size() == 2);

  const UlaConfig ula{cfg.m, cfg.spacing, 1};
  const ArrayScenario sc(ula, {cfg.doa}, cfg.snr_db, {HermitianMatrix::identity(cfg.m), RadialModel::gaussian()});
  for (std::size_t c = 0; c < cfg.n_grid.size(); ++c) {
    RngStream rng(cfg.seed, trial_stream(c, 0));
    const SampleSet x = sc.draw_many(cfg.n_grid[c], rng);
    const double doa = music_doa(scm(x).matrix, ula, DegreeGrid{-90.0, 90.0, cfg.grid_step}).doas.front();
    REQUIRE(res.rows[c].value == Approx(std::abs(doa - cfg.doa)).epsilon(1e-12));
    REQUIRE(res.rows[c].n == cfg.n_grid[c]);
    REQUIRE(res.rows[c].statistic == "rmse_deg");
  }
}

TEST_CASE("runner output is independent of threads and matches the serial path") {
  ExperimentConfig cfg = small_doa();
  cfg.scaled_overlay = true;
  const ExperimentResult serial = run_experiment(cfg, RunOptions{0, true});
  const ExperimentResult one = run_experiment(cfg, RunOptions{1, false});
  const ExperimentResult eight = run_experiment(cfg, RunOptions{8, false});
  REQUIRE(to_csv(one) == to_csv(serial));
  REQUIRE(to_csv(eight) == to_csv(serial));
  REQUIRE(to_json(eight) == to_json(serial));
  REQUIRE(serial.rows.size() == 3 * cfg.n_grid.size());
  REQUIRE(serial.rows[2 * cfg.n_grid.size()].estimator == "huber:0.75@sigma1N");
  REQUIRE(serial.rows[2 * cfg.n_grid.size()].samples == overlay_count(serial.sigmas.at("huber:0.75").sigma1, 10));

  ExperimentConfig anmf = default_config(ExperimentKind::AnmfVariance);
  anmf.n_grid = {10, 30};
  anmf.trials = 40;
  REQUIRE(to_csv(run_experiment(anmf, RunOptions{0, true})) == to_csv(run_experiment(anmf, RunOptions{3, false})));
}

TEST_CASE("CSV and JSON round-trips") {
  ExperimentConfig cfg = small_doa();
  const ExperimentResult res = run_experiment(cfg);
  const std::string csv = to_csv(res);
  REQUIRE(csv.substr(0, kCsvHeader.size()) == kCsvHeader);
  const std::vector<ResultRow> rows = parse_csv(csv);
  REQUIRE(rows.size() == res.rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(rows[i].estimator == res.rows[i].estimator);
    REQUIRE(rows[i].n == res.rows[i].n);
    REQUIRE(rows[i].value == res.rows[i].value);
    REQUIRE(rows[i].std_error == res.rows[i].std_error);
    REQUIRE(rows[i].sigma1 == res.rows[i].sigma1);
  }
  const ExperimentResult back = parse_json(to_json(res));
  REQUIRE(back.rows == res.rows);
  REQUIRE(back.content_hash == res.content_hash);
  REQUIRE(config_json(back.config) == config_json(res.config));
  REQUIRE(back.sigmas.at("huber:0.75").sigma1 == res.sigmas.at("huber:0.75").sigma1);

  ExperimentResult empty = res;
  empty.rows.clear();
  REQUIRE(to_csv(empty) == std::string(kCsvHeader) + "\n");
  REQUIRE(parse_csv(to_csv(empty)).empty());
  REQUIRE_THROWS_AS(parse_csv("bad,header\n"), InvalidArgument);
  REQUIRE_THROWS_AS(parse_json("{"), InvalidArgument);
}

TEST_CASE("failed trials are counted") {
  ExperimentConfig cfg = small_doa();
  cfg.estimators = {"scm", "huber:0.75"};
  cfg.max_iter = 1;
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.any_failed());
  for (const auto& r : res.rows) {
    if (r.estimator == "scm") {
      REQUIRE(r.failures == 0);
      REQUIRE_FALSE(r.failed);
    } else {
      REQUIRE(r.failures == cfg.trials);
      REQUIRE(r.failed);
      REQUIRE(r.trials == cfg.trials);
    }
  }
}

TEST_CASE("RMSE decreases with N and ratio rows skip the SCM reference") {
  ExperimentConfig cfg = small_doa();
  cfg.n_grid = {20, 200, 2000};
  cfg.trials = 100;
  const ExperimentResult res = run_experiment(cfg);
  for (std::size_t s = 0; s < 2; ++s) {
    REQUIRE(res.rows[3 * s].value > res.rows[3 * s + 1].value);
    REQUIRE(res.rows[3 * s + 1].value > res.rows[3 * s + 2].value);
  }

  ExperimentConfig t2 = default_config(ExperimentKind::Theorem2Ratio);
  t2.estimators = {"scm"};
  t2.n_grid = {50};
  t2.trials = 50;
  REQUIRE(run_experiment(t2).rows.empty());
  t2.estimators = {"huber:0.75", "scm"};
  const ExperimentResult r2 = run_experiment(t2);
  REQUIRE(r2.rows.size() == 1);
  REQUIRE(r2.rows[0].estimator == "huber:0.75");
  REQUIRE(r2.rows[0].statistic == "var_ratio");
  REQUIRE(r2.rows[0].value > 0.5);
  REQUIRE(r2.rows[0].value < 2.0);
}

TEST_CASE("covariance experiment reports Sigma and Omega deviations") {
  ExperimentConfig cfg = default_config(ExperimentKind::CovAsymptotics);
  cfg.m = 2;
  cfg.n_grid = {200};
  cfg.trials = 400;
  cfg.estimators = {"scm"};
  const ExperimentResult res = run_experiment(cfg);
  REQUIRE(res.rows.size() == 2);
  REQUIRE(res.rows[0].statistic == "max_rel_dev_sigma");
  REQUIRE(res.rows[1].statistic == "max_rel_dev_omega");
  for (const auto& r : res.rows) {
    REQUIRE(r.value >= 0.0);
    REQUIRE(r.value < 0.5);
  }
}
