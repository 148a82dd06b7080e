// SPDX-License-Identifier: Apache-2.0
//
// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "robust_scatter/applications.hpp"
#include "robust_scatter/asymptotics.hpp"
#include "robust_scatter/estimators.hpp"
#include "robust_scatter/experiments.hpp"

using namespace robust_scatter;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << x;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

CMatrix random_matrix(std::size_t m, RngStream& rng) {
  CMatrix a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) a(i, j) = rng.complex_normal();
  return a;
}

HermitianMatrix random_pd(std::size_t m, RngStream& rng) {
  const CMatrix b = random_matrix(m, rng);
  CMatrix a = b * b.adjoint();
  for (std::size_t i = 0; i < m; ++i) a(i, i) += static_cast<double>(m);
  return HermitianMatrix(a);
}

const ResultRow& find_row(const ExperimentResult& res, const std::string& estimator, std::size_t n) {
  for (const auto& r : res.rows)
    if (r.estimator == estimator && r.n == n) return r;
  throw Error("no row for " + estimator + " at N=" + std::to_string(n));
}

ExperimentConfig base(ExperimentKind kind, const std::string& model, std::vector<std::size_t> grid, std::size_t trials) {
  ExperimentConfig cfg = default_config(kind);
  cfg.model = model;
  cfg.estimators = {"scm", "huber:0.75"};
  cfg.m = 3;
  cfg.n_grid = std::move(grid);
  cfg.trials = trials;
  cfg.seed = 42;
  return cfg;
}

const std::vector<std::size_t> kDoaGrid = {10, 20, 40, 80, 160, 320, 640};
const std::vector<std::size_t> kAnmfGrid = {20, 50, 100, 200, 500, 1000};

Outcome sigma1_anchor() {
  const auto t0 = std::chrono::steady_clock::now();
  const AsymptoticVariance av = complex_sigma12(huber_weight(0.75, 3), 3, RadialModel::gaussian());
  const double dt = seconds_since(t0);
  return {std::abs(av.sigma1 - 1.067) <= 0.005 && dt < 1.0 && !av.monte_carlo,
          "sigma1=" + fmt(av.sigma1, 7) + " in " + fmt(dt, 3) + " s"};
}

Outcome scm_specialization() {
  const AsymptoticVariance av = complex_sigma12(scm_weight(), 3, RadialModel::gaussian());
  const double err = std::max({std::abs(av.sigma - 1.0), std::abs(av.sigma1 - 1.0), std::abs(av.sigma2)});
  return {err < 1e-8, "(sigma, sigma1, sigma2)=(" + fmt(av.sigma, 12) + ", " + fmt(av.sigma1, 12) + ", " +
                          fmt(av.sigma2, 3) + ")"};
}

Outcome fixed_point_contract() {
  const WeightFunction w = huber_weight(0.75, 3);
  FixedPointOptions opt;
  opt.max_iter = 200;
  int failures = 0;
  int worst_iter = 0;
  double worst_res = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    RngStream rng(1001, i);
    const SampleSet x = sample_complex_gaussian(random_pd(3, rng), 500, rng);
    try {
      const ScatterEstimate e = m_estimate_fixed_point(x, w, opt);
      const double res = estimating_equation_residual(x, w, e.matrix);
      worst_iter = std::max(worst_iter, e.iterations);
      worst_res = std::max(worst_res, res);
      if (!(res < 1e-8) || e.iterations > 200) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  }
  return {failures == 0, std::to_string(failures) + " failures, max iterations " + std::to_string(worst_iter) +
                             ", max residual " + fmt(worst_res, 3)};
}

Outcome embedding_identities() {
  double worst_inv = 0.0;
  double worst_quad = 0.0;
  for (const std::size_t m : {2u, 3u, 8u}) {
    RngStream rng(1002, m);
    for (int t = 0; t < 100; ++t) {
      const HermitianMatrix a = random_pd(m, rng);
      const RMatrix fa_inv = lu_inverse(embed_f(a).mat());
      const RMatrix lhs = embed_f(herm_inv(a)).mat();
      worst_inv = std::max(worst_inv, (lhs - fa_inv * 0.25).frobenius_norm() / lhs.frobenius_norm());

      CVector z(m);
      for (auto& v : z) v = rng.complex_normal();
      const std::vector<double> u = stack_real(z);
      const std::vector<double> iu = fa_inv * u;
      double form = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i) form += u[i] * iu[i];
      const double quad = Cholesky(a).inverse_quad_form(z);
      worst_quad = std::max(worst_quad, std::abs(quad - 0.5 * form) / quad);
    }
  }
  return {worst_inv < 1e-12 && worst_quad < 1e-12,
          "max rel error f(A^-1): " + fmt(worst_inv, 3) + ", quadratic form: " + fmt(worst_quad, 3)};
}

Outcome covariance_match() {
  ExperimentConfig cfg = base(ExperimentKind::CovAsymptotics, "gaussian", {2000}, 10000);
  cfg.m = 2;
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg);
  const double dt = seconds_since(t0);
  double scm_dev = 0.0;
  double huber_dev = 0.0;
  for (const auto& r : res.rows) {
    if (r.failures) return {false, r.estimator + ": " + std::to_string(r.failures) + " failed trials"};
    double& dev = r.estimator == "scm" ? scm_dev : huber_dev;
    dev = std::max(dev, r.value);
  }
  return {scm_dev < 0.10 && huber_dev < 0.15 && dt < 900.0,
          "max rel dev scm " + fmt(scm_dev, 3) + " (< 0.10), huber " + fmt(huber_dev, 3) + " (< 0.15), " + fmt(dt, 3) +
              " s"};
}

Outcome doa_overlap() {
  ExperimentConfig cfg = base(ExperimentKind::DoaRmse, "gaussian", kDoaGrid, 2000);
  cfg.scaled_overlay = true;
  const ExperimentResult res = run_experiment(cfg);
  double worst = 0.0;
  for (const std::size_t n : kDoaGrid) {
    if (n < 40) continue;
    const double r = find_row(res, overlay_id("huber:0.75"), n).value / find_row(res, "scm", n).value;
    worst = std::max(worst, std::abs(r - 1.0));
  }
  return {worst <= 0.05 && !res.any_failed(), "max |RMSE ratio - 1| over N >= 40: " + fmt(worst, 3)};
}

Outcome anmf_overlap_ratio() {
  ExperimentConfig cfg = base(ExperimentKind::AnmfVariance, "gaussian", kAnmfGrid, 2000);
  cfg.scaled_overlay = true;
  const ExperimentResult res = run_experiment(cfg);
  double lo = 1e300;
  double hi = -1e300;
  for (const std::size_t n : kAnmfGrid) {
    if (n < 100) continue;
    const double r = find_row(res, "scm", n).value / find_row(res, overlay_id("huber:0.75"), n).value;
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return {lo >= 0.9 && hi <= 1.1 && !res.any_failed(), "variance ratio range over N >= 100: [" + fmt(lo) + ", " +
                                                           fmt(hi) + "]"};
}

Outcome robustness_ordering() {
  std::vector<std::pair<std::string, ExperimentResult>> runs;
  runs.emplace_back("doa nu=0.1", run_experiment(base(ExperimentKind::DoaRmse, "k-dist:0.1", kDoaGrid, 2000)));
  runs.emplace_back("anmf nu=0.1", run_experiment(base(ExperimentKind::AnmfVariance, "k-dist:0.1", kAnmfGrid, 2000)));
  runs.emplace_back("anmf nu=0.01", run_experiment(base(ExperimentKind::AnmfVariance, "k-dist:0.01", kAnmfGrid, 2000)));
  double min_z = 1e300;
  std::string where;
  for (const auto& [name, res] : runs) {
    for (const std::size_t n : res.config.n_grid) {
      const ResultRow& s = find_row(res, "scm", n);
      const ResultRow& h = find_row(res, "huber:0.75", n);
      const double z = (s.value - h.value) / std::hypot(s.std_error, h.std_error);
      if (!(z >= min_z)) {
        min_z = z;
        where = name + " N=" + std::to_string(n);
      }
    }
  }
  return {min_z > 3.0, "smallest (SCM - Huber) / combined SE: " + fmt(min_z) + " at " + where};
}

Outcome functional_ratio() {
  ExperimentConfig cfg = base(ExperimentKind::Theorem2Ratio, "gaussian", {1000}, 5000);
  cfg.functional = "anmf";
  const ExperimentResult res = run_experiment(cfg);
  const ResultRow& r = find_row(res, "huber:0.75", 1000);
  const double s1 = res.sigmas.at("huber:0.75").sigma1;
  return {std::abs(r.value - s1) <= 0.05, "Var ratio " + fmt(r.value) + " +- " + fmt(r.std_error, 2) +
                                              " vs sigma1 " + fmt(s1)};
}

Outcome degree0_invariance() {
  const UlaConfig ula{};
  const ArrayScenario sc(ula, {20.0}, 5.0, {HermitianMatrix::identity(3), RadialModel::gaussian()});
  const MusicSearch search(ula, DegreeGrid{});
  double worst_doa = 0.0;
  double worst_anmf = 0.0;
  for (std::uint64_t t = 0; t < 20; ++t) {
    RngStream rng(1003, t);
    const HermitianMatrix m = huber_estimate(sc.draw_many(100, rng), 0.75).matrix;
    CVector y(3);
    for (auto& v : y) v = rng.complex_normal();
    const CVector p = steering(0.0, ula);
    const double doa = search.doa(m).doas.front();
    const double anmf = anmf_statistic({y, p, m});
    for (const double alpha : {1e-3, 1e3}) {
      const HermitianMatrix scaled = m.scaled(alpha);
      worst_doa = std::max(worst_doa, std::abs(search.doa(scaled).doas.front() - doa));
      worst_anmf = std::max(worst_anmf, std::abs(anmf_statistic({y, p, scaled}) - anmf));
    }
  }
  return {worst_doa <= 1e-10 && worst_anmf <= 1e-10,
          "max change music_doa " + fmt(worst_doa, 3) + " deg, anmf " + fmt(worst_anmf, 3)};
}

Outcome determinism() {
  std::vector<ExperimentConfig> cfgs;
  {
    ExperimentConfig c = base(ExperimentKind::DoaRmse, "gaussian", {10, 40, 160}, 200);
    c.scaled_overlay = true;
    cfgs.push_back(c);
  }
  cfgs.push_back(base(ExperimentKind::AnmfVariance, "k-dist:0.1", {20, 100}, 200));
  {
    ExperimentConfig c = base(ExperimentKind::CovAsymptotics, "gaussian", {100}, 200);
    c.m = 2;
    cfgs.push_back(c);
  }
  cfgs.push_back(base(ExperimentKind::Theorem2Ratio, "gaussian", {100}, 200));
  for (const auto& cfg : cfgs) {
    const std::string a = to_csv(run_experiment(cfg, RunOptions{1, false}));
    const std::string b = to_csv(run_experiment(cfg, RunOptions{1, false}));
    const std::string c = to_csv(run_experiment(cfg, RunOptions{8, false}));
    if (a != b || a != c) return {false, experiment_name(cfg.experiment) + " CSV differs"};
  }
  return {true, std::to_string(cfgs.size()) + " configs byte-identical at 1 and 8 threads"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"sigma1 anchor", sigma1_anchor},
      {"SCM specialization", scm_specialization},
      {"fixed-point contract", fixed_point_contract},
      {"embedding identities", embedding_identities},
      {"limiting covariance match", covariance_match},
      {"DOA RMSE overlap at ceil(sigma1 N)", doa_overlap},
      {"ANMF variance ratio at ceil(sigma1 N)", anmf_overlap_ratio},
      {"robustness ordering", robustness_ordering},
      {"ANMF Huber/SCM variance ratio", functional_ratio},
      {"degree-0 invariance", degree0_invariance},
      {"determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
