// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/experiments.hpp"

#include <omp.h>

#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>

#include "robust_scatter/applications.hpp"

namespace robust_scatter {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kFailureFraction = 0.01;

}  // namespace

std::string overlay_id(const std::string& estimator) { return estimator + std::string(kOverlaySuffix); }

std::size_t overlay_count(double sigma1, std::size_t n) {
  // Guard against sigma1 * n landing a rounding error above an integer.
  const double x = sigma1 * static_cast<double>(n);
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * x) return static_cast<std::size_t>(r);
  return static_cast<std::size_t>(std::ceil(x));
}

std::uint64_t trial_stream(std::size_t cell, std::size_t trial) {
  return (static_cast<std::uint64_t>(cell) << 32) | static_cast<std::uint64_t>(trial);
}

namespace {

struct Series {
  std::string id;
  EstimatorSpec spec;
  bool overlay = false;
  double sigma1 = 1.0;
};

struct Plan {
  ExperimentConfig cfg;
  RadialModel radial;
  std::vector<Series> series;
  std::map<std::string, AsymptoticVariance> sigmas;
  // counts[cell][series]
  std::vector<std::vector<std::size_t>> counts;
  std::vector<std::size_t> max_count;
};

Plan make_plan(const ExperimentConfig& cfg) {
  if (auto problems = validation_problems(cfg); !problems.empty()) throw ConfigError(problems);
  Plan plan;
  plan.cfg = cfg;
  plan.radial = parse_model_id(cfg.model);
  const RadialLaw law = RadialLaw::complex(plan.radial, cfg.m);
  for (const auto& id : cfg.estimators) {
    const EstimatorSpec spec = parse_estimator_id(id);
    AsymptoticVariance av;
    try {
      av = complex_sigma12(weight_for(spec, cfg.m), law);
      plan.sigmas[spec.id()] = av;
    } catch (const NumericalError&) {
      av.sigma = av.sigma1 = av.sigma2 = av.a1 = av.a2 = kNaN;
      if (cfg.scaled_overlay && spec.kind != EstimatorKind::Scm)
        throw NumericalError("no finite sigma1 for '" + spec.id() + "' under '" + cfg.model + "', so no overlay");
      if (cfg.experiment == ExperimentKind::CovAsymptotics) throw;
    }
    plan.series.push_back({spec.id(), spec, false, av.sigma1});
    if (cfg.scaled_overlay && spec.kind != EstimatorKind::Scm)
      plan.series.push_back({overlay_id(spec.id()), spec, true, av.sigma1});
  }
  for (const std::size_t n : cfg.n_grid) {
    std::vector<std::size_t> c;
    std::size_t most = 0;
    for (const auto& s : plan.series) {
      c.push_back(s.overlay ? overlay_count(s.sigma1, n) : n);
      most = std::max(most, c.back());
    }
    plan.counts.push_back(std::move(c));
    plan.max_count.push_back(most);
  }
  return plan;
}

using TrialFn = std::function<void(std::size_t cell, std::size_t trial, std::span<double> out)>;

// table[(cell * trials + trial) * width + k]
std::vector<double> run_trials(std::size_t cells, std::size_t trials, std::size_t width, const TrialFn& fn,
                               const RunOptions& options) {
  std::vector<double> table(cells * trials * width, kNaN);
  const auto total = static_cast<std::ptrdiff_t>(cells * trials);
  const auto slot = [&](std::ptrdiff_t k) {
    return std::span<double>(table.data() + static_cast<std::size_t>(k) * width, width);
  };
  if (options.serial) {
    for (std::ptrdiff_t k = 0; k < total; ++k) {
      const auto ku = static_cast<std::size_t>(k);
      fn(ku / trials, ku % trials, slot(k));
    }
    return table;
  }
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t k = 0; k < total; ++k) {
    try {
      const auto ku = static_cast<std::size_t>(k);
      fn(ku / trials, ku % trials, slot(k));
    } catch (...) {
      const std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return table;
}

// Moments and standard errors from per-trial values. Standard errors use the
// empirical influence function of each statistic.
struct Sample {
  std::vector<double> x;
  std::size_t failures = 0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (const double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return kNaN;
  const double mu = mean_of(v);
  double s = 0.0;
  for (const double x : v) s += (x - mu) * (x - mu);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

struct Estimate {
  double value = kNaN;
  double std_error = kNaN;
};

Estimate rmse(const std::vector<double>& err) {
  if (err.empty()) return {};
  std::vector<double> sq(err.size());
  for (std::size_t i = 0; i < err.size(); ++i) sq[i] = err[i] * err[i];
  const double mse = mean_of(sq);
  const double value = std::sqrt(mse);
  const double se_mse = sd_of(sq) / std::sqrt(static_cast<double>(sq.size()));
  return {value, value > 0.0 ? se_mse / (2.0 * value) : kNaN};
}

// Unbiased variance and its influence values (h - mean)^2 - V.
Estimate variance(const std::vector<double>& h, std::vector<double>* influence = nullptr) {
  if (h.size() < 2) return {h.empty() ? kNaN : 0.0, kNaN};
  const double mu = mean_of(h);
  const auto n = static_cast<double>(h.size());
  double ss = 0.0;
  for (const double x : h) ss += (x - mu) * (x - mu);
  const double v = ss / (n - 1.0);
  std::vector<double> phi(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) phi[i] = (h[i] - mu) * (h[i] - mu) - v;
  const double se = sd_of(phi) / std::sqrt(n);
  if (influence) *influence = std::move(phi);
  return {v, se};
}

Sample column(const std::vector<double>& table, std::size_t cell, std::size_t trials, std::size_t width,
              std::size_t k) {
  Sample s;
  for (std::size_t t = 0; t < trials; ++t) {
    const double v = table[(cell * trials + t) * width + k];
    if (std::isnan(v))
      ++s.failures;
    else
      s.x.push_back(v);
  }
  return s;
}

ResultRow base_row(const Plan& plan, const Series& s, std::size_t cell, std::size_t failures, std::string statistic) {
  ResultRow r;
  r.experiment = experiment_name(plan.cfg.experiment);
  r.estimator = s.id;
  r.model = model_id(plan.radial);
  r.m = plan.cfg.m;
  r.n = plan.cfg.n_grid[cell];
  r.trials = plan.cfg.trials;
  r.statistic = std::move(statistic);
  r.sigma1 = s.sigma1;
  r.seed = plan.cfg.seed;
  r.failures = failures;
  r.failed = static_cast<double>(failures) > kFailureFraction * static_cast<double>(plan.cfg.trials);
  return r;
}

ExperimentResult finish(const Plan& plan, std::vector<ResultRow> rows) {
  ExperimentResult res;
  res.config = plan.cfg;
  res.content_hash = config_hash(plan.cfg);
  res.rows = std::move(rows);
  res.sigmas = plan.sigmas;
  return res;
}

// Row order: series as listed (overlay right after its estimator), then N.
template <class RowFn>
std::vector<ResultRow> rows_by_series(const Plan& plan, RowFn&& fn) {
  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < plan.series.size(); ++s)
    for (std::size_t c = 0; c < plan.cfg.n_grid.size(); ++c)
      for (auto& r : fn(s, c)) rows.push_back(std::move(r));
  return rows;
}

UlaConfig ula_of(const ExperimentConfig& cfg) { return UlaConfig{cfg.m, cfg.spacing, 1}; }

DegreeGrid grid_of(const ExperimentConfig& cfg) { return DegreeGrid{-90.0, 90.0, cfg.grid_step}; }

// DOA errors theta_hat - theta_0 for every series.
TrialFn doa_trial(const Plan& plan, const ArrayScenario& scenario, const MusicSearch& search) {
  return [&plan, &scenario, &search](std::size_t cell, std::size_t trial, std::span<double> out) {
    RngStream rng(plan.cfg.seed, trial_stream(cell, trial));
    const SampleSet all = scenario.draw_many(plan.max_count[cell], rng);
    const FixedPointOptions options = plan.cfg.fixed_point_options();
    for (std::size_t s = 0; s < plan.series.size(); ++s) {
      try {
        const auto est = estimate(plan.series[s].spec, all.prefix(plan.counts[cell][s]), options);
        out[s] = search.doa(est.matrix).doas.front() - plan.cfg.doa;
      } catch (const Error&) {
        out[s] = kNaN;
      }
    }
  };
}

struct AnmfSetup {
  EllipticalSampler noise;
  CVector p;
  CVector fixed_y;
};

AnmfSetup anmf_setup(const Plan& plan) {
  AnmfSetup setup{EllipticalSampler({plan.cfg.scatter_matrix(), plan.radial}),
                  steering(plan.cfg.steering_doa, ula_of(plan.cfg)), CVector(plan.cfg.m)};
  RngStream rng(plan.cfg.seed, kObservationStream);
  setup.noise.draw(rng, setup.fixed_y);
  return setup;
}

TrialFn anmf_trial(const Plan& plan, const AnmfSetup& setup) {
  return [&plan, &setup](std::size_t cell, std::size_t trial, std::span<double> out) {
    RngStream rng(plan.cfg.seed, trial_stream(cell, trial));
    CVector y = setup.fixed_y;
    if (plan.cfg.anmf_y == AnmfObservation::Fresh) setup.noise.draw(rng, y);
    const SampleSet all = setup.noise.draw_many(plan.max_count[cell], rng);
    const FixedPointOptions options = plan.cfg.fixed_point_options();
    for (std::size_t s = 0; s < plan.series.size(); ++s) {
      try {
        const auto est = estimate(plan.series[s].spec, all.prefix(plan.counts[cell][s]), options);
        out[s] = anmf_statistic(Cholesky(est.matrix), y, setup.p);
      } catch (const Error&) {
        out[s] = kNaN;
      }
    }
  };
}

}  // namespace

ExperimentResult run_doa_rmse(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.experiment != ExperimentKind::DoaRmse) throw InvalidArgument("run_doa_rmse: config is not doa-rmse");
  const Plan plan = make_plan(cfg);
  const ArrayScenario scenario(ula_of(cfg), {cfg.doa}, cfg.snr_db, {cfg.scatter_matrix(), plan.radial});
  const MusicSearch search(ula_of(cfg), grid_of(cfg));
  const std::size_t width = plan.series.size();
  const auto table = run_trials(cfg.n_grid.size(), cfg.trials, width, doa_trial(plan, scenario, search), options);
  auto rows = rows_by_series(plan, [&](std::size_t s, std::size_t c) {
    const Sample col = column(table, c, cfg.trials, width, s);
    ResultRow r = base_row(plan, plan.series[s], c, col.failures, "rmse_deg");
    const Estimate e = rmse(col.x);
    r.value = e.value;
    r.std_error = e.std_error;
    r.samples = plan.counts[c][s];
    return std::vector<ResultRow>{r};
  });
  return finish(plan, std::move(rows));
}

ExperimentResult run_anmf_variance(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.experiment != ExperimentKind::AnmfVariance)
    throw InvalidArgument("run_anmf_variance: config is not anmf-variance");
  const Plan plan = make_plan(cfg);
  const AnmfSetup setup = anmf_setup(plan);
  const std::size_t width = plan.series.size();
  const auto table = run_trials(cfg.n_grid.size(), cfg.trials, width, anmf_trial(plan, setup), options);
  auto rows = rows_by_series(plan, [&](std::size_t s, std::size_t c) {
    const Sample col = column(table, c, cfg.trials, width, s);
    ResultRow r = base_row(plan, plan.series[s], c, col.failures, "variance");
    const Estimate e = variance(col.x);
    r.value = e.value;
    r.std_error = e.std_error;
    r.samples = plan.counts[c][s];
    return std::vector<ResultRow>{r};
  });
  return finish(plan, std::move(rows));
}

ExperimentResult run_cov_asymptotics(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.experiment != ExperimentKind::CovAsymptotics)
    throw InvalidArgument("run_cov_asymptotics: config is not cov-asymptotics");
  const Plan plan = make_plan(cfg);
  const std::size_t m = cfg.m;
  const std::size_t d = m * m;
  const std::size_t per = 2 * d;
  const std::size_t width = plan.series.size() * per;
  const EllipticalSampler sampler({cfg.scatter_matrix(), plan.radial});

  const TrialFn fn = [&](std::size_t cell, std::size_t trial, std::span<double> out) {
    RngStream rng(cfg.seed, trial_stream(cell, trial));
    const SampleSet all = sampler.draw_many(plan.max_count[cell], rng);
    const FixedPointOptions fpo = cfg.fixed_point_options();
    for (std::size_t s = 0; s < plan.series.size(); ++s) {
      auto slot = out.subspan(s * per, per);
      try {
        const auto est = estimate(plan.series[s].spec, all.prefix(plan.counts[cell][s]), fpo);
        const CVector v = vec(est.matrix.mat());
        for (std::size_t k = 0; k < d; ++k) {
          slot[2 * k] = v[k].real();
          slot[2 * k + 1] = v[k].imag();
        }
      } catch (const Error&) {
        for (auto& x : slot) x = kNaN;
      }
    }
  };
  const auto table = run_trials(cfg.n_grid.size(), cfg.trials, width, fn, options);

  auto rows = rows_by_series(plan, [&](std::size_t s, std::size_t c) {
    const Series& series = plan.series[s];
    const auto& av = plan.sigmas.at(series.id);
    const HermitianMatrix target = cfg.scatter_matrix().scaled(1.0 / av.sigma);
    const CovariancePair theory = theorem1_covariance(target, av);
    const double n = static_cast<double>(cfg.n_grid[c]);

    std::vector<CVector> xs;
    std::size_t failures = 0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const double* slot = table.data() + (c * cfg.trials + t) * width + s * per;
      if (std::isnan(slot[0])) {
        ++failures;
        continue;
      }
      CVector x(d);
      for (std::size_t k = 0; k < d; ++k) x[k] = {slot[2 * k], slot[2 * k + 1]};
      xs.push_back(std::move(x));
    }
    ResultRow rs = base_row(plan, series, c, failures, "max_rel_dev_sigma");
    ResultRow ro = base_row(plan, series, c, failures, "max_rel_dev_omega");
    rs.samples = ro.samples = plan.counts[c][s];
    rs.value = ro.value = rs.std_error = ro.std_error = kNaN;
    if (xs.size() >= 2) {
      CVector mean(d);
      for (const auto& x : xs)
        for (std::size_t k = 0; k < d; ++k) mean[k] += x[k];
      for (auto& v : mean) v /= static_cast<double>(xs.size());
      const auto count = static_cast<double>(xs.size());
      // Worst relative deviation over entries with |theory| > 0.1, with the
      // Monte-Carlo standard error of that entry.
      const auto worst = [&](const CMatrix& th, bool conjugate) {
        double dev = -1.0;
        double se = kNaN;
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) {
            const double ref = std::abs(th(a, b));
            if (ref <= 0.1) continue;
            cplx acc{};
            double acc2 = 0.0;
            std::vector<cplx> z(xs.size());
            for (std::size_t t = 0; t < xs.size(); ++t) {
              const cplx xb = xs[t][b] - mean[b];
              z[t] = n * (xs[t][a] - mean[a]) * (conjugate ? std::conj(xb) : xb);
              acc += z[t];
            }
            const cplx emp = acc / (count - 1.0);
            const cplx zbar = acc / count;
            for (const auto& zt : z) acc2 += std::norm(zt - zbar);
            const double rel = std::abs(emp - th(a, b)) / ref;
            if (rel > dev) {
              dev = rel;
              se = std::sqrt(acc2 / (count - 1.0) / count) / ref;
            }
          }
        return Estimate{dev < 0.0 ? kNaN : dev, se};
      };
      const Estimate es = worst(theory.sigma, true);
      const Estimate eo = worst(theory.omega, false);
      rs.value = es.value;
      rs.std_error = es.std_error;
      ro.value = eo.value;
      ro.std_error = eo.std_error;
    }
    return std::vector<ResultRow>{rs, ro};
  });
  return finish(plan, std::move(rows));
}

ExperimentResult run_theorem2_ratio(const ExperimentConfig& cfg, const RunOptions& options) {
  if (cfg.experiment != ExperimentKind::Theorem2Ratio)
    throw InvalidArgument("run_theorem2_ratio: config is not theorem2-ratio");
  const Plan plan = make_plan(cfg);
  const bool music = cfg.functional == "music-doa";
  const std::size_t width = plan.series.size();

  std::vector<double> table;
  if (music) {
    const ArrayScenario scenario(ula_of(cfg), {cfg.doa}, cfg.snr_db, {cfg.scatter_matrix(), plan.radial});
    const MusicSearch search(ula_of(cfg), grid_of(cfg));
    table = run_trials(cfg.n_grid.size(), cfg.trials, width, doa_trial(plan, scenario, search), options);
  } else {
    const AnmfSetup setup = anmf_setup(plan);
    table = run_trials(cfg.n_grid.size(), cfg.trials, width, anmf_trial(plan, setup), options);
  }

  std::size_t ref = 0;
  while (plan.series[ref].spec.kind != EstimatorKind::Scm) ++ref;

  std::vector<ResultRow> rows;
  for (std::size_t s = 0; s < plan.series.size(); ++s) {
    if (s == ref) continue;
    for (std::size_t c = 0; c < cfg.n_grid.size(); ++c) {
      std::vector<double> a;
      std::vector<double> b;
      std::size_t failures = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) {
        const double va = table[(c * cfg.trials + t) * width + s];
        const double vb = table[(c * cfg.trials + t) * width + ref];
        if (std::isnan(va) || std::isnan(vb)) {
          ++failures;
          continue;
        }
        a.push_back(va);
        b.push_back(vb);
      }
      ResultRow r = base_row(plan, plan.series[s], c, failures, music ? "mse_ratio" : "var_ratio");
      r.samples = plan.counts[c][s];
      r.value = r.std_error = kNaN;
      if (a.size() >= 2) {
        std::vector<double> phi_a;
        std::vector<double> phi_b;
        double va = 0.0;
        double vb = 0.0;
        if (music) {
          // Mean squared error around the true angle.
          phi_a.resize(a.size());
          phi_b.resize(b.size());
          for (std::size_t i = 0; i < a.size(); ++i) {
            phi_a[i] = a[i] * a[i];
            phi_b[i] = b[i] * b[i];
          }
          va = mean_of(phi_a);
          vb = mean_of(phi_b);
          for (auto& x : phi_a) x -= va;
          for (auto& x : phi_b) x -= vb;
        } else {
          va = variance(a, &phi_a).value;
          vb = variance(b, &phi_b).value;
        }
        const double ratio = va / vb;
        std::vector<double> phi(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) phi[i] = phi_a[i] / va - phi_b[i] / vb;
        r.value = ratio;
        r.std_error = ratio * sd_of(phi) / std::sqrt(static_cast<double>(a.size()));
      }
      rows.push_back(std::move(r));
    }
  }
  return finish(plan, std::move(rows));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  switch (cfg.experiment) {
    case ExperimentKind::DoaRmse:
      return run_doa_rmse(cfg, options);
    case ExperimentKind::AnmfVariance:
      return run_anmf_variance(cfg, options);
    case ExperimentKind::CovAsymptotics:
      return run_cov_asymptotics(cfg, options);
    case ExperimentKind::Theorem2Ratio:
      return run_theorem2_ratio(cfg, options);
  }
  throw InvalidArgument("run_experiment: unknown experiment kind");
}

}  // namespace robust_scatter
