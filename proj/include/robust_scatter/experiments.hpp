// SPDX-License-Identifier: Apache-2.0
//
// Monte-Carlo harness: DOA RMSE sweeps, ANMF variance sweeps, empirical checks
// of the limiting covariance and of the variance ratio of scale-invariant
// functionals. Every trial owns RngStream(seed, (cell << 32) | trial), trial
// outputs land in fixed slots and are reduced serially, so results do not
// depend on the thread count.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "robust_scatter/asymptotics.hpp"
#include "robust_scatter/estimators.hpp"

namespace robust_scatter {

enum class ExperimentKind { DoaRmse, AnmfVariance, CovAsymptotics, Theorem2Ratio };

std::string experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment_name(std::string_view name);

enum class AnmfObservation { Fixed, Fresh };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::DoaRmse;
  std::string model = "gaussian";
  std::vector<std::string> estimators = {"scm", "huber:0.75"};
  std::size_t m = 3;
  std::vector<std::size_t> n_grid;
  std::size_t trials = 2000;
  std::uint64_t seed = 42;
  bool scaled_overlay = false;

  // DOA scenario (doa-rmse, theorem2-ratio with functional music-doa).
  double doa = 20.0;
  double snr_db = 5.0;
  double grid_step = 0.01;
  double spacing = 0.5;

  // ANMF (anmf-variance, theorem2-ratio with functional anmf).
  double steering_doa = 0.0;
  AnmfObservation anmf_y = AnmfObservation::Fixed;

  std::string functional = "anmf";  // theorem2-ratio: anmf | music-doa
  std::string scatter = "identity";  // identity | toeplitz:<rho>

  double tol = 1e-9;
  int max_iter = 200;

  /// Resolved scatter matrix of the noise/data model.
  HermitianMatrix scatter_matrix() const;
  FixedPointOptions fixed_point_options() const;
};

/// Defaults that depend on the experiment kind (N-grid and trial count).
ExperimentConfig default_config(ExperimentKind kind);

/// Flat key -> value text, as read from a config file.
using RawConfig = std::map<std::string, std::string>;

/// "key = value" lines ('#' starts a comment) or a single JSON object.
RawConfig parse_config_text(std::string_view text);
RawConfig read_config_file(const std::string& path);

/// Validates every key and cross-field constraint; throws ConfigError listing
/// all problems.
ExperimentConfig config_from_raw(const RawConfig& raw);

/// Cross-field constraints of an already-typed config; empty when valid.
std::vector<std::string> validation_problems(const ExperimentConfig& cfg);

RawConfig config_to_raw(const ExperimentConfig& cfg);
/// Canonical JSON text (sorted keys, every field resolved).
std::string config_json(const ExperimentConfig& cfg);
/// Git-style blob SHA-1 of the canonical JSON.
std::string config_hash(const ExperimentConfig& cfg);

struct ResultRow {
  std::string experiment;
  std::string estimator;
  std::string model;
  std::size_t m = 0;
  std::size_t n = 0;
  std::size_t trials = 0;  // successes + failures
  std::string statistic;
  double value = 0.0;
  double std_error = 0.0;
  double sigma1 = 0.0;
  std::uint64_t seed = 0;
  std::size_t failures = 0;
  std::size_t samples = 0;  // snapshots fed to the estimator (differs from n for overlays)
  bool failed = false;      // more than 1% of trials failed

  bool operator==(const ResultRow&) const = default;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string content_hash;
  std::vector<ResultRow> rows;
  std::map<std::string, AsymptoticVariance> sigmas;  // keyed by estimator id

  bool any_failed() const;
};

struct RunOptions {
  int threads = 0;  // 0: OpenMP default
  /// Serial reference path: plain loop over trials, kept as the oracle for the
  /// parallel runner.
  bool serial = false;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentResult run_doa_rmse(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentResult run_anmf_variance(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentResult run_cov_asymptotics(const ExperimentConfig& cfg, const RunOptions& options = {});
ExperimentResult run_theorem2_ratio(const ExperimentConfig& cfg, const RunOptions& options = {});

/// Id of the sigma1-scaled series for an estimator.
std::string overlay_id(const std::string& estimator);
inline constexpr std::string_view kOverlaySuffix = "@sigma1N";

/// Snapshot count of the overlay series: ceil(sigma1 N).
std::size_t overlay_count(double sigma1, std::size_t n);

/// Stream id of trial t in N-grid cell c.
std::uint64_t trial_stream(std::size_t cell, std::size_t trial);
/// Stream reserved for the fixed ANMF observation.
inline constexpr std::uint64_t kObservationStream = 0xFFFF'FFFF'0000'0000ULL;

enum class ResultFormat { Csv, Json };
ResultFormat parse_format(std::string_view name);

inline constexpr std::string_view kCsvHeader = "experiment,estimator,model,m,N,trials,statistic,value,stderr,sigma1,seed";

std::string to_csv(const ExperimentResult& res);
std::string to_json(const ExperimentResult& res);
std::string serialize(const ExperimentResult& res, ResultFormat format);
void serialize_results(const ExperimentResult& res, ResultFormat format, const std::string& path);

/// CSV carries only the columns of its header; the other row fields come back
/// with default values.
std::vector<ResultRow> parse_csv(std::string_view text);
ExperimentResult parse_json(std::string_view text);

/// Shortest round-trip text of a double ("nan", "inf", "-inf" for non-finite).
std::string format_double(double x);

}  // namespace robust_scatter
