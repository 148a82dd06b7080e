// SPDX-License-Identifier: Apache-2.0
#include "robust_scatter/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "robust_scatter/asymptotics.hpp"
#include "robust_scatter/experiments.hpp"

namespace robust_scatter {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<double> parse_row(std::string_view line, std::size_t line_no) {
  std::vector<double> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto cell = trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size())
      throw InvalidArgument("samples: line " + std::to_string(line_no) + ": invalid number '" + std::string(cell) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

SampleSet parse_samples_text(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t width = 0;
  std::size_t width_line = 0;
  bool header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (!header) {
      if (line.empty()) continue;
      if (line != kSamplesHeader)
        throw InvalidArgument("samples: line " + std::to_string(line_no) + ": expected header '" +
                              std::string(kSamplesHeader) + "'");
      header = true;
      continue;
    }
    if (line.empty() || line.front() == '#') continue;
    auto row = parse_row(line, line_no);
    if (width == 0) {
      if (row.size() % 2 != 0)
        throw InvalidArgument("samples: line " + std::to_string(line_no) + ": " + std::to_string(row.size()) +
                              " columns, need an even count (2m)");
      width = row.size();
      width_line = line_no;
    } else if (row.size() != width) {
      throw InvalidArgument("samples: line " + std::to_string(line_no) + ": " + std::to_string(row.size()) +
                            " columns, expected " + std::to_string(width) + " as on line " +
                            std::to_string(width_line));
    }
    rows.push_back(std::move(row));
  }
  if (!header) throw InvalidArgument("samples: no samples (empty input, missing header)");
  if (rows.empty()) throw InvalidArgument("samples: no samples");
  const std::size_t m = width / 2;
  SampleSet out(rows.size(), m);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto z = out[i];
    for (std::size_t k = 0; k < m; ++k) z[k] = cplx(rows[i][k], rows[i][m + k]);
  }
  return out;
}

SampleSet read_samples_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open samples file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("cannot read samples file '" + path + "'");
  try {
    return parse_samples_text(buf.str());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

std::string format_samples(const SampleSet& samples, std::string_view comment) {
  std::string out(kSamplesHeader);
  out += '\n';
  if (!comment.empty()) {
    out += "# ";
    out += comment;
    out += '\n';
  }
  const std::size_t m = samples.dim();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto z = samples[i];
    for (std::size_t k = 0; k < 2 * m; ++k) {
      if (k > 0) out += ',';
      out += format_double(k < m ? z[k].real() : z[k - m].imag());
    }
    out += '\n';
  }
  return out;
}

namespace {

json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Common {
  std::uint64_t seed = 42;
  int threads = 0;
  std::string format = "csv";
  std::string out_path;
  double tol = 1e-9;
  int max_iter = 200;
  double q = 0.75;
  double nu = 0.1;
  double grid_step = 0.01;

  CLI::Option* seed_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* format_opt = nullptr;
  CLI::Option* tol_opt = nullptr;
  CLI::Option* max_iter_opt = nullptr;
  CLI::Option* q_opt = nullptr;
  CLI::Option* nu_opt = nullptr;
  CLI::Option* grid_step_opt = nullptr;

  bool has(const CLI::Option* o) const { return o != nullptr && o->count() > 0; }

  int resolved_threads() const {
    if (has(threads_opt)) return threads;
    if (const char* env = std::getenv("ROBUST_SCATTER_THREADS"); env != nullptr && *env != '\0') {
      int v = 0;
      const std::string_view s(env);
      const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
        throw InvalidArgument("ROBUST_SCATTER_THREADS: expected a non-negative integer, got '" + std::string(s) + "'");
      return v;
    }
    return 0;
  }

  std::string estimator(std::string id) const {
    if (!has(q_opt)) return id;
    EstimatorSpec spec = parse_estimator_id(id);
    if (spec.kind != EstimatorKind::Huber) return id;
    spec.q = q;
    return spec.id();
  }

  FixedPointOptions fixed_point() const {
    FixedPointOptions o;
    o.tol = tol;
    o.max_iter = max_iter;
    return o;
  }
};

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write failed for '" + path + "'");
}

int cmd_estimate(const Common& c, const std::string& path, const std::string& estimator_id, std::ostream& out,
                 std::ostream& err) {
  const EstimatorSpec spec = parse_estimator_id(c.estimator(estimator_id));
  const FixedPointOptions options = c.fixed_point();
  err << "# config: "
      << json{{"command", "estimate"},
              {"samples", path},
              {"estimator", spec.id()},
              {"tol", options.tol},
              {"max-iter", options.max_iter},
              {"seed", c.seed}}
             .dump()
      << '\n';
  const SampleSet samples = read_samples_file(path);
  const ScatterEstimate est = estimate(spec, samples, options);
  json rows = json::array();
  for (std::size_t i = 0; i < est.matrix.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < est.matrix.dim(); ++j)
      row.push_back(json::array({est.matrix(i, j).real(), est.matrix(i, j).imag()}));
    rows.push_back(std::move(row));
  }
  const json doc{{"estimator-id", est.estimator_id},
                 {"m", samples.dim()},
                 {"n", samples.size()},
                 {"iterations", est.iterations},
                 {"residual", number(est.residual)},
                 {"sigma", number(est.sigma)},
                 {"positive-definite", est.positive_definite},
                 {"matrix", std::move(rows)}};
  write_output(doc.dump(2) + "\n", c.out_path, out);
  return kExitOk;
}

int cmd_sigma(const Common& c, const std::string& estimator_id, std::size_t m, std::string model, std::ostream& out,
              std::ostream& err) {
  if (c.has(c.nu_opt)) model = "k-dist:" + format_double(c.nu);
  const EstimatorSpec spec = parse_estimator_id(c.estimator(estimator_id));
  const RadialModel radial = parse_model_id(model);
  err << "# config: "
      << json{{"command", "sigma"}, {"estimator", spec.id()}, {"m", m}, {"model", model_id(radial)}, {"seed", c.seed}}
             .dump()
      << '\n';
  const AsymptoticVariance av = complex_sigma12(weight_for(spec, m), m, radial);
  const json doc{{"estimator-id", spec.id()},
                 {"model-id", av.model_id},
                 {"m", m},
                 {"sigma", number(av.sigma)},
                 {"sigma1", number(av.sigma1)},
                 {"sigma2", number(av.sigma2)},
                 {"a1", number(av.a1)},
                 {"a2", number(av.a2)},
                 {"a1-stderr", number(av.a1_stderr)},
                 {"a2-stderr", number(av.a2_stderr)},
                 {"monte-carlo", av.monte_carlo}};
  write_output(doc.dump(2) + "\n", c.out_path, out);
  return kExitOk;
}

std::string summary_line(const ResultRow& r) {
  std::string s = r.estimator + " N=" + std::to_string(r.n) + " " + r.statistic + "=" + format_double(r.value) +
                  " se=" + format_double(r.std_error) + " failures=" + std::to_string(r.failures) + "/" +
                  std::to_string(r.trials);
  if (r.failed) s += " FAILED";
  return s;
}

int cmd_experiment(const Common& c, const std::string& config_path, std::ostream& out, std::ostream& err) {
  RawConfig raw = read_config_file(config_path);
  ExperimentConfig cfg = config_from_raw(raw);
  if (c.has(c.seed_opt)) cfg.seed = c.seed;
  if (c.has(c.tol_opt)) cfg.tol = c.tol;
  if (c.has(c.max_iter_opt)) cfg.max_iter = c.max_iter;
  if (c.has(c.grid_step_opt)) cfg.grid_step = c.grid_step;
  if (c.has(c.nu_opt)) cfg.model = "k-dist:" + format_double(c.nu);
  for (auto& id : cfg.estimators) id = c.estimator(id);
  if (auto problems = validation_problems(cfg); !problems.empty()) throw ConfigError(problems);
  const ResultFormat format = c.has(c.format_opt) ? parse_format(c.format)
                              : c.out_path.ends_with(".json") ? ResultFormat::Json
                                                               : ResultFormat::Csv;
  RunOptions options;
  options.threads = c.resolved_threads();
  err << "# config: " << config_json(cfg) << '\n';
  err << "# content-hash: " << config_hash(cfg) << '\n';

  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentResult res = run_experiment(cfg, options);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const bool to_stdout = c.out_path.empty() || c.out_path == "-";
  if (to_stdout)
    out << serialize(res, format);
  else
    serialize_results(res, format, c.out_path);
  std::ostream& log = to_stdout ? err : out;
  for (const auto& r : res.rows) log << summary_line(r) << '\n';
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1f", seconds);
  log << "# " << res.rows.size() << " rows in " << buf << " s\n";
  return res.any_failed() ? kExitNumerical : kExitOk;
}

struct GroupResult {
  std::string name;
  bool pass = true;
  std::string detail;
};

GroupResult selftest_embedding(std::uint64_t seed) {
  GroupResult g{"embedding", true, {}};
  double worst = 0.0;
  for (const std::size_t m : {2u, 3u, 8u}) {
    for (int t = 0; t < 100; ++t) {
      RngStream rng(seed, (static_cast<std::uint64_t>(m) << 32) | static_cast<std::uint64_t>(t));
      CMatrix b(m, m);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < m; ++j) b(i, j) = rng.complex_normal();
      CMatrix a = b * b.adjoint();
      for (std::size_t i = 0; i < m; ++i) a(i, i) += cplx(static_cast<double>(m));
      const HermitianMatrix ha(a);
      const HermitianMatrix inv = herm_inv(ha);
      const RMatrix f_inv = lu_inverse(embed_f(ha).mat());
      const RMatrix lhs = embed_f(inv).mat();
      const RMatrix rhs = f_inv * 0.25;
      worst = std::max(worst, (lhs - rhs).frobenius_norm() / rhs.frobenius_norm());

      CVector z(m);
      for (auto& x : z) x = rng.complex_normal();
      const std::vector<double> u = stack_real(z);
      double quad_real = 0.0;
      for (std::size_t i = 0; i < u.size(); ++i)
        for (std::size_t j = 0; j < u.size(); ++j) quad_real += u[i] * f_inv(i, j) * u[j];
      const double quad = Cholesky(ha).inverse_quad_form(z);
      worst = std::max(worst, std::abs(quad - 0.5 * quad_real) / quad);
    }
  }
  g.pass = worst < 1e-12;
  g.detail = "worst relative defect " + format_double(worst) + " over 300 instances";
  return g;
}

GroupResult selftest_fixed_point(std::uint64_t seed) {
  GroupResult g{"fixed-point", true, {}};
  const EllipticalSampler sampler(EllipticalModel{HermitianMatrix::identity(3), parse_model_id("gaussian")});
  const WeightFunction w = huber_weight(0.75, 3);
  double worst = 0.0;
  int failures = 0;
  for (int t = 0; t < 20; ++t) {
    RngStream rng(seed, static_cast<std::uint64_t>(t));
    const SampleSet x = sampler.draw_many(500, rng);
    try {
      const ScatterEstimate est = m_estimate_fixed_point(x, w);
      worst = std::max(worst, estimating_equation_residual(x, w, est.matrix));
    } catch (const NumericalError&) {
      ++failures;
    }
  }
  g.pass = failures == 0 && worst < 1e-8;
  g.detail = "20 datasets, failures " + std::to_string(failures) + ", worst residual " + format_double(worst);
  return g;
}

GroupResult selftest_sigma(bool corrupt) {
  GroupResult g{"sigma", true, {}};
  HuberTuning tuning = huber_tuning(0.75, 3);
  if (corrupt) tuning.beta *= 1.25;
  AsymptoticVariance huber;
  AsymptoticVariance scm;
  try {
    huber = complex_sigma12(huber_weight(tuning), 3, parse_model_id("gaussian"));
    scm = complex_sigma12(scm_weight(), 3, parse_model_id("gaussian"));
  } catch (const NumericalError& e) {
    return {g.name, false, e.what()};
  }
  const bool huber_ok = std::abs(huber.sigma - 1.0) < 1e-2 && std::abs(huber.sigma1 - 1.067) < 1e-2;
  const bool scm_ok = std::abs(scm.sigma - 1.0) < 1e-2 && std::abs(scm.sigma1 - 1.0) < 1e-2 &&
                      std::abs(scm.sigma2) < 1e-2;
  g.pass = huber_ok && scm_ok;
  g.detail = "huber:0.75 sigma=" + format_double(huber.sigma) + " sigma1=" + format_double(huber.sigma1) +
             ", scm sigma1=" + format_double(scm.sigma1) + " sigma2=" + format_double(scm.sigma2);
  return g;
}

int cmd_selftest(const Common& c, bool corrupt_tuning, std::ostream& out, std::ostream& err) {
  err << "# config: " << json{{"command", "selftest"}, {"seed", c.seed}, {"corrupt-tuning", corrupt_tuning}}.dump()
      << '\n';
  bool all = true;
  for (const auto& g : {selftest_embedding(c.seed), selftest_fixed_point(c.seed), selftest_sigma(corrupt_tuning)}) {
    out << (g.pass ? "PASS " : "FAIL ") << g.name << ": " << g.detail << '\n';
    all = all && g.pass;
  }
  return all ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Robust scatter estimation: M-estimators, asymptotics and Monte-Carlo experiments",
               "robust-scatter"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", "robust-scatter 1.0.0");

  Common c;
  c.seed_opt = app.add_option("--seed", c.seed, "RNG seed")->capture_default_str();
  c.threads_opt =
      app.add_option("--threads", c.threads, "Worker threads, 0 = auto (fallback: ROBUST_SCATTER_THREADS)")
          ->check(CLI::NonNegativeNumber);
  c.format_opt = app.add_option("--format", c.format, "Result format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--out", c.out_path, "Output path (default: stdout)");
  c.tol_opt = app.add_option("--tol", c.tol, "Fixed-point tolerance")->check(CLI::PositiveNumber);
  c.max_iter_opt = app.add_option("--max-iter", c.max_iter, "Fixed-point iteration cap")->check(CLI::PositiveNumber);
  c.q_opt = app.add_option("--q", c.q, "Huber quantile; rewrites every huber estimator")
                ->check(CLI::Range(0.0, 1.0));
  c.nu_opt = app.add_option("--nu", c.nu, "K-distribution shape; selects model k-dist:<nu>")
                 ->check(CLI::PositiveNumber);
  c.grid_step_opt = app.add_option("--grid-step", c.grid_step, "MUSIC grid step in degrees")
                        ->check(CLI::PositiveNumber);

  auto* estimate_cmd = app.add_subcommand("estimate", "Estimate a scatter matrix from a samples file");
  std::string samples_path;
  std::string estimator_id = "huber:0.75";
  estimate_cmd->add_option("samples", samples_path, "Samples file")->required();
  estimate_cmd->add_option("--estimator", estimator_id, "scm | huber:<q> | tyler")->capture_default_str();

  auto* sigma_cmd = app.add_subcommand("sigma", "Consistency factor and asymptotic variance scalars");
  std::string sigma_estimator = "huber:0.75";
  std::size_t sigma_m = 3;
  std::string sigma_model = "gaussian";
  sigma_cmd->add_option("--estimator", sigma_estimator, "scm | huber:<q> | tyler")->capture_default_str();
  sigma_cmd->add_option("--m", sigma_m, "Dimension")->check(CLI::PositiveNumber)->capture_default_str();
  sigma_cmd->add_option("--model", sigma_model, "gaussian | k-dist:<nu> | student-t:<dof>")->capture_default_str();

  auto* experiment_cmd = app.add_subcommand("experiment", "Run a Monte-Carlo experiment from a config file");
  std::string config_path;
  experiment_cmd->add_option("config", config_path, "Config file (key = value lines or JSON)")->required();

  auto* selftest_cmd = app.add_subcommand("selftest", "Fast invariant checks");
  bool corrupt_tuning = false;
  selftest_cmd->add_flag("--corrupt-tuning", corrupt_tuning, "Test hook: perturb the Huber tuning")->group("");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << e.what() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    if (app.get_subcommands().empty()) err << "run with --help for usage\n";
    return kExitUsage;
  }

  try {
    if (*estimate_cmd) return cmd_estimate(c, samples_path, estimator_id, out, err);
    if (*sigma_cmd) return cmd_sigma(c, sigma_estimator, sigma_m, sigma_model, out, err);
    if (*experiment_cmd) return cmd_experiment(c, config_path, out, err);
    if (*selftest_cmd) return cmd_selftest(c, corrupt_tuning, out, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace robust_scatter
