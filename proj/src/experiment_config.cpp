// SPDX-License-Identifier: Apache-2.0
#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "robust_scatter/experiments.hpp"

namespace robust_scatter {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

std::string experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::DoaRmse:
      return "doa-rmse";
    case ExperimentKind::AnmfVariance:
      return "anmf-variance";
    case ExperimentKind::CovAsymptotics:
      return "cov-asymptotics";
    case ExperimentKind::Theorem2Ratio:
      return "theorem2-ratio";
  }
  return "doa-rmse";
}

ExperimentKind parse_experiment_name(std::string_view name) {
  for (auto kind : {ExperimentKind::DoaRmse, ExperimentKind::AnmfVariance, ExperimentKind::CovAsymptotics,
                    ExperimentKind::Theorem2Ratio})
    if (experiment_name(kind) == name) return kind;
  throw InvalidArgument("unknown experiment '" + std::string(name) +
                        "' (expected doa-rmse, anmf-variance, cov-asymptotics or theorem2-ratio)");
}

namespace {

std::optional<double> toeplitz_rho(std::string_view scatter) {
  constexpr std::string_view kPrefix = "toeplitz:";
  if (!scatter.starts_with(kPrefix)) return std::nullopt;
  const auto text = scatter.substr(kPrefix.size());
  double rho = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), rho);
  if (ec != std::errc() || ptr != text.data() + text.size() || !(std::abs(rho) < 1.0))
    throw InvalidArgument("scatter: invalid Toeplitz coefficient in '" + std::string(scatter) + "' (need |rho| < 1)");
  return rho;
}

}  // namespace

HermitianMatrix ExperimentConfig::scatter_matrix() const {
  if (scatter == "identity") return HermitianMatrix::identity(m);
  const auto rho = toeplitz_rho(scatter);
  if (!rho) throw InvalidArgument("scatter: expected identity or toeplitz:<rho>, got '" + scatter + "'");
  CMatrix a(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      a(i, j) = std::pow(*rho, static_cast<double>(i > j ? i - j : j - i));
  return HermitianMatrix(a);
}

FixedPointOptions ExperimentConfig::fixed_point_options() const {
  FixedPointOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return o;
}

ExperimentConfig default_config(ExperimentKind kind) {
  ExperimentConfig cfg;
  cfg.experiment = kind;
  switch (kind) {
    case ExperimentKind::DoaRmse:
      cfg.n_grid = {10, 20, 40, 80, 160, 320, 640};
      cfg.trials = 2000;
      break;
    case ExperimentKind::AnmfVariance:
      cfg.n_grid = {20, 50, 100, 200, 500, 1000};
      cfg.trials = 2000;
      break;
    case ExperimentKind::CovAsymptotics:
      cfg.m = 2;
      cfg.n_grid = {2000};
      cfg.trials = 10000;
      break;
    case ExperimentKind::Theorem2Ratio:
      cfg.n_grid = {1000};
      cfg.trials = 5000;
      break;
  }
  return cfg;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string normalize_key(std::string_view key) {
  std::string out = trim(key);
  for (auto& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c == '_') c = '-';
  }
  return out;
}

std::string json_scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

RawConfig raw_from_json(const json& obj) {
  if (!obj.is_object()) throw ConfigError({"JSON config must be a single object"});
  RawConfig raw;
  std::vector<std::string> problems;
  for (const auto& [key, value] : obj.items()) {
    const std::string k = normalize_key(key);
    if (raw.contains(k)) {
      problems.push_back("duplicate key '" + k + "'");
      continue;
    }
    if (value.is_array()) {
      std::string joined;
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) joined += ',';
        joined += json_scalar_text(value[i]);
      }
      raw[k] = joined;
    } else if (value.is_object()) {
      problems.push_back("key '" + k + "' must not be an object");
    } else {
      raw[k] = json_scalar_text(value);
    }
  }
  if (!problems.empty()) throw ConfigError(problems);
  return raw;
}

}  // namespace

RawConfig parse_config_text(std::string_view text) {
  const std::string body = trim(text);
  if (!body.empty() && body.front() == '{') {
    json obj;
    try {
      obj = json::parse(body);
    } catch (const json::parse_error& e) {
      throw ConfigError({std::string("malformed JSON config: ") + e.what()});
    }
    return raw_from_json(obj);
  }
  RawConfig raw;
  std::vector<std::string> problems;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(lineno) + ": expected 'key = value'");
      continue;
    }
    const std::string key = normalize_key(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(lineno) + ": empty key");
      continue;
    }
    if (raw.contains(key)) {
      problems.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
      continue;
    }
    raw[key] = value;
  }
  if (!problems.empty()) throw ConfigError(problems);
  return raw;
}

RawConfig read_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config '" + path + "': " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

namespace {

std::vector<std::string> split_list(std::string_view text) {
  std::string s = trim(text);
  if (s.size() >= 2 && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    std::string item = trim(std::string_view(s).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (item.size() >= 2 && item.front() == '"' && item.back() == '"') item = item.substr(1, item.size() - 2);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_real(const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(v))
    throw InvalidArgument(key + ": expected a finite number, got '" + text + "'");
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument(key + ": expected a non-negative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  std::string t = text;
  for (auto& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw InvalidArgument(key + ": expected true or false, got '" + text + "'");
}

}  // namespace

ExperimentConfig config_from_raw(const RawConfig& raw) {
  std::vector<std::string> problems;
  const auto exp_it = raw.find("experiment");
  if (exp_it == raw.end()) throw ConfigError({"experiment: required key is missing"});
  ExperimentKind kind{};
  try {
    kind = parse_experiment_name(exp_it->second);
  } catch (const InvalidArgument& e) {
    throw ConfigError({std::string("experiment: ") + e.what()});
  }
  ExperimentConfig cfg = default_config(kind);

  for (const auto& [key, value] : raw) {
    try {
      if (key == "experiment") {
      } else if (key == "model") {
        parse_model_id(value);
        cfg.model = value;
      } else if (key == "estimators") {
        cfg.estimators = split_list(value);
      } else if (key == "m") {
        cfg.m = parse_unsigned(key, value);
      } else if (key == "n-grid") {
        cfg.n_grid.clear();
        for (const auto& item : split_list(value)) cfg.n_grid.push_back(parse_unsigned("N-grid", item));
      } else if (key == "trials") {
        cfg.trials = parse_unsigned(key, value);
      } else if (key == "seed") {
        cfg.seed = parse_unsigned(key, value);
      } else if (key == "scaled-overlay") {
        cfg.scaled_overlay = parse_bool(key, value);
      } else if (key == "doa") {
        cfg.doa = parse_real(key, value);
      } else if (key == "snr-db") {
        cfg.snr_db = parse_real(key, value);
      } else if (key == "grid-step") {
        cfg.grid_step = parse_real(key, value);
      } else if (key == "spacing") {
        cfg.spacing = parse_real(key, value);
      } else if (key == "steering-doa") {
        cfg.steering_doa = parse_real(key, value);
      } else if (key == "anmf-y") {
        if (value == "fixed")
          cfg.anmf_y = AnmfObservation::Fixed;
        else if (value == "fresh")
          cfg.anmf_y = AnmfObservation::Fresh;
        else
          throw InvalidArgument("anmf-y: expected fixed or fresh, got '" + value + "'");
      } else if (key == "functional") {
        cfg.functional = value;
      } else if (key == "scatter") {
        cfg.scatter = value;
      } else if (key == "tol") {
        cfg.tol = parse_real(key, value);
      } else if (key == "max-iter") {
        const auto v = parse_unsigned(key, value);
        if (v > 1'000'000) throw InvalidArgument("max-iter: at most 1000000");
        cfg.max_iter = static_cast<int>(v);
      } else {
        problems.push_back("unknown key '" + key + "'");
      }
    } catch (const InvalidArgument& e) {
      const std::string msg = e.what();
      problems.push_back(msg.starts_with(key) || key == "n-grid" ? msg : key + ": " + msg);
    }
  }
  for (auto& p : validation_problems(cfg))
    if (std::find(problems.begin(), problems.end(), p) == problems.end()) problems.push_back(std::move(p));
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

std::vector<std::string> validation_problems(const ExperimentConfig& cfg) {
  std::vector<std::string> problems;
  const bool array = cfg.experiment != ExperimentKind::CovAsymptotics;
  try {
    parse_model_id(cfg.model);
  } catch (const InvalidArgument& e) {
    problems.push_back(std::string("model: ") + e.what());
  }
  if (cfg.estimators.empty()) problems.push_back("estimators: list is empty");
  std::vector<std::string> seen;
  bool has_scm = false;
  for (const auto& id : cfg.estimators) {
    try {
      const auto spec = parse_estimator_id(id);
      if (spec.kind == EstimatorKind::Scm) has_scm = true;
      if (spec.kind == EstimatorKind::Tyler && cfg.experiment == ExperimentKind::CovAsymptotics)
        problems.push_back("estimators: tyler has no finite sigma2, so cov-asymptotics cannot use it");
      if (std::find(seen.begin(), seen.end(), spec.id()) != seen.end())
        problems.push_back("estimators: duplicate '" + id + "'");
      seen.push_back(spec.id());
    } catch (const InvalidArgument& e) {
      problems.push_back(std::string("estimators: ") + e.what());
    }
  }
  if (cfg.experiment == ExperimentKind::Theorem2Ratio && !has_scm)
    problems.push_back("estimators: theorem2-ratio needs scm as the reference estimator");
  if (cfg.m < 1 || cfg.m > 64) problems.push_back("m: must lie in [1, 64]");
  if (array && cfg.m < 2) problems.push_back("m: array experiments need at least 2 sensors");
  if (cfg.n_grid.empty()) problems.push_back("N-grid: list is empty");
  for (std::size_t i = 1; i < cfg.n_grid.size(); ++i)
    if (cfg.n_grid[i] <= cfg.n_grid[i - 1]) {
      problems.push_back("N-grid: must be strictly increasing");
      break;
    }
  for (const auto n : cfg.n_grid)
    if (n <= cfg.m) {
      problems.push_back("N-grid: every N must exceed m");
      break;
    }
  if (cfg.n_grid.size() >= (std::size_t{1} << 31)) problems.push_back("N-grid: too many cells");
  if (cfg.trials < 1) problems.push_back("trials: must be at least 1");
  if (cfg.trials >= (std::uint64_t{1} << 32)) problems.push_back("trials: must be below 2^32");
  if ((cfg.experiment == ExperimentKind::CovAsymptotics || cfg.experiment == ExperimentKind::Theorem2Ratio) &&
      cfg.trials < 2)
    problems.push_back("trials: covariance and ratio experiments need at least 2 trials");
  if (cfg.scaled_overlay &&
      (cfg.experiment == ExperimentKind::CovAsymptotics || cfg.experiment == ExperimentKind::Theorem2Ratio))
    problems.push_back("scaled-overlay: only doa-rmse and anmf-variance support the overlay series");
  if (!(cfg.grid_step > 0.0 && cfg.grid_step <= 1.0)) problems.push_back("grid-step: must lie in (0, 1] degrees");
  if (!(cfg.spacing > 0.0 && cfg.spacing <= 0.5)) problems.push_back("spacing: must lie in (0, 0.5] wavelengths");
  if (!(cfg.doa > -90.0 && cfg.doa < 90.0)) problems.push_back("doa: must lie in (-90, 90) degrees");
  if (!(cfg.steering_doa >= -90.0 && cfg.steering_doa <= 90.0)) problems.push_back("steering-doa: must lie in [-90, 90]");
  if (!std::isfinite(cfg.snr_db)) problems.push_back("snr-db: must be finite");
  if (cfg.functional != "anmf" && cfg.functional != "music-doa")
    problems.push_back("functional: expected anmf or music-doa, got '" + cfg.functional + "'");
  if (cfg.scatter != "identity") {
    try {
      if (!toeplitz_rho(cfg.scatter))
        problems.push_back("scatter: expected identity or toeplitz:<rho>, got '" + cfg.scatter + "'");
    } catch (const InvalidArgument& e) {
      problems.push_back(e.what());
    }
  }
  if (!(cfg.tol > 0.0 && cfg.tol < 1.0)) problems.push_back("tol: must lie in (0, 1)");
  if (cfg.max_iter < 1) problems.push_back("max-iter: must be at least 1");
  return problems;
}

namespace {

json config_object(const ExperimentConfig& cfg) {
  json j;
  j["experiment"] = experiment_name(cfg.experiment);
  j["model"] = cfg.model;
  j["estimators"] = cfg.estimators;
  j["m"] = cfg.m;
  j["n-grid"] = cfg.n_grid;
  j["trials"] = cfg.trials;
  j["seed"] = cfg.seed;
  j["scaled-overlay"] = cfg.scaled_overlay;
  j["doa"] = cfg.doa;
  j["snr-db"] = cfg.snr_db;
  j["grid-step"] = cfg.grid_step;
  j["spacing"] = cfg.spacing;
  j["steering-doa"] = cfg.steering_doa;
  j["anmf-y"] = cfg.anmf_y == AnmfObservation::Fixed ? "fixed" : "fresh";
  j["functional"] = cfg.functional;
  j["scatter"] = cfg.scatter;
  j["tol"] = cfg.tol;
  j["max-iter"] = cfg.max_iter;
  return j;
}

}  // namespace

RawConfig config_to_raw(const ExperimentConfig& cfg) { return raw_from_json(config_object(cfg)); }

std::string config_json(const ExperimentConfig& cfg) { return config_object(cfg).dump(); }

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string body = config_json(cfg);
  std::string blob = "blob " + std::to_string(body.size());
  blob.push_back('\0');
  blob += body;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1)
    throw Error("config_hash: SHA-1 digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

bool ExperimentResult::any_failed() const {
  return std::any_of(rows.begin(), rows.end(), [](const ResultRow& r) { return r.failed; });
}

ResultFormat parse_format(std::string_view name) {
  if (name == "csv") return ResultFormat::Csv;
  if (name == "json") return ResultFormat::Json;
  throw InvalidArgument("unknown format '" + std::string(name) + "' (expected csv or json)");
}

std::string to_csv(const ExperimentResult& res) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : res.rows) {
    out += r.experiment + ',' + r.estimator + ',' + r.model + ',' + std::to_string(r.m) + ',' + std::to_string(r.n) +
           ',' + std::to_string(r.trials) + ',' + r.statistic + ',' + format_double(r.value) + ',' +
           format_double(r.std_error) + ',' + format_double(r.sigma1) + ',' + std::to_string(r.seed) + '\n';
  }
  return out;
}

namespace {

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_from(const json& v) {
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  return v.get<double>();
}

json sigma_object(const AsymptoticVariance& av) {
  json j;
  j["sigma"] = number_or_null(av.sigma);
  j["sigma1"] = number_or_null(av.sigma1);
  j["sigma2"] = number_or_null(av.sigma2);
  j["a1"] = number_or_null(av.a1);
  j["a2"] = number_or_null(av.a2);
  j["a1_stderr"] = number_or_null(av.a1_stderr);
  j["a2_stderr"] = number_or_null(av.a2_stderr);
  j["m"] = av.m;
  j["estimator"] = av.estimator_id;
  j["model"] = av.model_id;
  j["backend"] = av.monte_carlo ? "monte-carlo" : "quadrature";
  return j;
}

AsymptoticVariance sigma_from(const json& j) {
  AsymptoticVariance av;
  av.sigma = number_from(j.at("sigma"));
  av.sigma1 = number_from(j.at("sigma1"));
  av.sigma2 = number_from(j.at("sigma2"));
  av.a1 = number_from(j.at("a1"));
  av.a2 = number_from(j.at("a2"));
  av.a1_stderr = number_from(j.at("a1_stderr"));
  av.a2_stderr = number_from(j.at("a2_stderr"));
  av.m = j.at("m").get<std::size_t>();
  av.estimator_id = j.at("estimator").get<std::string>();
  av.model_id = j.at("model").get<std::string>();
  av.monte_carlo = j.at("backend").get<std::string>() == "monte-carlo";
  return av;
}

}  // namespace

std::string to_json(const ExperimentResult& res) {
  json j;
  j["config"] = config_object(res.config);
  j["content_hash"] = res.content_hash;
  json rows = json::array();
  for (const auto& r : res.rows) {
    json o;
    o["experiment"] = r.experiment;
    o["estimator"] = r.estimator;
    o["model"] = r.model;
    o["m"] = r.m;
    o["N"] = r.n;
    o["trials"] = r.trials;
    o["statistic"] = r.statistic;
    o["value"] = number_or_null(r.value);
    o["stderr"] = number_or_null(r.std_error);
    o["sigma1"] = number_or_null(r.sigma1);
    o["seed"] = r.seed;
    o["failures"] = r.failures;
    o["samples"] = r.samples;
    o["failed"] = r.failed;
    rows.push_back(std::move(o));
  }
  j["rows"] = std::move(rows);
  json sigmas = json::object();
  for (const auto& [id, av] : res.sigmas) sigmas[id] = sigma_object(av);
  j["sigmas"] = std::move(sigmas);
  json meta;
  meta["stream_id"] = "(cell << 32) | trial";
  meta["observation_stream"] = kObservationStream;
  meta["steering"] = "p = a(steering-doa)";
  meta["observation"] = "target-absent y drawn from the noise model";
  j["metadata"] = std::move(meta);
  return j.dump(2) + "\n";
}

std::string serialize(const ExperimentResult& res, ResultFormat format) {
  return format == ResultFormat::Csv ? to_csv(res) : to_json(res);
}

void serialize_results(const ExperimentResult& res, ResultFormat format, const std::string& path) {
  const std::string text = serialize(res, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write results to '" + path + "': " + std::strerror(errno));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.close();
  if (!out) throw IoError("failed writing results to '" + path + "'");
}

namespace {

double csv_double(const std::string& text, int line) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("CSV line " + std::to_string(line) + ": bad number '" + text + "'");
  return v;
}

std::uint64_t csv_unsigned(const std::string& text, int line) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw InvalidArgument("CSV line " + std::to_string(line) + ": bad integer '" + text + "'");
  return v;
}

}  // namespace

std::vector<ResultRow> parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader)
    throw InvalidArgument("CSV: header must be '" + std::string(kCsvHeader) + "'");
  std::vector<ResultRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 11)
      throw InvalidArgument("CSV line " + std::to_string(lineno) + ": expected 11 fields, got " + std::to_string(f.size()));
    ResultRow r;
    r.experiment = f[0];
    r.estimator = f[1];
    r.model = f[2];
    r.m = csv_unsigned(f[3], lineno);
    r.n = csv_unsigned(f[4], lineno);
    r.trials = csv_unsigned(f[5], lineno);
    r.statistic = f[6];
    r.value = csv_double(f[7], lineno);
    r.std_error = csv_double(f[8], lineno);
    r.sigma1 = csv_double(f[9], lineno);
    r.seed = csv_unsigned(f[10], lineno);
    rows.push_back(std::move(r));
  }
  return rows;
}

ExperimentResult parse_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("malformed results JSON: ") + e.what());
  }
  ExperimentResult res;
  try {
    res.config = config_from_raw(raw_from_json(j.at("config")));
    res.content_hash = j.at("content_hash").get<std::string>();
    for (const auto& o : j.at("rows")) {
      ResultRow r;
      r.experiment = o.at("experiment").get<std::string>();
      r.estimator = o.at("estimator").get<std::string>();
      r.model = o.at("model").get<std::string>();
      r.m = o.at("m").get<std::size_t>();
      r.n = o.at("N").get<std::size_t>();
      r.trials = o.at("trials").get<std::size_t>();
      r.statistic = o.at("statistic").get<std::string>();
      r.value = number_from(o.at("value"));
      r.std_error = number_from(o.at("stderr"));
      r.sigma1 = number_from(o.at("sigma1"));
      r.seed = o.at("seed").get<std::uint64_t>();
      r.failures = o.at("failures").get<std::size_t>();
      r.samples = o.at("samples").get<std::size_t>();
      r.failed = o.at("failed").get<bool>();
      res.rows.push_back(std::move(r));
    }
    for (const auto& [id, s] : j.at("sigmas").items()) res.sigmas[id] = sigma_from(s);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("results JSON: ") + e.what());
  }
  return res;
}

}  // namespace robust_scatter
