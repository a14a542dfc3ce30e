#include "twinsipm/io.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "twinsipm/errors.hpp"
#include "twinsipm/version.hpp"

namespace twinsipm {

namespace {

using nlohmann::ordered_json;

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("path: cannot open '" + path + "' for writing");
  }
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("path: cannot open '" + path + "'");
  }
  return in;
}

// getline that tolerates a trailing carriage return.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::uint64_t parse_count(const std::string& field, std::size_t row, const char* column) {
  if (field.empty() || field[0] == '-' || field[0] == '+') {
    throw ValidationError("row " + std::to_string(row) + ", column " + column +
                          ": must be a non-negative integer, got '" + field + "'");
  }
  errno = 0;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(field.c_str(), &end, 10);
  if (errno != 0 || end != field.c_str() + field.size()) {
    throw ValidationError("row " + std::to_string(row) + ", column " + column +
                          ": must be a non-negative integer, got '" + field + "'");
  }
  return v;
}

double parse_double(const std::string& field, std::size_t row, const char* column) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (field.empty() || errno != 0 || end != field.c_str() + field.size() || !std::isfinite(v)) {
    throw ValidationError("row " + std::to_string(row) + ", column " + column +
                          ": must be a finite number, got '" + field + "'");
  }
  return v;
}

void expect_header(std::istream& in, const std::string& expected, const std::string& path) {
  std::string line;
  if (!next_line(in, line)) {
    throw ValidationError("header: file '" + path + "' is empty, expected '" + expected + "'");
  }
  if (line != expected) {
    throw ValidationError("header: expected '" + expected + "', got '" + line + "'");
  }
}

ordered_json detector_json(const DetectorConfig& det) {
  return ordered_json{{"eta", det.eta},
                      {"epsilon", det.epsilon},
                      {"dark_mean", det.dark_mean},
                      {"gain", det.gain}};
}

DetectorConfig detector_from_json(const ordered_json& j, const std::string& prefix) {
  DetectorConfig det;
  try {
    det.eta = j.at("eta").get<double>();
    det.epsilon = j.at("epsilon").get<double>();
    det.dark_mean = j.at("dark_mean").get<double>();
    det.gain = j.at("gain").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(prefix + ": malformed detector block: " + e.what());
  }
  det.validate(prefix);
  return det;
}

void write_meta(const std::string& csv_path, const ShotSeries& series) {
  ordered_json meta{{"schema_version", 1},
                    {"tool_version", kVersion},
                    {"kind", "shot-series"},
                    {"seed", series.seed},
                    {"n_shots", series.shots.size()}};
  if (series.has_params) {
    meta["params"] = ordered_json{{"modes", series.params.modes},
                                  {"mean_n", series.params.mean_n},
                                  {"det1", detector_json(series.params.det1)},
                                  {"det2", detector_json(series.params.det2)}};
  }
  write_json(csv_path + ".meta.json", meta);
}

void read_meta_if_present(const std::string& csv_path, ShotSeries& series) {
  const std::string meta_path = csv_path + ".meta.json";
  std::ifstream in(meta_path, std::ios::binary);
  if (!in) return;
  ordered_json meta;
  try {
    in >> meta;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(meta_path + ": malformed JSON: " + e.what());
  }
  try {
    if (meta.at("schema_version").get<int>() != 1) {
      throw ValidationError(meta_path + ": unsupported schema_version");
    }
    series.seed = meta.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(meta_path + ": " + e.what());
  }
  if (meta.contains("params")) {
    const auto& p = meta["params"];
    try {
      series.params.modes = p.at("modes").get<std::int64_t>();
      series.params.mean_n = p.at("mean_n").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(meta_path + ": malformed params block: " + e.what());
    }
    series.params.det1 = detector_from_json(p.at("det1"), "det1");
    series.params.det2 = detector_from_json(p.at("det2"), "det2");
    series.params.validate();
    series.has_params = true;
  }
}

ordered_json value_json(const ValueWithError& v) {
  return ordered_json{{"value", v.value}, {"stderr", v.std_err}};
}

}  // namespace

void write_shot_csv(const std::string& path, const ShotSeries& series) {
  if (series.shots.empty()) {
    throw ValidationError("series: contains no shots");
  }
  std::ofstream out = open_out(path);
  out << "shot,k1,k2\n";
  char buf[80];
  for (std::size_t i = 0; i < series.shots.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%u,%u\n", i, series.shots[i][0], series.shots[i][1]);
    out << buf;
  }
  out.close();
  if (!out) {
    throw ValidationError("path: failed writing '" + path + "'");
  }
  write_meta(path, series);
}

ShotSeries read_shot_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  expect_header(in, "shot,k1,k2", path);
  ShotSeries series;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw ValidationError("row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    const std::uint64_t idx = parse_count(fields[0], row, "shot");
    if (idx != row) {
      throw ValidationError("row " + std::to_string(row) + ", column shot: expected " +
                            std::to_string(row) + ", got " + fields[0]);
    }
    const std::uint64_t k1 = parse_count(fields[1], row, "k1");
    const std::uint64_t k2 = parse_count(fields[2], row, "k2");
    const std::uint64_t max32 = std::numeric_limits<std::uint32_t>::max();
    if (k1 > max32 || k2 > max32) {
      throw ValidationError("row " + std::to_string(row) + ": count exceeds 2^32-1");
    }
    series.shots.push_back({static_cast<std::uint32_t>(k1), static_cast<std::uint32_t>(k2)});
    ++row;
  }
  if (series.shots.empty()) {
    throw ValidationError("file '" + path + "' contains no shots");
  }
  read_meta_if_present(path, series);
  return series;
}

void write_analog_csv(const std::string& path, const ShotSeries& series, double gain1,
                      double gain2) {
  if (series.shots.empty()) {
    throw ValidationError("series: contains no shots");
  }
  std::ofstream out = open_out(path);
  out << "shot,x1,x2\n";
  char buf[120];
  for (std::size_t i = 0; i < series.shots.size(); ++i) {
    const double x1 = analog_from_count(series.shots[i][0], gain1);
    const double x2 = analog_from_count(series.shots[i][1], gain2);
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", i, x1, x2);
    out << buf;
  }
  out.close();
  if (!out) {
    throw ValidationError("path: failed writing '" + path + "'");
  }
}

ShotSeries read_analog_csv(const std::string& path, double gain1, double gain2) {
  std::ifstream in = open_in(path);
  expect_header(in, "shot,x1,x2", path);
  ShotSeries series;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw ValidationError("row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    const std::uint64_t idx = parse_count(fields[0], row, "shot");
    if (idx != row) {
      throw ValidationError("row " + std::to_string(row) + ", column shot: expected " +
                            std::to_string(row) + ", got " + fields[0]);
    }
    const double x1 = parse_double(fields[1], row, "x1");
    const double x2 = parse_double(fields[2], row, "x2");
    std::uint32_t k1 = 0;
    std::uint32_t k2 = 0;
    try {
      k1 = count_from_analog(x1, gain1);
    } catch (const AmbiguousBinError& e) {
      throw DataError("row " + std::to_string(row) + ", column x1: " + e.what());
    }
    try {
      k2 = count_from_analog(x2, gain2);
    } catch (const AmbiguousBinError& e) {
      throw DataError("row " + std::to_string(row) + ", column x2: " + e.what());
    }
    series.shots.push_back({k1, k2});
    ++row;
  }
  if (series.shots.empty()) {
    throw ValidationError("file '" + path + "' contains no shots");
  }
  return series;
}

std::vector<CurvePoint> read_curve_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  expect_header(in, "k_mean,g2,stderr", path);
  std::vector<CurvePoint> points;
  std::string line;
  std::size_t row = 0;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw ValidationError("row " + std::to_string(row) + ": expected 3 fields, got " +
                            std::to_string(fields.size()));
    }
    CurvePoint p;
    p.k_mean = parse_double(fields[0], row, "k_mean");
    p.g2 = parse_double(fields[1], row, "g2");
    p.std_err = parse_double(fields[2], row, "stderr");
    points.push_back(p);
    ++row;
  }
  if (points.empty()) {
    throw ValidationError("file '" + path + "' contains no curve points");
  }
  return points;
}

void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points) {
  std::ofstream out = open_out(path);
  out << "k_mean,g2,stderr\n";
  char buf[120];
  for (const CurvePoint& p : points) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.k_mean, p.g2, p.std_err);
    out << buf;
  }
  out.close();
  if (!out) {
    throw ValidationError("path: failed writing '" + path + "'");
  }
}

nlohmann::ordered_json analysis_report_json(
    const ShotSeries& series, const BootstrapOptions& opts,
    const std::optional<ConditionalRequest>& conditional) {
  const CorrelationStats cs = correlation_stats(series, opts);

  ordered_json metadata{{"tool_version", kVersion},
                        {"n_shots", series.shots.size()},
                        {"resamples", opts.resamples},
                        {"bootstrap_seed", opts.seed}};
  if (series.has_params) {
    metadata["source_seed"] = series.seed;
    metadata["params"] = ordered_json{{"modes", series.params.modes},
                                      {"mean_n", series.params.mean_n},
                                      {"det1", detector_json(series.params.det1)},
                                      {"det2", detector_json(series.params.det2)}};
  }

  ordered_json arms = ordered_json::array();
  for (int arm = 1; arm <= 2; ++arm) {
    const double k_mean = arm == 1 ? cs.mean1 : cs.mean2;
    ordered_json entry{{"arm", arm}, {"k_mean", k_mean}};
    try {
      entry["g2"] = value_json(arm_g2(series, arm, opts));
      entry["classical_boundary"] = 1.0 + 1.0 / k_mean;
    } catch (const UndefinedStatisticError&) {
      entry["g2"] = ordered_json{{"error", "undefined-statistic"}};
    }
    arms.push_back(entry);
  }

  ordered_json joint{{"sum_mean", cs.sum_mean},
                     {"diff_mean", cs.diff_mean},
                     {"diff_variance", cs.diff_variance},
                     {"nrf", value_json(cs.nrf)}};
  if (cs.diff_divergent) {
    const ordered_json err{{"error", "divergent-statistic"},
                           {"diff_mean", cs.diff_mean},
                           {"sum_mean", cs.sum_mean}};
    joint["g2_diff_detected"] = err;
    joint["g2_diff_photons_excess"] = err;
    joint["g2_diff_classical_boundary"] = nullptr;
  } else {
    joint["g2_diff_detected"] = value_json(cs.g2_diff_detected);
    joint["g2_diff_photons_excess"] = value_json(cs.g2_diff_photons_excess);
    joint["g2_diff_classical_boundary"] =
        1.0 + cs.sum_mean / (cs.diff_mean * cs.diff_mean);
  }

  ordered_json report{{"schema_version", 1},
                      {"metadata", metadata},
                      {"arms", arms},
                      {"joint", joint}};

  if (conditional) {
    ordered_json slices = ordered_json::array();
    for (std::uint32_t m = conditional->m_lo; m <= conditional->m_hi; ++m) {
      ordered_json entry{{"m_cond", m}};
      try {
        const ConditionalStats st = conditional_stats(series, conditional->arm, m, opts);
        entry["n_selected"] = st.n_selected;
        entry["mean"] = st.mean;
        entry["fano"] = value_json(st.fano);
        entry["g2_photons_excess"] = value_json(st.g2_photons_excess);
      } catch (const InsufficientStatisticsError& e) {
        entry["n_selected"] = e.n_selected();
        entry["error"] = "insufficient-statistics";
      } catch (const UndefinedStatisticError&) {
        entry["error"] = "undefined-statistic";
      }
      slices.push_back(entry);
    }
    report["conditional"] = ordered_json{{"arm", conditional->arm}, {"slices", slices}};
  }
  return report;
}

nlohmann::ordered_json fit_report_json(const FitResult& fit) {
  return ordered_json{
      {"schema_version", 1},
      {"metadata", ordered_json{{"tool_version", kVersion}}},
      {"fit", ordered_json{{"mu", fit.mu_fixed},
                           {"epsilon", fit.epsilon},
                           {"epsilon_stderr", fit.epsilon_err},
                           {"dark_mean", fit.dark_mean},
                           {"dark_mean_stderr", fit.dark_err},
                           {"chi2", fit.chi2},
                           {"residual_rms", fit.residual_rms},
                           {"n_points", fit.n_points}}}};
}

void write_json(const std::string& path, const nlohmann::ordered_json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << "\n";
  out.close();
  if (!out) {
    throw ValidationError("path: failed writing '" + path + "'");
  }
}

}  // namespace twinsipm
