#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsipm/analysis.hpp"
#include "twinsipm/simulate.hpp"

namespace twinsipm {

// Shot records travel as CSV with header "shot,k1,k2" (LF line endings,
// UTF-8, no quoting), one row per gated exposure, plus a JSON sidecar
// "<path>.meta.json" carrying seed and source parameters.
void write_shot_csv(const std::string& path, const ShotSeries& series);

// Reads the CSV and, when present, the sidecar. A malformed file raises
// ValidationError naming the row and column.
ShotSeries read_shot_csv(const std::string& path);

// Analog view of the same record: x = gain * k, header "shot,x1,x2".
void write_analog_csv(const std::string& path, const ShotSeries& series, double gain1,
                      double gain2);

// Bins analog samples back to counts. Values farther than 0.25 bins from an
// integer raise DataError naming the row.
ShotSeries read_analog_csv(const std::string& path, double gain1, double gain2);

// Calibration curves travel as CSV with header "k_mean,g2,stderr".
std::vector<CurvePoint> read_curve_csv(const std::string& path);
void write_curve_csv(const std::string& path, const std::vector<CurvePoint>& points);

struct ConditionalRequest {
  int arm = 1;
  std::uint32_t m_lo = 0;
  std::uint32_t m_hi = 0;
};

// Full analysis of a shot record as an ordered JSON document: per-arm g2
// with classical boundaries, the pairwise statistics, and optionally one
// conditional slice per m in [m_lo, m_hi]. Statistics that cannot be formed
// are reported as {"error": ...} objects instead of aborting the report.
nlohmann::ordered_json analysis_report_json(const ShotSeries& series,
                                            const BootstrapOptions& opts,
                                            const std::optional<ConditionalRequest>& conditional);

nlohmann::ordered_json fit_report_json(const FitResult& fit);

void write_json(const std::string& path, const nlohmann::ordered_json& doc);

}  // namespace twinsipm
