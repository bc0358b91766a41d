#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace simhc::tools {

constexpr int kCsvFormatVersion = 1;

struct TrialRow {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  std::string kind;
  std::string method;
  std::string status;
  bool success = false;
  double rot_err_deg = 0.0;
  double trans_err_pct = 0.0;
  double scale_err_pct = 0.0;
  double residual = 0.0;
  int steps = 0;
  double time_us = 0.0;
  bool infeasible = false;
  // RANSAC only.
  int iterations = 0;
  int inliers = 0;
  std::string error;
};

enum class SuccessMetric {
  // Rotation for UPnP and RANSAC runs, rotation + translation + scale for
  // single GRPS solves.
  Auto,
  Rotation,
  Pose,
};

struct Thresholds {
  double rot_deg = 2.0;
  double rel_pct = 5.0;
  SuccessMetric metric = SuccessMetric::Auto;
};

bool is_success(const TrialRow& row, const Thresholds& th, bool ransac);

struct Aggregate {
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t errors = 0;
  double success_rate = 0.0;
  // Over finite values of all rows.
  double median_rot_err_deg = 0.0;
  double median_trans_err_pct = 0.0;
  double median_scale_err_pct = 0.0;
  // Over successful rows.
  double mean_rot_err_success = 0.0;
  double median_time_us = 0.0;
  double mean_time_us = 0.0;
  double mean_iterations = 0.0;
  int max_iterations = 0;
};

Aggregate aggregate(const std::vector<TrialRow>& rows);
// Relative agreement to 1e-12 on every field.
bool aggregates_match(const Aggregate& a, const Aggregate& b);

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_csv(std::istream& in);

struct ReportMeta {
  std::string command;
  std::string kind;
  std::string method;
  std::string init;
  std::uint64_t seed = 0;
  Thresholds thresholds;
  bool ransac = false;
};

void write_table(std::ostream& out, const ReportMeta& meta, const Aggregate& agg);
std::string report_json(const ReportMeta& meta, const std::vector<TrialRow>& rows,
                        const Aggregate& agg);

// Writes rows as CSV, parses them back and recomputes the aggregate; false
// when the emitted rows do not reproduce `agg`.
bool verify_recompute(const std::vector<TrialRow>& rows, const Aggregate& agg);

}  // namespace simhc::tools
