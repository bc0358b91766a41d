#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace simhc::tools {

namespace {

const char* kHeader =
    "format_version,trial,seed,kind,method,status,success,rot_err_deg,trans_err_pct,"
    "scale_err_pct,residual,steps,time_us,infeasible,iterations,inliers,error";

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c == '\n' ? ' ' : c;
  }
  return q + '"';
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        in_quotes = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

bool close(double a, double b) {
  if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

void finite_push(std::vector<double>& v, double x) {
  if (std::isfinite(x)) v.push_back(x);
}

nlohmann::json jnum(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

bool is_success(const TrialRow& row, const Thresholds& th, bool ransac) {
  if (!row.error.empty()) return false;
  if (!(row.rot_err_deg < th.rot_deg)) return false;
  SuccessMetric m = th.metric;
  if (m == SuccessMetric::Auto) {
    m = (ransac || row.kind == "upnp") ? SuccessMetric::Rotation : SuccessMetric::Pose;
  }
  if (m == SuccessMetric::Rotation) return true;
  const bool t_ok = std::isnan(row.trans_err_pct) || row.trans_err_pct < th.rel_pct;
  const bool s_ok = std::isnan(row.scale_err_pct) || row.scale_err_pct < th.rel_pct;
  return t_ok && s_ok;
}

Aggregate aggregate(const std::vector<TrialRow>& rows) {
  Aggregate a;
  a.trials = rows.size();
  std::vector<double> er, et, es, er_ok, time, iters;
  for (const TrialRow& r : rows) {
    if (!r.error.empty()) {
      ++a.errors;
      continue;
    }
    if (r.success) {
      ++a.successes;
      finite_push(er_ok, r.rot_err_deg);
    }
    finite_push(er, r.rot_err_deg);
    finite_push(et, r.trans_err_pct);
    finite_push(es, r.scale_err_pct);
    time.push_back(r.time_us);
    iters.push_back(r.iterations);
    a.max_iterations = std::max(a.max_iterations, r.iterations);
  }
  a.success_rate = a.trials ? static_cast<double>(a.successes) / static_cast<double>(a.trials) : 0.0;
  a.median_rot_err_deg = median(er);
  a.median_trans_err_pct = median(et);
  a.median_scale_err_pct = median(es);
  a.mean_rot_err_success = mean(er_ok);
  a.median_time_us = median(time);
  a.mean_time_us = mean(time);
  a.mean_iterations = mean(iters);
  return a;
}

bool aggregates_match(const Aggregate& a, const Aggregate& b) {
  return a.trials == b.trials && a.successes == b.successes && a.errors == b.errors &&
         a.max_iterations == b.max_iterations && close(a.success_rate, b.success_rate) &&
         close(a.median_rot_err_deg, b.median_rot_err_deg) &&
         close(a.median_trans_err_pct, b.median_trans_err_pct) &&
         close(a.median_scale_err_pct, b.median_scale_err_pct) &&
         close(a.mean_rot_err_success, b.mean_rot_err_success) &&
         close(a.median_time_us, b.median_time_us) && close(a.mean_time_us, b.mean_time_us) &&
         close(a.mean_iterations, b.mean_iterations);
}

void write_csv(std::ostream& out, const std::vector<TrialRow>& rows) {
  out << kHeader << '\n';
  for (const TrialRow& r : rows) {
    out << kCsvFormatVersion << ',' << r.trial << ',' << r.seed << ',' << r.kind << ',' << r.method
        << ',' << r.status << ',' << (r.success ? 1 : 0) << ',' << num(r.rot_err_deg) << ','
        << num(r.trans_err_pct) << ',' << num(r.scale_err_pct) << ',' << num(r.residual) << ','
        << r.steps << ',' << num(r.time_us) << ',' << (r.infeasible ? 1 : 0) << ',' << r.iterations
        << ',' << r.inliers << ',' << quote(r.error) << '\n';
  }
}

std::vector<TrialRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) throw std::runtime_error("unexpected CSV header");
  std::vector<TrialRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 17) throw std::runtime_error("CSV row has " + std::to_string(f.size()) + " fields");
    if (std::stoi(f[0]) != kCsvFormatVersion) throw std::runtime_error("unsupported CSV format_version");
    TrialRow r;
    r.trial = std::stoull(f[1]);
    r.seed = std::stoull(f[2]);
    r.kind = f[3];
    r.method = f[4];
    r.status = f[5];
    r.success = f[6] == "1";
    r.rot_err_deg = std::strtod(f[7].c_str(), nullptr);
    r.trans_err_pct = std::strtod(f[8].c_str(), nullptr);
    r.scale_err_pct = std::strtod(f[9].c_str(), nullptr);
    r.residual = std::strtod(f[10].c_str(), nullptr);
    r.steps = std::stoi(f[11]);
    r.time_us = std::strtod(f[12].c_str(), nullptr);
    r.infeasible = f[13] == "1";
    r.iterations = std::stoi(f[14]);
    r.inliers = std::stoi(f[15]);
    r.error = f[16];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_table(std::ostream& out, const ReportMeta& meta, const Aggregate& a) {
  char buf[160];
  auto line = [&](const char* label, const std::string& value) {
    std::snprintf(buf, sizeof buf, "  %-24s %s\n", label, value.c_str());
    out << buf;
  };
  auto fixed = [](double v, int prec) {
    if (std::isnan(v)) return std::string("-");
    char b[48];
    std::snprintf(b, sizeof b, "%.*f", prec, v);
    return std::string(b);
  };
  out << meta.command << ": " << meta.kind << ' ' << meta.method << (meta.ransac ? " (ransac)" : "")
      << ", init " << meta.init << ", seed " << meta.seed << '\n';
  line("trials", std::to_string(a.trials));
  const bool rotation_only =
      meta.thresholds.metric == SuccessMetric::Rotation ||
      (meta.thresholds.metric == SuccessMetric::Auto && (meta.ransac || meta.kind == "upnp"));
  std::string criterion = "E_R < " + fixed(meta.thresholds.rot_deg, 1) + " deg";
  if (!rotation_only) criterion += ", E_t and E_s < " + fixed(meta.thresholds.rel_pct, 1) + "%";
  line("success criterion", criterion);
  line("success (%)", fixed(100.0 * a.success_rate, 1));
  line("errors", std::to_string(a.errors));
  line("median E_R (deg)", fixed(a.median_rot_err_deg, 4));
  line("median E_t (%)", fixed(a.median_trans_err_pct, 3));
  line("median E_s (%)", fixed(a.median_scale_err_pct, 3));
  line("mean E_R success (deg)", fixed(a.mean_rot_err_success, 4));
  line("median time (ms)", fixed(a.median_time_us / 1000.0, 3));
  line("mean time (ms)", fixed(a.mean_time_us / 1000.0, 3));
  if (meta.ransac) {
    line("mean iterations", fixed(a.mean_iterations, 1));
    line("max iterations", std::to_string(a.max_iterations));
  }
}

std::string report_json(const ReportMeta& meta, const std::vector<TrialRow>& rows, const Aggregate& a) {
  using nlohmann::json;
  json j;
  j["format_version"] = kCsvFormatVersion;
  j["command"] = meta.command;
  j["kind"] = meta.kind;
  j["method"] = meta.method;
  j["init"] = meta.init;
  j["seed"] = meta.seed;
  j["ransac"] = meta.ransac;
  j["thresholds"] = {{"rot_deg", meta.thresholds.rot_deg}, {"rel_pct", meta.thresholds.rel_pct}};
  j["aggregate"] = {{"trials", a.trials},
                    {"successes", a.successes},
                    {"errors", a.errors},
                    {"success_rate", a.success_rate},
                    {"median_rot_err_deg", jnum(a.median_rot_err_deg)},
                    {"median_trans_err_pct", jnum(a.median_trans_err_pct)},
                    {"median_scale_err_pct", jnum(a.median_scale_err_pct)},
                    {"mean_rot_err_success", jnum(a.mean_rot_err_success)},
                    {"median_time_us", jnum(a.median_time_us)},
                    {"mean_time_us", jnum(a.mean_time_us)},
                    {"mean_iterations", jnum(a.mean_iterations)},
                    {"max_iterations", a.max_iterations}};
  json jr = json::array();
  for (const TrialRow& r : rows) {
    jr.push_back({{"trial", r.trial},
                  {"seed", r.seed},
                  {"kind", r.kind},
                  {"method", r.method},
                  {"status", r.status},
                  {"success", r.success},
                  {"rot_err_deg", jnum(r.rot_err_deg)},
                  {"trans_err_pct", jnum(r.trans_err_pct)},
                  {"scale_err_pct", jnum(r.scale_err_pct)},
                  {"residual", jnum(r.residual)},
                  {"steps", r.steps},
                  {"time_us", r.time_us},
                  {"infeasible", r.infeasible},
                  {"iterations", r.iterations},
                  {"inliers", r.inliers},
                  {"error", r.error}});
  }
  j["rows"] = std::move(jr);
  return j.dump(2);
}

bool verify_recompute(const std::vector<TrialRow>& rows, const Aggregate& agg) {
  std::stringstream ss;
  write_csv(ss, rows);
  return aggregates_match(aggregate(read_csv(ss)), agg);
}

}  // namespace simhc::tools
