#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "report.hpp"
#include "simhc/simhc.h"

namespace {

using simhc::tools::TrialRow;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitInternal = 3;

// Stream ids shared with the core's seed scheme.
constexpr std::uint64_t kStreamScene = 1;
constexpr std::uint64_t kStreamInitializer = 2;
constexpr std::uint64_t kStreamRansac = 3;

struct Failure {
  int exit_code;
  std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw Failure{code, msg}; }

void check(simhc_status s, const char* what) {
  if (s == SIMHC_OK) return;
  const int code = (s == SIMHC_E_IO || s == SIMHC_E_FORMAT) ? kExitIo
                   : s == SIMHC_E_INVALID_ARGUMENT            ? kExitUsage
                                                              : kExitInternal;
  fail(code, std::string(what) + ": " + simhc_last_error());
}

struct SceneDeleter {
  void operator()(simhc_scene* s) const { simhc_scene_free(s); }
};
struct InitDeleter {
  void operator()(simhc_initializer* i) const { simhc_initializer_free(i); }
};
struct ModelDeleter {
  void operator()(simhc_model* m) const { simhc_model_free(m); }
};
using ScenePtr = std::unique_ptr<simhc_scene, SceneDeleter>;
using InitPtr = std::unique_ptr<simhc_initializer, InitDeleter>;
using ModelPtr = std::unique_ptr<simhc_model, ModelDeleter>;

struct SceneFlags {
  std::string kind = "upnp";
  std::optional<int> points;
  std::optional<int> cameras;
  std::optional<double> noise_px;
  std::string noise_mode;
  std::string sampling;
  std::optional<double> outliers;
  std::optional<double> focal;
};

void add_scene_flags(CLI::App* cmd, SceneFlags& f) {
  cmd->add_option("--kind", f.kind, "Problem kind")->check(CLI::IsMember({"upnp", "grps"}));
  cmd->add_option("--points", f.points, "Correspondences per scene")->check(CLI::PositiveNumber);
  cmd->add_option("--cameras", f.cameras, "Cameras per rig")->check(CLI::PositiveNumber);
  cmd->add_option("--noise-px", f.noise_px, "Pixel noise magnitude")->check(CLI::NonNegativeNumber);
  cmd->add_option("--noise-mode", f.noise_mode, "uniform | gaussian")
      ->check(CLI::IsMember({"uniform", "gaussian"}));
  cmd->add_option("--sampling", f.sampling, "World point sampling: shell | box")
      ->check(CLI::IsMember({"shell", "box"}));
  cmd->add_option("--outliers", f.outliers, "Outlier fraction")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--focal", f.focal, "Virtual focal length in pixels")->check(CLI::PositiveNumber);
}

simhc_kind kind_of(const std::string& s) { return s == "grps" ? SIMHC_GRPS : SIMHC_UPNP; }

simhc_scene_config scene_config(const SceneFlags& f) {
  simhc_scene_config c;
  check(simhc_scene_config_default(kind_of(f.kind), &c), "scene config");
  if (f.points) c.n_points = *f.points;
  if (f.cameras) c.n_cameras = *f.cameras;
  if (f.noise_px) c.noise_px = *f.noise_px;
  if (!f.noise_mode.empty()) c.noise_mode = f.noise_mode == "gaussian" ? SIMHC_NOISE_GAUSSIAN : SIMHC_NOISE_UNIFORM;
  if (!f.sampling.empty()) c.point_sampling = f.sampling == "box" ? SIMHC_SAMPLING_BOX : SIMHC_SAMPLING_SHELL;
  if (f.outliers) c.outlier_fraction = *f.outliers;
  if (f.focal) c.virtual_focal_px = *f.focal;
  return c;
}

struct InitSpec {
  enum class Type { Random, Oracle, Model } type = Type::Random;
  double rot_deg = 0, trans_frac = 0, scale_frac = 0;
  std::string path;
  std::string text = "random";
};

InitSpec parse_init(const std::string& s) {
  InitSpec spec;
  spec.text = s;
  if (s == "random") return spec;
  if (s.rfind("oracle:", 0) == 0) {
    spec.type = InitSpec::Type::Oracle;
    std::vector<double> v;
    std::stringstream ss(s.substr(7));
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        fail(kExitUsage, "bad oracle value '" + item + "'");
      }
    }
    if (v.size() != 3 || v[0] < 0 || v[1] < 0 || v[2] < 0) {
      fail(kExitUsage, "oracle initializer needs oracle:rot_deg,trans_frac,scale_frac with values >= 0");
    }
    spec.rot_deg = v[0];
    spec.trans_frac = v[1];
    spec.scale_frac = v[2];
    return spec;
  }
  if (s.rfind("model:", 0) == 0 && s.size() > 6) {
    spec.type = InitSpec::Type::Model;
    spec.path = s.substr(6);
    return spec;
  }
  fail(kExitUsage, "initializer must be random, oracle:r,t,s or model:path");
}

struct SolveFlags {
  std::string init = "random";
  bool up_to = false;
  std::string method = "hc";
  std::string predictor;
  double step = 0.0;
  int n_points = 0;
  std::uint64_t seed = 0;
  bool ransac = false;
  int ransac_iters = 200;
  double confidence = 0.99;
  double threshold = 0.01;
  int sample_size = 0;
  double rot_thresh = 2.0;
  double rel_thresh = 5.0;
  std::string success = "auto";
  unsigned threads = 0;
};

void add_solve_flags(CLI::App* cmd, SolveFlags& f) {
  cmd->add_option("--init", f.init, "random | oracle:rot_deg,trans_frac,scale_frac | model:path");
  cmd->add_flag("--up-to", f.up_to, "Oracle magnitudes are upper bounds drawn uniformly");
  cmd->add_option("--method", f.method, "hc | lm | init")->check(CLI::IsMember({"hc", "lm", "init"}));
  cmd->add_option("--predictor", f.predictor, "euler | rk4")->check(CLI::IsMember({"euler", "rk4"}));
  cmd->add_option("--step", f.step, "Homotopy step size (0 = problem default)")->check(CLI::Range(0.0, 0.5));
  cmd->add_option("--n-points", f.n_points, "Use only the first n correspondences")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", f.seed, "Root seed");
  cmd->add_flag("--ransac", f.ransac, "Wrap the solver in RANSAC");
  cmd->add_option("--ransac-iters", f.ransac_iters, "RANSAC iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--confidence", f.confidence, "RANSAC confidence")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--threshold", f.threshold, "RANSAC inlier threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--sample-size", f.sample_size, "RANSAC sample size (0 = problem default)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--rot-thresh", f.rot_thresh, "Success threshold on E_R in degrees");
  cmd->add_option("--rel-thresh", f.rel_thresh, "Success threshold on E_t and E_s in percent");
  cmd->add_option("--success", f.success, "auto | rotation | pose")
      ->check(CLI::IsMember({"auto", "rotation", "pose"}));
  cmd->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
}

simhc::tools::Thresholds thresholds(const SolveFlags& f) {
  simhc::tools::Thresholds th;
  th.rot_deg = f.rot_thresh;
  th.rel_pct = f.rel_thresh;
  th.metric = f.success == "rotation" ? simhc::tools::SuccessMetric::Rotation
              : f.success == "pose"   ? simhc::tools::SuccessMetric::Pose
                                      : simhc::tools::SuccessMetric::Auto;
  return th;
}

class Runner {
 public:
  Runner(const SolveFlags& flags) : flags_(flags), spec_(parse_init(flags.init)) {
    if (spec_.type == InitSpec::Type::Model) {
      simhc_model* m = nullptr;
      check(simhc_model_load(spec_.path.c_str(), &m), "loading weights");
      model_.reset(m);
      simhc_initializer* i = nullptr;
      check(simhc_initializer_model(model_.get(), &i), "model initializer");
      model_init_.reset(i);
    }
  }

  const InitSpec& spec() const { return spec_; }

  TrialRow run(const simhc_scene* scene, std::uint64_t trial) const {
    TrialRow row;
    row.trial = trial;
    simhc_kind kind = SIMHC_UPNP;
    simhc_scene_kind(scene, &kind);
    simhc_scene_config cfg;
    simhc_scene_get_config(scene, &cfg);
    row.seed = cfg.seed;
    row.kind = kind == SIMHC_UPNP ? "upnp" : "grps";
    row.method = flags_.method;

    simhc_solve_options opts;
    simhc_solve_options_default(kind, &opts);
    opts.method = flags_.method == "lm" ? SIMHC_METHOD_LM : flags_.method == "init" ? SIMHC_METHOD_INIT_ONLY : SIMHC_METHOD_HC;
    if (!flags_.predictor.empty()) opts.predictor = flags_.predictor == "rk4" ? SIMHC_PREDICTOR_RK4 : SIMHC_PREDICTOR_EULER;
    if (flags_.step > 0) opts.step_size = flags_.step;
    opts.n_points = flags_.n_points;

    InitPtr owned;
    const simhc_initializer* init = model_init_.get();
    if (!init) {
      const std::uint64_t seed = simhc_derive_seed(flags_.seed, kStreamInitializer, trial);
      simhc_initializer* raw = nullptr;
      const simhc_status s =
          spec_.type == InitSpec::Type::Random
              ? simhc_initializer_random(seed, &raw)
              : simhc_initializer_oracle(spec_.rot_deg, spec_.trans_frac, spec_.scale_frac,
                                         flags_.up_to ? 1 : 0, seed, &raw);
      if (s != SIMHC_OK) return errored(std::move(row));
      owned.reset(raw);
      init = raw;
    }

    if (flags_.ransac) {
      simhc_ransac_options ro;
      simhc_ransac_options_default(kind, &ro);
      ro.max_iters = flags_.ransac_iters;
      ro.confidence = flags_.confidence;
      ro.inlier_threshold = flags_.threshold;
      if (flags_.sample_size > 0) ro.sample_size = flags_.sample_size;
      ro.seed = simhc_derive_seed(flags_.seed, kStreamRansac, trial);
      simhc_ransac_result r;
      if (simhc_ransac(scene, init, &opts, &ro, &r, nullptr, 0) != SIMHC_OK) return errored(std::move(row));
      row.status = "ransac";
      row.rot_err_deg = r.rot_err_deg;
      row.trans_err_pct = r.trans_err_pct;
      row.scale_err_pct = r.scale_err_pct;
      row.residual = std::nan("");
      row.time_us = r.wall_time_ms * 1000.0;
      row.iterations = r.iterations;
      row.inliers = r.n_inliers;
    } else {
      simhc_solve_result r;
      if (simhc_solve(scene, init, &opts, &r) != SIMHC_OK) return errored(std::move(row));
      row.status = flags_.method == "init" ? "init" : simhc_track_status_string(r.track_status);
      row.rot_err_deg = r.rot_err_deg;
      row.trans_err_pct = r.trans_err_pct;
      row.scale_err_pct = r.scale_err_pct;
      row.residual = r.residual_norm;
      row.steps = r.steps;
      row.time_us = r.time_us;
      row.infeasible = r.infeasible != 0;
    }
    row.success = simhc::tools::is_success(row, thresholds(flags_), flags_.ransac);
    return row;
  }

 private:
  static TrialRow errored(TrialRow row) {
    row.status = "error";
    row.error = simhc_last_error();
    row.rot_err_deg = row.trans_err_pct = row.scale_err_pct = row.residual = std::nan("");
    return row;
  }

  SolveFlags flags_;
  InitSpec spec_;
  ModelPtr model_;
  InitPtr model_init_;
};

// Runs job(i) for i in [0, n) on a pool; results are stored by index.
template <class Job>
std::vector<TrialRow> run_pool(std::size_t n, unsigned threads, const Job& job) {
  std::vector<TrialRow> rows(n);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) rows[i] = job(i);
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rows;
}

std::ostream* open_out(const std::string& path, std::ofstream& file) {
  if (path == "-") return &std::cout;
  file.open(path);
  if (!file) fail(kExitIo, "cannot open '" + path + "' for writing");
  return &file;
}

void emit_checked(const std::vector<TrialRow>& rows, const simhc::tools::Aggregate& agg) {
  if (!simhc::tools::verify_recompute(rows, agg)) fail(kExitInternal, "aggregate does not match its rows");
}

int cmd_synth(const SceneFlags& sf, std::uint64_t seed, std::size_t scenes, const std::string& out_path) {
  simhc_scene_config cfg = scene_config(sf);
  std::ofstream file;
  std::ostream* out = open_out(out_path, file);
  for (std::size_t i = 0; i < scenes; ++i) {
    cfg.seed = simhc_derive_seed(seed, kStreamScene, i);
    simhc_scene* raw = nullptr;
    check(simhc_scene_generate(&cfg, &raw), "generating scene");
    ScenePtr scene(raw);
    char* text = nullptr;
    check(simhc_scene_to_json(scene.get(), &text), "serializing scene");
    *out << text << '\n';
    simhc_string_free(text);
  }
  out->flush();
  if (!*out) fail(kExitIo, "failed writing '" + out_path + "'");
  std::cerr << "synth: wrote " << scenes << " " << sf.kind << " scenes to " << out_path << " (seed " << seed
            << ")\n";
  return kExitOk;
}

std::vector<ScenePtr> read_scenes(const std::string& path) {
  std::ifstream file;
  std::istream* in = &std::cin;
  if (path != "-") {
    file.open(path);
    if (!file) fail(kExitIo, "cannot open '" + path + "'");
    in = &file;
  }
  std::vector<ScenePtr> scenes;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(*in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    simhc_scene* raw = nullptr;
    if (simhc_scene_from_json(line.c_str(), &raw) != SIMHC_OK) {
      fail(kExitIo, path + ":" + std::to_string(lineno) + ": " + simhc_last_error());
    }
    scenes.emplace_back(raw);
  }
  if (in->bad()) fail(kExitIo, "failed reading '" + path + "'");
  return scenes;
}

simhc::tools::ReportMeta meta_of(const char* command, const std::string& kind, const SolveFlags& f) {
  simhc::tools::ReportMeta m;
  m.command = command;
  m.kind = kind;
  m.method = f.method;
  m.init = f.init + (f.up_to ? " (up to)" : "");
  m.seed = f.seed;
  m.thresholds = thresholds(f);
  m.ransac = f.ransac;
  return m;
}

int cmd_solve(const SolveFlags& f, const std::string& input, bool json, bool table) {
  Runner runner(f);
  const std::vector<ScenePtr> scenes = read_scenes(input);
  const auto rows = run_pool(scenes.size(), f.threads, [&](std::size_t i) {
    return runner.run(scenes[i].get(), i);
  });
  const auto agg = simhc::tools::aggregate(rows);
  emit_checked(rows, agg);
  const std::string kind = rows.empty() ? "-" : rows.front().kind;
  if (json) {
    std::cout << simhc::tools::report_json(meta_of("solve", kind, f), rows, agg) << '\n';
  } else if (table) {
    simhc::tools::write_table(std::cout, meta_of("solve", kind, f), agg);
  } else {
    simhc::tools::write_csv(std::cout, rows);
  }
  return kExitOk;
}

int cmd_bench(const SceneFlags& sf, const SolveFlags& f, std::size_t trials, const std::string& csv,
              const std::string& json) {
  Runner runner(f);
  const simhc_scene_config base = scene_config(sf);
  const auto rows = run_pool(trials, f.threads, [&](std::size_t i) {
    simhc_scene_config cfg = base;
    cfg.seed = simhc_derive_seed(f.seed, kStreamScene, i);
    simhc_scene* raw = nullptr;
    if (simhc_scene_generate(&cfg, &raw) != SIMHC_OK) {
      TrialRow row;
      row.trial = i;
      row.seed = cfg.seed;
      row.kind = sf.kind;
      row.method = f.method;
      row.status = "error";
      row.error = simhc_last_error();
      row.rot_err_deg = row.trans_err_pct = row.scale_err_pct = row.residual = std::nan("");
      return row;
    }
    ScenePtr scene(raw);
    return runner.run(scene.get(), i);
  });
  const auto agg = simhc::tools::aggregate(rows);
  emit_checked(rows, agg);
  const auto meta = meta_of("bench", sf.kind, f);
  std::ostream& table_out = (csv == "-" || json == "-") ? std::cerr : std::cout;
  if (!csv.empty()) {
    std::ofstream file;
    std::ostream* out = open_out(csv, file);
    simhc::tools::write_csv(*out, rows);
    if (!*out) fail(kExitIo, "failed writing '" + csv + "'");
  }
  if (!json.empty()) {
    std::ofstream file;
    std::ostream* out = open_out(json, file);
    *out << simhc::tools::report_json(meta, rows, agg) << '\n';
    if (!*out) fail(kExitIo, "failed writing '" + json + "'");
  }
  simhc::tools::write_table(table_out, meta, agg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator homotopy continuation for generalized camera pose"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(simhc_version()));

  SceneFlags synth_scene;
  std::uint64_t synth_seed = 0;
  std::size_t synth_count = 1;
  std::string synth_out = "-";
  auto* synth = app.add_subcommand("synth", "Generate a newline-delimited scene dataset");
  add_scene_flags(synth, synth_scene);
  synth->add_option("--scenes", synth_count, "Number of scenes")->check(CLI::NonNegativeNumber);
  synth->add_option("--seed", synth_seed, "Root seed");
  synth->add_option("-o,--out", synth_out, "Output path ('-' for stdout)");

  SolveFlags solve_flags;
  std::string solve_input;
  bool solve_json = false;
  bool solve_table = false;
  auto* solve = app.add_subcommand("solve", "Solve every scene of a dataset");
  add_solve_flags(solve, solve_flags);
  solve->add_option("input", solve_input, "Dataset path ('-' for stdin)")->required();
  solve->add_flag("--json", solve_json, "Emit a JSON report instead of CSV");
  solve->add_flag("--table", solve_table, "Emit the aggregate table instead of CSV");

  SceneFlags bench_scene;
  SolveFlags bench_flags;
  std::size_t bench_trials = 100;
  std::string bench_csv;
  std::string bench_json;
  auto* bench = app.add_subcommand("bench", "Generate scenes and report aggregate accuracy and timing");
  add_scene_flags(bench, bench_scene);
  add_solve_flags(bench, bench_flags);
  bench->add_option("--trials", bench_trials, "Number of trials")->check(CLI::NonNegativeNumber);
  bench->add_option("--csv", bench_csv, "Write per-trial CSV ('-' for stdout)");
  bench->add_option("--json", bench_json, "Write a JSON report ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return cmd_synth(synth_scene, synth_seed, synth_count, synth_out);
    if (*solve) return cmd_solve(solve_flags, solve_input, solve_json, solve_table);
    if (*bench) return cmd_bench(bench_scene, bench_flags, bench_trials, bench_csv, bench_json);
  } catch (const Failure& f) {
    std::cerr << "simhc: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "simhc: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
