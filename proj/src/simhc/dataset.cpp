#include "simhc/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "simhc/error.hpp"

namespace simhc {

using nlohmann::json;

namespace {

json vec(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3(const json& j) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Format, "expected a 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json box(const Box& b) { return {{"lo", vec(b.lo)}, {"hi", vec(b.hi)}}; }
Box box(const json& j) { return {vec3(j.at("lo")), vec3(j.at("hi"))}; }

json config_json(const SceneConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"n_cameras", c.n_cameras},
          {"n_points", c.n_points},
          {"point_sampling", to_string(c.point_sampling)},
          {"point_volume", box(c.point_volume)},
          {"shell_min_depth", c.shell_min_depth},
          {"shell_max_depth", c.shell_max_depth},
          {"camera_volume", box(c.camera_volume)},
          {"origin_volume", box(c.origin_volume)},
          {"rotation_angle_range", c.rotation_angle_range},
          {"scale_min", c.scale_min},
          {"scale_max", c.scale_max},
          {"noise_px", c.noise_px},
          {"noise_mode", to_string(c.noise_mode)},
          {"virtual_focal_px", c.virtual_focal_px},
          {"outlier_fraction", c.outlier_fraction},
          {"seed", c.seed}};
}

SceneConfig config_from(const json& j) {
  SceneConfig c;
  c.kind = problem_kind_from_string(j.at("kind").get<std::string>().c_str());
  c.n_cameras = j.at("n_cameras").get<int>();
  c.n_points = j.at("n_points").get<int>();
  c.point_sampling = point_sampling_from_string(j.at("point_sampling").get<std::string>().c_str());
  c.point_volume = box(j.at("point_volume"));
  c.shell_min_depth = j.at("shell_min_depth").get<double>();
  c.shell_max_depth = j.at("shell_max_depth").get<double>();
  c.camera_volume = box(j.at("camera_volume"));
  c.origin_volume = box(j.at("origin_volume"));
  c.rotation_angle_range = j.at("rotation_angle_range").get<double>();
  c.scale_min = j.at("scale_min").get<double>();
  c.scale_max = j.at("scale_max").get<double>();
  c.noise_px = j.at("noise_px").get<double>();
  c.noise_mode = noise_mode_from_string(j.at("noise_mode").get<std::string>().c_str());
  c.virtual_focal_px = j.at("virtual_focal_px").get<double>();
  c.outlier_fraction = j.at("outlier_fraction").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json pose_json(const Pose& p) {
  const Vec4& q = p.rotation.coeffs();
  return {{"q", json::array({q[0], q[1], q[2], q[3]})},
          {"t", vec(p.translation)},
          {"s", p.scale}};
}

Pose pose_from(const json& j) {
  const auto q = j.at("q").get<std::vector<double>>();
  if (q.size() != 4) throw Error(ErrorCode::Format, "expected a 4-vector quaternion");
  Pose p;
  p.rotation = Quaternion(Vec4(q[0], q[1], q[2], q[3]));
  p.translation = vec3(j.at("t"));
  p.scale = j.at("s").get<double>();
  return p;
}

json vecs(const std::vector<Vec3>& vs) {
  json a = json::array();
  for (const Vec3& v : vs) a.push_back(vec(v));
  return a;
}

std::vector<Vec3> vecs(const json& j) {
  std::vector<Vec3> out;
  for (const json& e : j) out.push_back(vec3(e));
  return out;
}

template <class Scene>
void common_to(json& j, const Scene& s) {
  j["format_version"] = kDatasetFormatVersion;
  j["config"] = config_json(s.config);
  j["gt"] = pose_json(s.gt);
  j["depths"] = s.depths;
  j["clean_bearings"] = vecs(s.clean_bearings);
  j["outliers"] = std::vector<bool>(s.outliers.begin(), s.outliers.end());
}

template <class Scene>
void common_from(const json& j, Scene& s) {
  s.config = config_from(j.at("config"));
  s.gt = pose_from(j.at("gt"));
  s.depths = j.at("depths").get<std::vector<double>>();
  s.clean_bearings = vecs(j.at("clean_bearings"));
  s.outliers = j.at("outliers").get<std::vector<bool>>();
  const std::size_t n = s.corrs.size();
  if (s.depths.size() != n || s.clean_bearings.size() != n || s.outliers.size() != n) {
    throw Error(ErrorCode::Format, "per-correspondence arrays disagree in length");
  }
}

LabeledScene parse_scene(const json& j) {
  const int version = j.at("format_version").get<int>();
  if (version != kDatasetFormatVersion) {
    throw Error(ErrorCode::Format, "unsupported dataset format_version " + std::to_string(version));
  }
  const ProblemKind kind =
      problem_kind_from_string(j.at("config").at("kind").get<std::string>().c_str());
  if (kind == ProblemKind::Upnp) {
    UpnpScene s;
    for (const json& c : j.at("correspondences")) {
      s.corrs.push_back({vec3(c.at("p")), vec3(c.at("f")), vec3(c.at("v"))});
    }
    common_from(j, s);
    return s;
  }
  GrpsScene s;
  for (const json& c : j.at("correspondences")) {
    s.corrs.push_back({vec3(c.at("f")), vec3(c.at("v")), vec3(c.at("f2")), vec3(c.at("v2"))});
  }
  common_from(j, s);
  s.depths2 = j.at("depths2").get<std::vector<double>>();
  s.clean_bearings2 = vecs(j.at("clean_bearings2"));
  if (s.depths2.size() != s.corrs.size() || s.clean_bearings2.size() != s.corrs.size()) {
    throw Error(ErrorCode::Format, "per-correspondence arrays disagree in length");
  }
  return s;
}

}  // namespace

std::string scene_to_json(const LabeledScene& scene) {
  json j;
  if (const auto* u = std::get_if<UpnpScene>(&scene)) {
    common_to(j, *u);
    json cs = json::array();
    for (const auto& c : u->corrs) cs.push_back({{"p", vec(c.p)}, {"f", vec(c.f)}, {"v", vec(c.v)}});
    j["correspondences"] = std::move(cs);
  } else {
    const auto& g = std::get<GrpsScene>(scene);
    common_to(j, g);
    json cs = json::array();
    for (const auto& c : g.corrs) {
      cs.push_back({{"f", vec(c.f)}, {"v", vec(c.v)}, {"f2", vec(c.f2)}, {"v2", vec(c.v2)}});
    }
    j["correspondences"] = std::move(cs);
    j["depths2"] = g.depths2;
    j["clean_bearings2"] = vecs(g.clean_bearings2);
  }
  return j.dump();
}

LabeledScene scene_from_json(std::string_view line) {
  try {
    return parse_scene(json::parse(line));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed scene record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Format) throw;
    throw Error(ErrorCode::Format, std::string("malformed scene record: ") + e.what());
  }
}

std::string config_to_json(const SceneConfig& cfg) { return config_json(cfg).dump(); }

SceneConfig config_from_json(std::string_view text) {
  try {
    return config_from(json::parse(text));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Format, std::string("malformed scene config: ") + e.what());
  }
}

void write_dataset(std::ostream& out, const std::vector<LabeledScene>& scenes) {
  for (const auto& s : scenes) out << scene_to_json(s) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing dataset");
}

std::vector<LabeledScene> read_dataset(std::istream& in) {
  std::vector<LabeledScene> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(scene_from_json(line));
    } catch (const Error& e) {
      throw Error(ErrorCode::Format, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (in.bad()) throw Error(ErrorCode::Io, "failed reading dataset");
  return out;
}

std::vector<LabeledScene> read_dataset_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open dataset '" + path + "'");
  return read_dataset(in);
}

}  // namespace simhc
