#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "simhc/dataset.hpp"
#include "simhc/error.hpp"

using namespace simhc;

namespace {

template <class S>
void check_same(const S& a, const S& b) {
  REQUIRE(a.corrs.size() == b.corrs.size());
  CHECK(a.gt.rotation.coeffs() == b.gt.rotation.coeffs());
  CHECK(a.gt.translation == b.gt.translation);
  CHECK(a.gt.scale == b.gt.scale);
  CHECK(a.depths == b.depths);
  CHECK(a.outliers == b.outliers);
  CHECK(a.config.seed == b.config.seed);
  CHECK(a.config.noise_px == b.config.noise_px);
  CHECK(a.config.point_sampling == b.config.point_sampling);
  for (std::size_t i = 0; i < a.corrs.size(); ++i) {
    CHECK(a.clean_bearings[i] == b.clean_bearings[i]);
    CHECK(a.corrs[i].f == b.corrs[i].f);
    CHECK(a.corrs[i].v == b.corrs[i].v);
  }
}

}  // namespace

TEST_SUITE("dataset") {

TEST_CASE("scene round trip is exact") {
  SceneConfig u = SceneConfig::upnp_defaults();
  u.seed = 11;
  u.noise_px = 2.0;
  u.outlier_fraction = 0.25;
  const UpnpScene su = gen_upnp_scene(u);
  const auto bu = std::get<UpnpScene>(scene_from_json(scene_to_json(su)));
  check_same(su, bu);
  for (std::size_t i = 0; i < su.corrs.size(); ++i) CHECK(su.corrs[i].p == bu.corrs[i].p);

  SceneConfig g = SceneConfig::grps_defaults();
  g.seed = 12;
  g.noise_px = 0.5;
  g.noise_mode = NoiseMode::Gaussian;
  g.point_sampling = PointSampling::Box;
  const GrpsScene sg = gen_grps_scene(g);
  const auto bg = std::get<GrpsScene>(scene_from_json(scene_to_json(sg)));
  check_same(sg, bg);
  CHECK(bg.depths2 == sg.depths2);
  CHECK(bg.config.noise_mode == NoiseMode::Gaussian);
  for (std::size_t i = 0; i < sg.corrs.size(); ++i) {
    CHECK(sg.corrs[i].f2 == bg.corrs[i].f2);
    CHECK(sg.corrs[i].v2 == bg.corrs[i].v2);
    CHECK(sg.clean_bearings2[i] == bg.clean_bearings2[i]);
  }
  CHECK(scene_to_json(bg) == scene_to_json(sg));
  CHECK(scene_to_json(sg).find('\n') == std::string::npos);
}

TEST_CASE("config round trip") {
  SceneConfig c = SceneConfig::grps_defaults();
  c.seed = 0xFFFFFFFFFFFFFFFFull;
  c.rotation_angle_range = 0.123456789012345678;
  const SceneConfig b = config_from_json(config_to_json(c));
  CHECK(b.seed == c.seed);
  CHECK(b.rotation_angle_range == c.rotation_angle_range);
  CHECK(b.point_volume.hi == c.point_volume.hi);
  CHECK(b.kind == ProblemKind::Grps);
}

TEST_CASE("newline-delimited files") {
  std::vector<LabeledScene> scenes;
  for (std::uint64_t s = 0; s < 5; ++s) {
    SceneConfig c = s % 2 ? SceneConfig::grps_defaults() : SceneConfig::upnp_defaults();
    c.seed = s;
    scenes.push_back(generate_scene(c));
  }
  std::stringstream ss;
  write_dataset(ss, scenes);
  std::string text = ss.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  std::stringstream with_blank(text + "\n   \n");
  const auto back = read_dataset(with_blank);
  REQUIRE(back.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(scene_to_json(back[i]) == scene_to_json(scenes[i]));

  std::stringstream empty;
  CHECK(read_dataset(empty).empty());

  std::stringstream broken(text + "{\"format_version\":1}\n");
  try {
    read_dataset(broken);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Format);
    CHECK(std::string(e.what()).rfind("line 6:", 0) == 0);
  }

  std::string v2 = scene_to_json(scenes[0]);
  v2.replace(v2.find("\"format_version\":1"), 18, "\"format_version\":9");
  CHECK_THROWS_AS(scene_from_json(v2), Error);
  CHECK_THROWS_AS(scene_from_json("not json"), Error);
  CHECK_THROWS_AS(read_dataset_file("/nonexistent/data.jsonl"), Error);

  const auto path = (std::filesystem::temp_directory_path() / "simhc_dataset_test.jsonl").string();
  {
    std::ofstream out(path);
    write_dataset(out, scenes);
  }
  CHECK(read_dataset_file(path).size() == 5);
  std::filesystem::remove(path);
}

}
