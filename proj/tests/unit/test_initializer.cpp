#include <doctest.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "simhc/error.hpp"
#include "simhc/initializer.hpp"
#include "simhc/regressor.hpp"
#include "simhc/synth.hpp"

using namespace simhc;

namespace {

MatX random_matrix(int rows, int cols, std::mt19937_64& rng, double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  MatX m(rows, cols);
  for (int i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

Layer layer(LayerKind kind, int in, int out, Activation act, std::mt19937_64& rng) {
  Layer l;
  l.kind = kind;
  l.in_channels = in;
  l.out_channels = out;
  l.activation = act;
  l.weights = random_matrix(out, in, rng, 1.0 / std::sqrt(in));
  l.bias = random_matrix(out, 1, rng, 0.1);
  return l;
}

RegressorModel random_model(ProblemKind kind, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RegressorModel m;
  m.problem_kind = kind;
  m.input_channels = kind == ProblemKind::Upnp ? 9 : 12;
  m.input_mean = random_matrix(m.input_channels, 1, rng, 0.1);
  m.input_std = VecX::Constant(m.input_channels, 1.5);
  m.layers.push_back(layer(LayerKind::Conv1d, m.input_channels, 16, Activation::Relu, rng));
  m.layers.push_back(layer(LayerKind::Conv1d, 16, 32, Activation::Relu, rng));
  m.layers.push_back(layer(LayerKind::FullyConnected, 32, 24, Activation::Relu, rng));
  const int out = kind == ProblemKind::Upnp ? 4 : 8;
  m.layers.push_back(layer(LayerKind::FullyConnected, 24, out, Activation::None, rng));
  m.heads.push_back({HeadKind::Quaternion, 0, 4});
  if (kind == ProblemKind::Grps) {
    m.heads.push_back({HeadKind::Translation, 4, 3});
    m.heads.push_back({HeadKind::Scale, 7, 1});
    // keeps the scale output positive
    m.layers.back().bias[7] = 50.0;
  }
  m.validate();
  return m;
}

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_SUITE("initializer") {

TEST_CASE("random_init") {
  const auto a = random_init(42, ProblemKind::Grps);
  const auto b = random_init(42, ProblemKind::Grps);
  CHECK(a.pose.rotation.coeffs() == b.pose.rotation.coeffs());
  CHECK(a.pose.translation == b.pose.translation);
  CHECK(a.pose.scale == b.pose.scale);
  CHECK(a.provenance == InitProvenance::Random);
  CHECK(random_init(42, ProblemKind::Upnp).pose.scale == 1.0);

  std::array<int, 8> octants{};
  const int n = 10000;
  for (int k = 0; k < n; ++k) {
    const auto s = random_init(static_cast<std::uint64_t>(k) * 7919 + 1, ProblemKind::Grps);
    const Vec4& q = s.pose.rotation.coeffs();
    CHECK(std::abs(q.norm() - 1.0) < 1e-12);
    CHECK(s.pose.scale >= 0.1);
    CHECK(s.pose.scale <= 5.0);
    CHECK(s.pose.translation.cwiseAbs().maxCoeff() <= 1.0);
    octants[(q[1] > 0) * 4 + (q[2] > 0) * 2 + (q[3] > 0)]++;
  }
  double chi2 = 0;
  for (int c : octants) chi2 += (c - n / 8.0) * (c - n / 8.0) / (n / 8.0);
  CHECK(oracle::chi_square_pvalue(chi2, 7) > 0.01);
}

TEST_CASE("perturbed_oracle") {
  Pose gt;
  gt.rotation = Quaternion(Vec4(0.3, -0.5, 0.2, 0.7));
  gt.translation = Vec3(1, -2, 0.5);
  gt.scale = 2.5;

  const auto same = perturbed_oracle(gt, 0, 0, 0, 3);
  CHECK(same.pose.rotation.coeffs().isApprox(gt.rotation.coeffs(), 1e-15));
  CHECK(same.pose.translation == gt.translation);
  CHECK(same.pose.scale == gt.scale);
  CHECK(same.provenance == InitProvenance::PerturbedOracle);

  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto p = perturbed_oracle(gt, 7.0, 0.1, 0.2, seed);
    CHECK(std::abs(rotation_error_deg(p.pose.R(), gt.R()) - 7.0) < 1e-9);
    CHECK((p.pose.translation - gt.translation).norm() == doctest::Approx(0.1 * gt.translation.norm()).epsilon(1e-12));
    CHECK(std::abs(p.pose.scale / gt.scale - 1.0) <= 0.2 + 1e-15);
  }
  const auto x = perturbed_oracle(gt, 7.0, 0.1, 0.2, 9);
  const auto y = perturbed_oracle(gt, 7.0, 0.1, 0.2, 9);
  CHECK(x.pose.rotation.coeffs() == y.pose.rotation.coeffs());
  CHECK(x.pose.translation == y.pose.translation);
}

TEST_CASE("oracle initializer draws") {
  Pose gt;
  gt.translation = Vec3(0, 0, 2);
  const OracleInitializer exact(gt, {7.0, 0.0, 0.0, false}, 5);
  const OracleInitializer upto(gt, {7.0, 0.2, 0.0, true}, 5);
  const std::vector<Correspondence2D3D> none;
  bool varied = false;
  for (std::uint64_t d = 0; d < 50; ++d) {
    CHECK(std::abs(rotation_error_deg(exact.initialize(none, d).pose.R(), gt.R()) - 7.0) < 1e-9);
    const auto u = upto.initialize(none, d);
    const double e = rotation_error_deg(u.pose.R(), gt.R());
    CHECK(e <= 7.0 + 1e-9);
    CHECK((u.pose.translation - gt.translation).norm() <= 0.2 * 2 + 1e-12);
    varied |= std::abs(e - 7.0) > 0.5;
  }
  CHECK(varied);
  CHECK(exact.initialize(none, 3).pose.rotation.coeffs() == exact.initialize(none, 3).pose.rotation.coeffs());

  const RandomInitializer r(1);
  CHECK(r.initialize(none, 0).pose.rotation.coeffs() != r.initialize(none, 1).pose.rotation.coeffs());
}

TEST_CASE("regressor forward pass") {
  const RegressorModel m = random_model(ProblemKind::Upnp, 1);
  std::mt19937_64 rng(2);
  const MatX X = random_matrix(16, 9, rng, 1.0);
  const VecX y = forward(m, X);

  // permutation invariance
  std::vector<int> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  for (int trial = 0; trial < 10; ++trial) {
    std::shuffle(perm.begin(), perm.end(), rng);
    MatX P(16, 9);
    for (int i = 0; i < 16; ++i) P.row(i) = X.row(perm[static_cast<std::size_t>(i)]);
    CHECK((forward(m, P) - y).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, y.cwiseAbs().maxCoeff()));
  }

  // hand-computed reference for a single conv + pooling + fc chain
  RegressorModel tiny;
  tiny.problem_kind = ProblemKind::Upnp;
  tiny.input_channels = 9;
  tiny.input_mean = VecX::Zero(9);
  tiny.input_std = VecX::Constant(9, 2.0);
  Layer c;
  c.in_channels = 9;
  c.out_channels = 2;
  c.weights = MatX::Zero(2, 9);
  c.weights(0, 0) = 1.0;
  c.weights(1, 1) = -1.0;
  c.bias = VecX::Zero(2);
  Layer f;
  f.kind = LayerKind::FullyConnected;
  f.activation = Activation::None;
  f.in_channels = 2;
  f.out_channels = 4;
  f.weights = MatX::Zero(4, 2);
  f.weights(0, 0) = 1.0;
  f.weights(1, 1) = 1.0;
  f.bias = VecX::Zero(4);
  f.bias[3] = 0.25;
  tiny.layers = {c, f};
  tiny.heads = {{HeadKind::Quaternion, 0, 4}};
  MatX in = MatX::Zero(2, 9);
  in(0, 0) = 4.0;
  in(1, 0) = -2.0;
  in(0, 1) = -6.0;
  in(1, 1) = 2.0;
  // relu(x/2) mean over rows: col0 -> (2 + 0)/2, col1 -> (3 + 0)/2
  const VecX out = forward(tiny, in);
  CHECK(out.isApprox(Eigen::Vector4d(1.0, 1.5, 0.0, 0.25), 1e-15));
  const auto sol = regress_pose(tiny, in);
  CHECK(sol.provenance == InitProvenance::Learned);
  CHECK(sol.pose.rotation.coeffs().isApprox(Eigen::Vector4d(1.0, 1.5, 0.0, 0.25).normalized(), 1e-15));

  CHECK_THROWS_WITH_AS(forward(m, MatX::Zero(16, 12)), "model/input incompatible", Error);
  CHECK_THROWS_WITH_AS(forward(m, MatX::Zero(0, 9)), "model/input incompatible", Error);

  RegressorModel zero = m;
  for (auto& l : zero.layers) {
    l.weights.setZero();
    l.bias.setZero();
  }
  CHECK_THROWS_WITH_AS(regress_pose(zero, X), "degenerate quaternion", Error);
}

TEST_CASE("rotation6d head") {
  RegressorModel m;
  m.problem_kind = ProblemKind::Grps;
  m.input_channels = 12;
  m.input_mean = VecX::Zero(12);
  m.input_std = VecX::Ones(12);
  Layer fc;
  fc.kind = LayerKind::FullyConnected;
  fc.activation = Activation::None;
  fc.in_channels = 12;
  fc.out_channels = 10;
  fc.weights = MatX::Zero(10, 12);
  fc.bias = VecX::Zero(10);
  const Mat3 R = oracle::rodrigues(Vec3(1, 1, 0), 0.4);
  fc.bias << 2 * R.col(0), R.col(1) + 0.3 * R.col(0), 1.0, 2.0, 3.0, 0.8;
  m.layers = {fc};
  m.heads = {{HeadKind::Rotation6D, 0, 6}, {HeadKind::Translation, 6, 3}, {HeadKind::Scale, 9, 1}};
  m.validate();
  const auto sol = regress_pose(m, MatX::Ones(7, 12));
  CHECK((sol.pose.R() - R).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(sol.pose.translation == Vec3(1, 2, 3));
  CHECK(sol.pose.scale == 0.8);

  m.layers[0].bias[9] = -1.0;
  CHECK_THROWS_AS(regress_pose(m, MatX::Ones(7, 12)), Error);
}

TEST_CASE("weight file validation") {
  RegressorModel m = random_model(ProblemKind::Grps, 3);
  CHECK_NOTHROW(m.validate());

  RegressorModel bad = m;
  bad.layers[1].in_channels = 15;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.heads.pop_back();
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.heads[0].width = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.input_channels = 9;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  bad.layers[0].kernel_width = 3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = m;
  std::swap(bad.layers[1], bad.layers[2]);
  CHECK_THROWS_AS(bad.validate(), Error);

  const std::string text = regressor_to_json(m);
  std::string v2 = text;
  v2.replace(v2.find("\"format_version\":1"), 18, "\"format_version\":2");
  CHECK_THROWS_WITH_AS(regressor_from_json(v2), "unsupported weight format_version 2", Error);
  CHECK_THROWS_AS(regressor_from_json("{not json"), Error);
  CHECK_THROWS_AS(regressor_from_json("{\"format_version\":1}"), Error);
  CHECK_THROWS_AS(load_regressor("/nonexistent/weights.json"), Error);
  try {
    load_regressor("/nonexistent/weights.json");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("weight round trip") {
  for (ProblemKind kind : {ProblemKind::Upnp, ProblemKind::Grps}) {
    const RegressorModel m = random_model(kind, 4);
    const std::string path = temp_path(kind == ProblemKind::Upnp ? "simhc_rt_upnp.json" : "simhc_rt_grps.json");
    save_regressor(m, path);
    const RegressorModel back = load_regressor(path);
    std::filesystem::remove(path);
    std::mt19937_64 rng(5);
    for (int k = 0; k < 20; ++k) {
      const MatX X = random_matrix(8 + k, m.input_channels, rng, 2.0);
      CHECK((forward(m, X) - forward(back, X)).cwiseAbs().maxCoeff() <= 1e-12);
    }
    CHECK(regressor_to_json(back) == regressor_to_json(m));
  }
}

TEST_CASE("learned initializer") {
  auto upnp_model = std::make_shared<const RegressorModel>(random_model(ProblemKind::Upnp, 6));
  const LearnedInitializer init(upnp_model);
  SceneConfig cu = SceneConfig::upnp_defaults();
  const auto su = gen_upnp_scene(cu);
  const auto a = init.initialize(su.corrs, 0);
  const auto b = init.initialize(su.corrs, 7);
  CHECK(a.pose.rotation.coeffs() == b.pose.rotation.coeffs());
  CHECK(a.provenance == InitProvenance::Learned);

  SceneConfig cg = SceneConfig::grps_defaults();
  const auto sg = gen_grps_scene(cg);
  CHECK_THROWS_WITH_AS(init.initialize(sg.corrs, 0), "model/input incompatible", Error);
  CHECK_THROWS_AS(LearnedInitializer(nullptr), Error);
}

TEST_CASE("regressor memorizes a small training set") {
  // Random conv features, with the output layer fitted by least squares to
  // the ground-truth 6D rotations of 32 scenes.
  std::mt19937_64 rng(7);
  std::vector<UpnpScene> scenes;
  for (std::uint64_t s = 0; s < 32; ++s) {
    SceneConfig c = SceneConfig::upnp_defaults();
    c.seed = 300 + s;
    c.noise_px = 2.0;
    scenes.push_back(gen_upnp_scene(c));
  }
  MatX all(32 * 16, 9);
  for (int i = 0; i < 32; ++i) all.middleRows(16 * i, 16) = correspondence_matrix(scenes[static_cast<std::size_t>(i)].corrs);

  RegressorModel m;
  m.problem_kind = ProblemKind::Upnp;
  m.input_channels = 9;
  m.input_mean = all.colwise().mean().transpose();
  m.input_std = ((all.rowwise() - m.input_mean.transpose()).array().square().colwise().mean().sqrt() + 1e-9).transpose();
  m.layers.push_back(layer(LayerKind::Conv1d, 9, 128, Activation::Relu, rng));
  m.layers.push_back(layer(LayerKind::Conv1d, 128, 128, Activation::Relu, rng));
  Layer head;
  head.kind = LayerKind::FullyConnected;
  head.activation = Activation::None;
  head.in_channels = 128;
  head.out_channels = 6;
  head.weights = MatX::Zero(6, 128);
  head.bias = VecX::Zero(6);
  m.layers.push_back(head);
  m.heads = {{HeadKind::Rotation6D, 0, 6}};

  RegressorModel trunk = m;
  trunk.layers.pop_back();
  MatX features(32, 129);
  MatX targets(32, 6);
  for (int i = 0; i < 32; ++i) {
    const auto& s = scenes[static_cast<std::size_t>(i)];
    features.row(i) << forward(trunk, correspondence_matrix(s.corrs)).transpose(), 1.0;
    const Mat3 R = s.gt.R();
    targets.row(i) << R.col(0).transpose(), R.col(1).transpose();
  }
  const MatX A = features.transpose() * features + 1e-8 * MatX::Identity(129, 129);
  const MatX W = A.ldlt().solve(features.transpose() * targets);
  m.layers.back().weights = W.topRows(128).transpose();
  m.layers.back().bias = W.row(128).transpose();

  const std::string path = temp_path("simhc_overfit.json");
  save_regressor(m, path);
  const LearnedInitializer init(std::make_shared<const RegressorModel>(load_regressor(path)));
  std::filesystem::remove(path);
  std::vector<double> errs;
  for (const auto& s : scenes) errs.push_back(rotation_error_deg(init.initialize(s.corrs, 0).pose.R(), s.gt.R()));
  CHECK(oracle::median(errs) < 15.0);
}

}
