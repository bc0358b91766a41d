#include "simhc/regressor.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "simhc/error.hpp"

namespace simhc {

using nlohmann::json;

namespace {

Error format_error(const std::string& what) { return Error(ErrorCode::Format, what); }

const char* to_string(LayerKind k) { return k == LayerKind::Conv1d ? "conv1d" : "fully_connected"; }
const char* to_string(Activation a) { return a == Activation::Relu ? "relu" : "none"; }

const char* to_string(HeadKind k) {
  switch (k) {
    case HeadKind::Quaternion: return "quaternion";
    case HeadKind::Rotation6D: return "rotation6d";
    case HeadKind::Translation: return "translation";
    case HeadKind::Scale: return "scale";
  }
  return "?";
}

int head_width(HeadKind k) {
  switch (k) {
    case HeadKind::Quaternion: return 4;
    case HeadKind::Rotation6D: return 6;
    case HeadKind::Translation: return 3;
    case HeadKind::Scale: return 1;
  }
  return 0;
}

LayerKind layer_kind(const std::string& s) {
  if (s == "conv1d") return LayerKind::Conv1d;
  if (s == "fully_connected") return LayerKind::FullyConnected;
  throw format_error("unknown layer kind '" + s + "'");
}

Activation activation(const std::string& s) {
  if (s == "relu") return Activation::Relu;
  if (s == "none") return Activation::None;
  throw format_error("unknown activation '" + s + "'");
}

HeadKind head_kind(const std::string& s) {
  if (s == "quaternion") return HeadKind::Quaternion;
  if (s == "rotation6d") return HeadKind::Rotation6D;
  if (s == "translation") return HeadKind::Translation;
  if (s == "scale") return HeadKind::Scale;
  throw format_error("unknown head kind '" + s + "'");
}

VecX to_vec(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> from_vec(const VecX& v) { return {v.data(), v.data() + v.size()}; }

int expected_channels(ProblemKind kind) { return kind == ProblemKind::Upnp ? 9 : 12; }

void relu(MatX& m) { m = m.cwiseMax(0.0); }

}  // namespace

int RegressorModel::output_width() const {
  return layers.empty() ? input_channels : layers.back().out_channels;
}

void RegressorModel::validate() const {
  if (input_channels != expected_channels(problem_kind)) {
    throw format_error("input_channels must be " + std::to_string(expected_channels(problem_kind)) +
                       " for " + simhc::to_string(problem_kind));
  }
  if (input_mean.size() != input_channels || input_std.size() != input_channels) {
    throw format_error("normalization arrays must have input_channels entries");
  }
  if (!(input_std.array() > 0.0).all()) throw format_error("normalization std must be positive");

  int width = input_channels;
  bool seen_fc = false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (l.kernel_width != 1) throw format_error(where + "only kernel_width 1 is supported");
    if (l.in_channels != width) throw format_error(where + "in_channels does not match previous width");
    if (l.out_channels < 1) throw format_error(where + "out_channels must be >= 1");
    if (l.weights.rows() != l.out_channels || l.weights.cols() != l.in_channels) {
      throw format_error(where + "weights must hold out_channels * in_channels * kernel_width values");
    }
    if (l.bias.size() != l.out_channels) throw format_error(where + "bias must hold out_channels values");
    if (l.kind == LayerKind::FullyConnected) seen_fc = true;
    if (l.kind == LayerKind::Conv1d && seen_fc) {
      throw format_error(where + "conv1d layers must precede fully_connected layers");
    }
    width = l.out_channels;
  }

  if (heads.empty()) throw format_error("model has no heads");
  std::vector<bool> covered(static_cast<std::size_t>(width), false);
  int total = 0;
  for (const Head& h : heads) {
    if (h.width != head_width(h.kind)) {
      throw format_error(std::string(to_string(h.kind)) + " head must have width " +
                         std::to_string(head_width(h.kind)));
    }
    if (h.offset < 0 || h.offset + h.width > width) throw format_error("head slice out of range");
    for (int k = h.offset; k < h.offset + h.width; ++k) {
      if (covered[static_cast<std::size_t>(k)]) throw format_error("head slices overlap");
      covered[static_cast<std::size_t>(k)] = true;
    }
    total += h.width;
  }
  if (total != width) throw format_error("head widths must sum to the final layer width");
}

RegressorModel regressor_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw format_error(std::string("weight file is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != RegressorModel::kFormatVersion) {
      throw format_error("unsupported weight format_version " + std::to_string(version));
    }
    RegressorModel m;
    m.problem_kind = problem_kind_from_string(j.at("problem_kind").get<std::string>().c_str());
    m.input_channels = j.at("input_channels").get<int>();
    m.input_mean = to_vec(j.at("normalization").at("mean"));
    m.input_std = to_vec(j.at("normalization").at("std"));
    for (const json& jl : j.at("layers")) {
      Layer l;
      l.kind = layer_kind(jl.at("kind").get<std::string>());
      l.in_channels = jl.at("in_channels").get<int>();
      l.out_channels = jl.at("out_channels").get<int>();
      l.kernel_width = jl.value("kernel_width", 1);
      l.activation = activation(
          jl.value("activation", std::string(l.kind == LayerKind::Conv1d ? "relu" : "none")));
      const auto w = jl.at("weights").get<std::vector<double>>();
      const auto expected = static_cast<std::size_t>(l.out_channels) *
                            static_cast<std::size_t>(l.in_channels) *
                            static_cast<std::size_t>(std::max(l.kernel_width, 1));
      if (l.out_channels < 1 || l.in_channels < 1 || w.size() != expected) {
        throw format_error("layer weights have " + std::to_string(w.size()) + " values, expected " +
                           std::to_string(expected));
      }
      if (l.kernel_width != 1) throw format_error("only kernel_width 1 is supported");
      l.weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), l.out_channels, l.in_channels);
      l.bias = to_vec(jl.at("bias"));
      m.layers.push_back(std::move(l));
    }
    for (const json& jh : j.at("heads")) {
      m.heads.push_back({head_kind(jh.at("kind").get<std::string>()), jh.at("offset").get<int>(),
                         jh.at("width").get<int>()});
    }
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw format_error(std::string("malformed weight file: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Format) throw;
    throw format_error(e.what());
  }
}

std::string regressor_to_json(const RegressorModel& m) {
  m.validate();
  json j;
  j["format_version"] = RegressorModel::kFormatVersion;
  j["problem_kind"] = simhc::to_string(m.problem_kind);
  j["input_channels"] = m.input_channels;
  j["normalization"] = {{"mean", from_vec(m.input_mean)}, {"std", from_vec(m.input_std)}};
  j["layers"] = json::array();
  for (const Layer& l : m.layers) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = l.weights;
    j["layers"].push_back({{"kind", to_string(l.kind)},
                           {"in_channels", l.in_channels},
                           {"out_channels", l.out_channels},
                           {"kernel_width", l.kernel_width},
                           {"activation", to_string(l.activation)},
                           {"weights", std::vector<double>(w.data(), w.data() + w.size())},
                           {"bias", from_vec(l.bias)}});
  }
  j["heads"] = json::array();
  for (const Head& h : m.heads) {
    j["heads"].push_back({{"kind", to_string(h.kind)}, {"offset", h.offset}, {"width", h.width}});
  }
  return j.dump();
}

RegressorModel load_regressor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open weight file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return regressor_from_json(ss.str());
}

void save_regressor(const RegressorModel& model, const std::string& path) {
  const std::string text = regressor_to_json(model);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write weight file '" + path + "'");
  out << text << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing weight file '" + path + "'");
}

MatX correspondence_matrix(std::span<const Correspondence2D3D> corrs) {
  MatX X(static_cast<Eigen::Index>(corrs.size()), 9);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) << corrs[i].p.transpose(), corrs[i].f.transpose(),
        corrs[i].v.transpose();
  }
  return X;
}

MatX correspondence_matrix(std::span<const Correspondence2D2D> corrs) {
  MatX X(static_cast<Eigen::Index>(corrs.size()), 12);
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    X.row(static_cast<Eigen::Index>(i)) << corrs[i].f.transpose(), corrs[i].v.transpose(),
        corrs[i].f2.transpose(), corrs[i].v2.transpose();
  }
  return X;
}

VecX forward(const RegressorModel& model, const MatX& input) {
  if (input.cols() != model.input_channels || input.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "model/input incompatible");
  }
  MatX h = (input.rowwise() - model.input_mean.transpose()).array().rowwise() /
           model.input_std.transpose().array();
  std::size_t i = 0;
  for (; i < model.layers.size() && model.layers[i].kind == LayerKind::Conv1d; ++i) {
    const Layer& l = model.layers[i];
    h = (h * l.weights.transpose()).rowwise() + l.bias.transpose();
    if (l.activation == Activation::Relu) relu(h);
  }
  VecX x = h.colwise().mean().transpose();
  for (; i < model.layers.size(); ++i) {
    const Layer& l = model.layers[i];
    x = l.weights * x + l.bias;
    if (l.activation == Activation::Relu) x = x.cwiseMax(0.0);
  }
  return x;
}

InitialSolution regress_pose(const RegressorModel& model, const MatX& input) {
  const VecX out = forward(model, input);
  InitialSolution sol;
  sol.provenance = InitProvenance::Learned;
  for (const Head& h : model.heads) {
    const auto seg = out.segment(h.offset, h.width);
    switch (h.kind) {
      case HeadKind::Quaternion:
        sol.pose.rotation = Quaternion(Vec4(seg[0], seg[1], seg[2], seg[3]));
        break;
      case HeadKind::Rotation6D:
        sol.pose.rotation = Quaternion::from_rotmat(
            sixd_to_rotmat({Vec3(seg[0], seg[1], seg[2]), Vec3(seg[3], seg[4], seg[5])}));
        break;
      case HeadKind::Translation:
        sol.pose.translation = Vec3(seg[0], seg[1], seg[2]);
        break;
      case HeadKind::Scale:
        if (!(seg[0] > 0.0)) throw Error(ErrorCode::Degenerate, "non-positive scale prediction");
        sol.pose.scale = seg[0];
        break;
    }
  }
  return sol;
}

LearnedInitializer::LearnedInitializer(std::shared_ptr<const RegressorModel> model)
    : model_(std::move(model)) {
  if (!model_) throw Error(ErrorCode::InvalidArgument, "null regressor model");
  model_->validate();
}

InitialSolution LearnedInitializer::initialize(std::span<const Correspondence2D3D> corrs,
                                               std::uint64_t) const {
  if (model_->problem_kind != ProblemKind::Upnp) {
    throw Error(ErrorCode::InvalidArgument, "model/input incompatible");
  }
  return regress_pose(*model_, correspondence_matrix(corrs));
}

InitialSolution LearnedInitializer::initialize(std::span<const Correspondence2D2D> corrs,
                                               std::uint64_t) const {
  if (model_->problem_kind != ProblemKind::Grps) {
    throw Error(ErrorCode::InvalidArgument, "model/input incompatible");
  }
  return regress_pose(*model_, correspondence_matrix(corrs));
}

}  // namespace simhc
