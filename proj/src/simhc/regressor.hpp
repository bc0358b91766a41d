#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simhc/correspondence.hpp"
#include "simhc/initializer.hpp"
#include "simhc/poly_system.hpp"

namespace simhc {

enum class LayerKind { Conv1d, FullyConnected };
enum class Activation { Relu, None };
enum class HeadKind { Quaternion, Rotation6D, Translation, Scale };

struct Layer {
  LayerKind kind = LayerKind::Conv1d;
  int in_channels = 0;
  int out_channels = 0;
  int kernel_width = 1;
  Activation activation = Activation::Relu;
  // out_channels x in_channels (kernel width 1). Batch-norm, if any, is
  // already folded in.
  MatX weights;
  VecX bias;
};

struct Head {
  HeadKind kind = HeadKind::Quaternion;
  int offset = 0;
  int width = 0;
};

// Per-correspondence encoder (kernel-1 conv layers), global mean pooling
// over correspondences, then fully connected layers whose final output is
// sliced into heads.
struct RegressorModel {
  static constexpr int kFormatVersion = 1;

  ProblemKind problem_kind = ProblemKind::Upnp;
  int input_channels = 0;
  VecX input_mean;
  VecX input_std;
  std::vector<Layer> layers;
  std::vector<Head> heads;

  int output_width() const;
  // Throws Error(Format) describing the first inconsistency.
  void validate() const;
};

RegressorModel regressor_from_json(std::string_view text);
std::string regressor_to_json(const RegressorModel& model);
RegressorModel load_regressor(const std::string& path);
void save_regressor(const RegressorModel& model, const std::string& path);

// Row-wise stacked correspondences: (p, f, v) -> 9 columns, (f, v, f', v')
// -> 12 columns.
MatX correspondence_matrix(std::span<const Correspondence2D3D> corrs);
MatX correspondence_matrix(std::span<const Correspondence2D2D> corrs);

// Raw network output before head decoding.
VecX forward(const RegressorModel& model, const MatX& input);

InitialSolution regress_pose(const RegressorModel& model, const MatX& input);

class LearnedInitializer final : public Initializer {
 public:
  explicit LearnedInitializer(std::shared_ptr<const RegressorModel> model);

  InitialSolution initialize(std::span<const Correspondence2D3D> corrs,
                             std::uint64_t draw) const override;
  InitialSolution initialize(std::span<const Correspondence2D2D> corrs,
                             std::uint64_t draw) const override;

 private:
  std::shared_ptr<const RegressorModel> model_;
};

}  // namespace simhc
