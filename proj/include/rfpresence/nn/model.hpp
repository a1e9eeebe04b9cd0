#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfpresence/core/kv_config.hpp"
#include "rfpresence/core/result.hpp"
#include "rfpresence/core/variant.hpp"
#include "rfpresence/nn/layers.hpp"
#include "rfpresence/nn/tensor.hpp"

namespace rfpresence::nn {

/// Conv(out_channels, kernel_h x kernel_w, valid) -> BN -> ReLU -> AvgPool(pool_h, pool_w).
struct ConvBlockSpec {
  std::size_t out_channels{8};
  std::size_t kernel_h{3};
  std::size_t kernel_w{3};
  std::size_t pool_h{2};
  std::size_t pool_w{1};

  bool operator==(const ConvBlockSpec &) const = default;
};

struct BranchSpec {
  std::array<std::size_t, 3> input{};  // H, W, C
  std::vector<ConvBlockSpec> blocks;

  /// H, W, C after every block, or an error if a spatial dim stops being positive.
  [[nodiscard]] Result<std::array<std::size_t, 3>> OutputShape() const;
  bool operator==(const BranchSpec &) const = default;
};

/// Branches are flattened and concatenated, then FC(hidden) -> BN -> ReLU ->
/// Dropout -> FC(outputs) -> softmax.
struct ModelSpec {
  Variant variant{Variant::kWithDft};
  std::vector<BranchSpec> branches;
  std::size_t hidden{64};
  double dropout{0.5};
  std::size_t outputs{2};
  double bn_momentum{0.9};
  double bn_epsilon{1e-5};

  /// Reference architecture for a variant given its input image shapes (branch order).
  static Result<ModelSpec> ForVariant(Variant variant, std::span<const std::array<std::size_t, 3>> input_shapes);

  [[nodiscard]] Status Validate() const;
  /// Flattened feature count entering the head.
  [[nodiscard]] Result<std::size_t> ConcatFeatures() const;

  void WriteTo(KeyValueConfig &kv) const;
  static Result<ModelSpec> ReadFrom(const KeyValueConfig &kv);

  bool operator==(const ModelSpec &) const = default;
};

std::size_t ConvParamCount(std::size_t kh, std::size_t kw, std::size_t c_in, std::size_t c_out);
std::size_t DenseParamCount(std::size_t in, std::size_t out);
std::size_t BatchNormParamCount(std::size_t channels);

/// Trainable scalars (kernels, biases, BN gamma/beta, FC weights/biases).
/// Running statistics are excluded. Requires a valid spec.
std::size_t CountParams(const ModelSpec &spec);

class Model {
 public:
  static Result<Model> Create(const ModelSpec &spec, std::uint64_t seed);

  [[nodiscard]] const ModelSpec &spec() const { return spec_; }
  [[nodiscard]] std::uint64_t seed() const { return seed_; }

  /// inputs[b] is N x H x W x C for branch b. Returns N x outputs logits.
  Result<Tensor> Logits(std::span<const Tensor> inputs, Mode mode);
  /// Infer-mode softmax probabilities.
  Result<Tensor> Predict(std::span<const Tensor> inputs);
  /// Backpropagates from dlogits of the last Logits call; accumulates gradients.
  void Backward(const Tensor &dlogits);

  std::vector<Param *> Params();
  /// Every persisted tensor (parameters and running statistics) in declaration order.
  std::vector<std::pair<std::string, Tensor *>> NamedTensors();

  void ZeroGrad();
  void SetDropoutEnabled(bool enabled);
  void FreezeDropoutMask(bool frozen);
  /// Rounds every persisted tensor to f32 precision, so the in-memory model
  /// equals one loaded back from disk.
  void QuantizeToFloat();

  std::vector<Sequential> &branches() { return branches_; }
  Sequential &head() { return head_; }

 private:
  ModelSpec spec_;
  std::uint64_t seed_{0};
  std::vector<Sequential> branches_;
  Sequential head_;
  std::vector<std::vector<std::size_t>> branch_out_shapes_;
};

} // namespace rfpresence::nn
