#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "rfpresence/core/result.hpp"
#include "rfpresence/nn/tensor.hpp"

namespace rfpresence::nn {

enum class Mode { kTrain, kInfer };

/// A layer caches what its backward pass needs during Forward. Backward must
/// follow the matching Forward; it accumulates into parameter gradients and
/// returns the gradient with respect to the layer input.
class Layer {
 public:
  virtual ~Layer() = default;
  [[nodiscard]] virtual std::string_view Kind() const = 0;
  virtual Result<Tensor> Forward(const Tensor &x, Mode mode) = 0;
  virtual Tensor Backward(const Tensor &dy) = 0;
  virtual std::vector<Param *> Params() { return {}; }
  /// Non-trainable persistent state (BN running statistics).
  virtual std::vector<Tensor *> State() { return {}; }
};

/// Valid cross-correlation. Input N x H x W x C_in, kernel C_out x kh x kw x C_in.
class Conv2d final : public Layer {
 public:
  Conv2d(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw);

  [[nodiscard]] std::string_view Kind() const override { return "conv2d"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  std::vector<Param *> Params() override { return {&kernel_, &bias_}; }

  /// The first layer of a branch never needs its input gradient.
  void set_need_input_grad(bool v) { need_input_grad_ = v; }
  Param &kernel() { return kernel_; }
  Param &bias() { return bias_; }

 private:
  void TransposeKernel();
  template <std::size_t kOut>
  void ConvForwardFixed(const Tensor &x, Tensor &y) const;
  void ConvForwardGeneric(const Tensor &x, Tensor &y) const;

  std::size_t c_in_, c_out_, kh_, kw_;
  Param kernel_;
  Param bias_;
  bool need_input_grad_{true};
  Tensor input_;
  std::vector<double> kt_;  // kh x kw x C_in x C_out
};

/// Non-overlapping mean pooling; trailing rows/cols that do not fill a window are dropped.
class AvgPool2d final : public Layer {
 public:
  AvgPool2d(std::size_t ph, std::size_t pw) : ph_(ph), pw_(pw) {}

  [[nodiscard]] std::string_view Kind() const override { return "avg_pool"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

 private:
  std::size_t ph_, pw_;
  std::vector<std::size_t> in_shape_;
};

/// Normalizes over every axis except the last (channels or neurons).
class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.9, double epsilon = 1e-5);

  [[nodiscard]] std::string_view Kind() const override { return "batch_norm"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  std::vector<Param *> Params() override { return {&gamma_, &beta_}; }
  std::vector<Tensor *> State() override { return {&running_mean_, &running_var_}; }

  Param &gamma() { return gamma_; }
  Param &beta() { return beta_; }
  Tensor &running_mean() { return running_mean_; }
  Tensor &running_var() { return running_var_; }

 private:
  std::size_t c_;
  double momentum_, epsilon_;
  Param gamma_;
  Param beta_;
  Tensor running_mean_;
  Tensor running_var_;
  // Backward cache.
  Mode last_mode_{Mode::kInfer};
  Tensor xhat_;
  std::vector<double> inv_std_;
};

class Relu final : public Layer {
 public:
  [[nodiscard]] std::string_view Kind() const override { return "relu"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

 private:
  Tensor output_;
};

/// Inverted dropout: kept activations are scaled by 1/(1-p) in train mode;
/// identity in infer mode.
class Dropout final : public Layer {
 public:
  Dropout(double p, std::uint64_t seed) : p_(p), rng_(seed) {}

  [[nodiscard]] std::string_view Kind() const override { return "dropout"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

  /// Disabled dropout is the identity in both modes.
  void set_enabled(bool v) { enabled_ = v; }
  /// A frozen mask is reused by subsequent train-mode passes of the same shape.
  void set_frozen(bool v) { frozen_ = v; }

 private:
  double p_;
  std::mt19937_64 rng_;
  bool enabled_{true};
  bool frozen_{false};
  std::vector<double> mask_;  // 0 or 1/(1-p); empty means identity
};

/// Fully connected. Input N x F_in (trailing dims are flattened), weight F_in x F_out.
class Dense final : public Layer {
 public:
  Dense(std::size_t in, std::size_t out);

  [[nodiscard]] std::string_view Kind() const override { return "dense"; }
  Result<Tensor> Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  std::vector<Param *> Params() override { return {&weight_, &bias_}; }

  Param &weight() { return weight_; }
  Param &bias() { return bias_; }

 private:
  std::size_t in_, out_;
  Param weight_;
  Param bias_;
  Tensor input_;
  std::vector<std::size_t> in_shape_;
};

/// Runs layers in order; Backward runs them in reverse.
class Sequential {
 public:
  void Add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  Result<Tensor> Forward(const Tensor &x, Mode mode);
  Tensor Backward(const Tensor &dy);
  std::vector<Param *> Params();
  std::vector<Tensor *> State();
  [[nodiscard]] const std::vector<std::unique_ptr<Layer>> &layers() const { return layers_; }
  std::vector<std::unique_ptr<Layer>> &layers() { return layers_; }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

} // namespace rfpresence::nn
