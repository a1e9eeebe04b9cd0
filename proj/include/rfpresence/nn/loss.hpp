#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rfpresence/nn/tensor.hpp"

namespace rfpresence::nn {

/// Row-wise softmax of an N x K tensor (max-shifted for stability).
Tensor Softmax(const Tensor &logits);

/// Mean over the batch of -log p[label].
double CrossEntropy(const Tensor &probs, std::span<const std::uint8_t> labels);

struct LossOutput {
  double loss{0.0};
  Tensor probs;
  Tensor dlogits;  // gradient of the mean loss
};

/// Softmax followed by cross-entropy, with the fused gradient (p - onehot) / N.
LossOutput SoftmaxCrossEntropy(const Tensor &logits, std::span<const std::uint8_t> labels);

/// lambda * sum w^2 over parameters flagged for the penalty.
double L2Penalty(std::span<Param *const> params, double lambda);
/// Adds 2 * lambda * w to the gradients of flagged parameters.
void AddL2Gradient(std::span<Param *const> params, double lambda);

} // namespace rfpresence::nn
