#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rfpresence/nn/tensor.hpp"

namespace rfpresence::nn {

struct AdamConfig {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double epsilon{1e-8};
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t{0};
};

/// One bias-corrected Adam update of theta in place. An empty state is
/// zero-initialized to theta's size.
void AdamStep(std::span<double> theta, std::span<const double> grad, AdamState &state, const AdamConfig &config);

/// Adam over a fixed parameter list; the step counter is shared.
class AdamOptimizer {
 public:
  AdamOptimizer(std::vector<Param *> params, AdamConfig config);

  void Step();
  void ZeroGrad();
  [[nodiscard]] std::uint64_t steps() const { return steps_; }

 private:
  std::vector<Param *> params_;
  AdamConfig config_;
  std::vector<AdamState> states_;
  std::uint64_t steps_{0};
};

} // namespace rfpresence::nn
