#include "rfpresence/nn/adam.hpp"

#include <cmath>

namespace rfpresence::nn {

void AdamStep(std::span<double> theta, std::span<const double> grad, AdamState &state, const AdamConfig &config) {
  if (state.m.size() != theta.size()) {
    state.m.assign(theta.size(), 0.0);
    state.v.assign(theta.size(), 0.0);
    state.t = 0;
  }
  ++state.t;
  const double t = static_cast<double>(state.t);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double g = grad[i];
    state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
    state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    theta[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

AdamOptimizer::AdamOptimizer(std::vector<Param *> params, AdamConfig config)
    : params_(std::move(params)), config_(config), states_(params_.size()) {}

void AdamOptimizer::Step() {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    AdamStep(params_[i]->value.data, params_[i]->grad.data, states_[i], config_);
  }
  ++steps_;
}

void AdamOptimizer::ZeroGrad() {
  for (Param *p : params_) {
    p->grad.Fill(0.0);
  }
}

} // namespace rfpresence::nn
