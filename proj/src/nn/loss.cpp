#include "rfpresence/nn/loss.hpp"

#include <algorithm>
#include <cmath>

namespace rfpresence::nn {

Tensor Softmax(const Tensor &logits) {
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.PerSample();
  Tensor p(logits.shape);
  for (std::size_t s = 0; s < n; ++s) {
    const double *z = logits.data.data() + s * k;
    double *out = p.data.data() + s * k;
    const double zmax = *std::max_element(z, z + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      out[j] = std::exp(z[j] - zmax);
      sum += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) {
      out[j] /= sum;
    }
  }
  return p;
}

double CrossEntropy(const Tensor &probs, std::span<const std::uint8_t> labels) {
  const std::size_t n = probs.dim(0);
  const std::size_t k = probs.PerSample();
  double total = 0.0;
  for (std::size_t s = 0; s < n; ++s) {
    total -= std::log(probs.data[s * k + labels[s]]);
  }
  return total / static_cast<double>(n);
}

LossOutput SoftmaxCrossEntropy(const Tensor &logits, std::span<const std::uint8_t> labels) {
  LossOutput out;
  out.probs = Softmax(logits);
  out.loss = CrossEntropy(out.probs, labels);
  const std::size_t n = logits.dim(0);
  const std::size_t k = logits.PerSample();
  out.dlogits = out.probs;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t s = 0; s < n; ++s) {
    out.dlogits.data[s * k + labels[s]] -= 1.0;
    for (std::size_t j = 0; j < k; ++j) {
      out.dlogits.data[s * k + j] *= inv_n;
    }
  }
  return out;
}

double L2Penalty(std::span<Param *const> params, double lambda) {
  double sum = 0.0;
  for (const Param *p : params) {
    if (p->l2) {
      for (double w : p->value.data) {
        sum += w * w;
      }
    }
  }
  return lambda * sum;
}

void AddL2Gradient(std::span<Param *const> params, double lambda) {
  for (Param *p : params) {
    if (p->l2) {
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        p->grad.data[i] += 2.0 * lambda * p->value.data[i];
      }
    }
  }
}

} // namespace rfpresence::nn
