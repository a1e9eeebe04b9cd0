#include "rfpresence/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace rfpresence::nn {

std::string ShapeString(const std::vector<std::size_t> &shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << (i ? "x" : "") << shape[i];
  }
  return os.str();
}

// ---- Conv2d ------------------------------------------------------------------

Conv2d::Conv2d(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw)
    : c_in_(c_in), c_out_(c_out), kh_(kh), kw_(kw) {
  kernel_.name = "kernel";
  kernel_.value = Tensor({c_out, kh, kw, c_in});
  kernel_.grad = Tensor(kernel_.value.shape);
  bias_.name = "bias";
  bias_.value = Tensor({c_out});
  bias_.grad = Tensor({c_out});
}

void Conv2d::TransposeKernel() {
  kt_.resize(kernel_.value.size());
  const double *k = kernel_.value.data.data();
  const std::size_t taps = kh_ * kw_ * c_in_;
  for (std::size_t co = 0; co < c_out_; ++co) {
    for (std::size_t t = 0; t < taps; ++t) {
      kt_[t * c_out_ + co] = k[co * taps + t];
    }
  }
}

namespace {

// Four doubles; lowered to two SSE ops when AVX is unavailable.
using V4 = double __attribute__((vector_size(32), aligned(8)));

inline V4 Load4(const double *p) {
  V4 v;
  __builtin_memcpy(&v, p, sizeof v);
  return v;
}

inline void Store4(double *p, V4 v) { __builtin_memcpy(p, &v, sizeof v); }

// Accumulates kPos adjacent output positions of one output row; inputs of
// neighbouring positions are c_in apart.
template <std::size_t kOut, std::size_t kPos>
inline void ConvBlock(const double *x_row0, std::size_t row_stride, std::size_t kh, std::size_t row_taps,
                      std::size_t c_in, const double *kt, const double *bias, double *out) {
  constexpr std::size_t kVec = kOut / 4;
  V4 acc[kPos][kVec];
  for (std::size_t p = 0; p < kPos; ++p) {
    for (std::size_t v = 0; v < kVec; ++v) {
      acc[p][v] = Load4(bias + 4 * v);
    }
  }
  for (std::size_t dy = 0; dy < kh; ++dy) {
    const double *xp = x_row0 + dy * row_stride;
    const double *kp = kt + dy * row_taps * kOut;
    for (std::size_t t = 0; t < row_taps; ++t) {
      V4 k[kVec];
      for (std::size_t v = 0; v < kVec; ++v) {
        k[v] = Load4(kp + t * kOut + 4 * v);
      }
      for (std::size_t p = 0; p < kPos; ++p) {
        const double xv = xp[p * c_in + t];
        for (std::size_t v = 0; v < kVec; ++v) {
          acc[p][v] += xv * k[v];
        }
      }
    }
  }
  for (std::size_t p = 0; p < kPos; ++p) {
    for (std::size_t v = 0; v < kVec; ++v) {
      Store4(out + p * kOut + 4 * v, acc[p][v]);
    }
  }
}

} // namespace

template <std::size_t kOut>
void Conv2d::ConvForwardFixed(const Tensor &x, Tensor &y) const {
  constexpr std::size_t kPos = kOut == 8 ? 4 : 2;
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = y.dim(1), ow = y.dim(2);
  const double *b = bias_.value.data.data();
  const std::size_t row_taps = kw_ * c_in_;
  const std::size_t row_stride = w * c_in_;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const double *x_row = x.data.data() + (s * h + oy) * row_stride;
      double *y_row = y.data.data() + (s * oh + oy) * ow * kOut;
      std::size_t ox = 0;
      for (; ox + kPos <= ow; ox += kPos) {
        ConvBlock<kOut, kPos>(x_row + ox * c_in_, row_stride, kh_, row_taps, c_in_, kt_.data(), b, y_row + ox * kOut);
      }
      for (; ox < ow; ++ox) {
        ConvBlock<kOut, 1>(x_row + ox * c_in_, row_stride, kh_, row_taps, c_in_, kt_.data(), b, y_row + ox * kOut);
      }
    }
  }
}

void Conv2d::ConvForwardGeneric(const Tensor &x, Tensor &y) const {
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
  const std::size_t oh = y.dim(1), ow = y.dim(2);
  const double *b = bias_.value.data.data();
  const std::size_t row_taps = kw_ * c_in_;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double *acc = y.data.data() + ((s * oh + oy) * ow + ox) * c_out_;
        std::copy(b, b + c_out_, acc);
        for (std::size_t dy = 0; dy < kh_; ++dy) {
          const double *xp = x.data.data() + ((s * h + oy + dy) * w + ox) * c_in_;
          const double *kp = kt_.data() + dy * row_taps * c_out_;
          for (std::size_t t = 0; t < row_taps; ++t) {
            const double xv = xp[t];
            const double *kr = kp + t * c_out_;
            for (std::size_t co = 0; co < c_out_; ++co) {
              acc[co] += xv * kr[co];
            }
          }
        }
      }
    }
  }
}

Result<Tensor> Conv2d::Forward(const Tensor &x, Mode /*mode*/) {
  if (x.rank() != 4 || x.dim(3) != c_in_) {
    return MakeError(ErrorCode::kShapeMismatch,
                     "conv2d expects N x H x W x " + std::to_string(c_in_) + ", got " + ShapeString(x.shape));
  }
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (kh_ > h || kw_ > w) {
    return MakeError(ErrorCode::kKernelLargerThanInput, "kernel " + std::to_string(kh_) + "x" +
                                                            std::to_string(kw_) + " exceeds input " +
                                                            std::to_string(h) + "x" + std::to_string(w));
  }
  const std::size_t oh = h - kh_ + 1, ow = w - kw_ + 1;
  TransposeKernel();
  Tensor y({n, oh, ow, c_out_});
  switch (c_out_) {
  case 8: ConvForwardFixed<8>(x, y); break;
  case 16: ConvForwardFixed<16>(x, y); break;
  default: ConvForwardGeneric(x, y); break;
  }
  input_ = x;
  return y;
}

Tensor Conv2d::Backward(const Tensor &dy_t) {
  const std::size_t n = input_.dim(0), h = input_.dim(1), w = input_.dim(2);
  const std::size_t oh = dy_t.dim(1), ow = dy_t.dim(2);
  Tensor dx;
  if (need_input_grad_) {
    dx = Tensor(input_.shape);
  }
  std::vector<double> dkt(kt_.size(), 0.0);
  double *db = bias_.grad.data.data();
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double *g = dy_t.data.data() + ((s * oh + oy) * ow + ox) * c_out_;
        for (std::size_t co = 0; co < c_out_; ++co) {
          db[co] += g[co];
        }
        for (std::size_t dy = 0; dy < kh_; ++dy) {
          for (std::size_t dx_i = 0; dx_i < kw_; ++dx_i) {
            const std::size_t in_off = ((s * h + oy + dy) * w + ox + dx_i) * c_in_;
            const double *xp = input_.data.data() + in_off;
            const std::size_t k_off = (dy * kw_ + dx_i) * c_in_ * c_out_;
            double *dkp = dkt.data() + k_off;
            for (std::size_t ci = 0; ci < c_in_; ++ci) {
              const double xv = xp[ci];
              double *dkr = dkp + ci * c_out_;
              for (std::size_t co = 0; co < c_out_; ++co) {
                dkr[co] += xv * g[co];
              }
            }
            if (need_input_grad_) {
              const double *kp = kt_.data() + k_off;
              double *dxp = dx.data.data() + in_off;
              for (std::size_t ci = 0; ci < c_in_; ++ci) {
                const double *kr = kp + ci * c_out_;
                double sum = 0.0;
                for (std::size_t co = 0; co < c_out_; ++co) {
                  sum += kr[co] * g[co];
                }
                dxp[ci] += sum;
              }
            }
          }
        }
      }
    }
  }
  const std::size_t taps = kh_ * kw_ * c_in_;
  double *dk = kernel_.grad.data.data();
  for (std::size_t co = 0; co < c_out_; ++co) {
    for (std::size_t t = 0; t < taps; ++t) {
      dk[co * taps + t] += dkt[t * c_out_ + co];
    }
  }
  return dx;
}

// ---- AvgPool2d -----------------------------------------------------------------

Result<Tensor> AvgPool2d::Forward(const Tensor &x, Mode /*mode*/) {
  if (x.rank() != 4) {
    return MakeError(ErrorCode::kShapeMismatch, "avg_pool expects N x H x W x C, got " + ShapeString(x.shape));
  }
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), c = x.dim(3);
  if (ph_ == 0 || pw_ == 0 || ph_ > h || pw_ > w) {
    return MakeError(ErrorCode::kPoolLargerThanInput, "pool " + std::to_string(ph_) + "x" + std::to_string(pw_) +
                                                          " does not fit input " + std::to_string(h) + "x" +
                                                          std::to_string(w));
  }
  const std::size_t oh = h / ph_, ow = w / pw_;
  const double scale = 1.0 / static_cast<double>(ph_ * pw_);
  Tensor y({n, oh, ow, c});
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double *out = y.data.data() + ((s * oh + oy) * ow + ox) * c;
        for (std::size_t py = 0; py < ph_; ++py) {
          for (std::size_t px = 0; px < pw_; ++px) {
            const double *in = x.data.data() + ((s * h + oy * ph_ + py) * w + ox * pw_ + px) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
              out[ch] += in[ch];
            }
          }
        }
        for (std::size_t ch = 0; ch < c; ++ch) {
          out[ch] *= scale;
        }
      }
    }
  }
  in_shape_ = x.shape;
  return y;
}

Tensor AvgPool2d::Backward(const Tensor &dy) {
  const std::size_t n = in_shape_[0], h = in_shape_[1], w = in_shape_[2], c = in_shape_[3];
  const std::size_t oh = dy.dim(1), ow = dy.dim(2);
  const double scale = 1.0 / static_cast<double>(ph_ * pw_);
  Tensor dx(in_shape_);
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double *g = dy.data.data() + ((s * oh + oy) * ow + ox) * c;
        for (std::size_t py = 0; py < ph_; ++py) {
          for (std::size_t px = 0; px < pw_; ++px) {
            double *d = dx.data.data() + ((s * h + oy * ph_ + py) * w + ox * pw_ + px) * c;
            for (std::size_t ch = 0; ch < c; ++ch) {
              d[ch] = g[ch] * scale;
            }
          }
        }
      }
    }
  }
  return dx;
}

// ---- BatchNorm ------------------------------------------------------------------

BatchNorm::BatchNorm(std::size_t channels, double momentum, double epsilon)
    : c_(channels), momentum_(momentum), epsilon_(epsilon) {
  gamma_.name = "gamma";
  gamma_.value = Tensor({channels}, 1.0);
  gamma_.grad = Tensor({channels});
  beta_.name = "beta";
  beta_.value = Tensor({channels});
  beta_.grad = Tensor({channels});
  running_mean_ = Tensor({channels});
  running_var_ = Tensor({channels}, 1.0);
}

Result<Tensor> BatchNorm::Forward(const Tensor &x, Mode mode) {
  if (x.rank() < 2 || x.shape.back() != c_) {
    return MakeError(ErrorCode::kShapeMismatch,
                     "batch_norm expects trailing dim " + std::to_string(c_) + ", got " + ShapeString(x.shape));
  }
  if (mode == Mode::kTrain && x.dim(0) < 2) {
    return MakeError(ErrorCode::kDegenerateBatch, "train-mode batch norm needs at least two samples");
  }
  const std::size_t m = x.size() / c_;
  std::vector<double> mean(c_, 0.0);
  std::vector<double> var(c_, 0.0);
  if (mode == Mode::kTrain) {
    for (std::size_t r = 0; r < m; ++r) {
      const double *row = x.data.data() + r * c_;
      for (std::size_t ch = 0; ch < c_; ++ch) {
        mean[ch] += row[ch];
      }
    }
    for (auto &v : mean) {
      v /= static_cast<double>(m);
    }
    for (std::size_t r = 0; r < m; ++r) {
      const double *row = x.data.data() + r * c_;
      for (std::size_t ch = 0; ch < c_; ++ch) {
        const double d = row[ch] - mean[ch];
        var[ch] += d * d;
      }
    }
    for (auto &v : var) {
      v /= static_cast<double>(m);
    }
    for (std::size_t ch = 0; ch < c_; ++ch) {
      running_mean_.data[ch] = momentum_ * running_mean_.data[ch] + (1.0 - momentum_) * mean[ch];
      running_var_.data[ch] = momentum_ * running_var_.data[ch] + (1.0 - momentum_) * var[ch];
    }
  } else {
    mean = running_mean_.data;
    var = running_var_.data;
  }
  inv_std_.assign(c_, 0.0);
  for (std::size_t ch = 0; ch < c_; ++ch) {
    inv_std_[ch] = 1.0 / std::sqrt(var[ch] + epsilon_);
  }
  xhat_ = Tensor(x.shape);
  Tensor y(x.shape);
  const double *g = gamma_.value.data.data();
  const double *b = beta_.value.data.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double *in = x.data.data() + r * c_;
    double *xh = xhat_.data.data() + r * c_;
    double *out = y.data.data() + r * c_;
    for (std::size_t ch = 0; ch < c_; ++ch) {
      xh[ch] = (in[ch] - mean[ch]) * inv_std_[ch];
      out[ch] = g[ch] * xh[ch] + b[ch];
    }
  }
  last_mode_ = mode;
  return y;
}

Tensor BatchNorm::Backward(const Tensor &dy) {
  const std::size_t m = dy.size() / c_;
  std::vector<double> sum_dy(c_, 0.0);
  std::vector<double> sum_dy_xhat(c_, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const double *g = dy.data.data() + r * c_;
    const double *xh = xhat_.data.data() + r * c_;
    for (std::size_t ch = 0; ch < c_; ++ch) {
      sum_dy[ch] += g[ch];
      sum_dy_xhat[ch] += g[ch] * xh[ch];
    }
  }
  for (std::size_t ch = 0; ch < c_; ++ch) {
    gamma_.grad.data[ch] += sum_dy_xhat[ch];
    beta_.grad.data[ch] += sum_dy[ch];
  }
  Tensor dx(dy.shape);
  const double *gam = gamma_.value.data.data();
  const double inv_m = 1.0 / static_cast<double>(m);
  for (std::size_t r = 0; r < m; ++r) {
    const double *g = dy.data.data() + r * c_;
    const double *xh = xhat_.data.data() + r * c_;
    double *d = dx.data.data() + r * c_;
    for (std::size_t ch = 0; ch < c_; ++ch) {
      const double k = gam[ch] * inv_std_[ch];
      if (last_mode_ == Mode::kTrain) {
        d[ch] = k * (g[ch] - inv_m * sum_dy[ch] - xh[ch] * inv_m * sum_dy_xhat[ch]);
      } else {
        d[ch] = k * g[ch];
      }
    }
  }
  return dx;
}

// ---- Relu ------------------------------------------------------------------------

Result<Tensor> Relu::Forward(const Tensor &x, Mode /*mode*/) {
  output_ = x;
  for (auto &v : output_.data) {
    v = v > 0.0 ? v : 0.0;
  }
  return output_;
}

Tensor Relu::Backward(const Tensor &dy) {
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    dx.data[i] = output_.data[i] > 0.0 ? dy.data[i] : 0.0;
  }
  return dx;
}

// ---- Dropout -----------------------------------------------------------------------

Result<Tensor> Dropout::Forward(const Tensor &x, Mode mode) {
  if (mode == Mode::kInfer || !enabled_ || p_ <= 0.0) {
    mask_.clear();
    return x;
  }
  if (!(frozen_ && mask_.size() == x.size())) {
    mask_.resize(x.size());
    const double keep_scale = 1.0 / (1.0 - p_);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto &m : mask_) {
      m = u(rng_) >= p_ ? keep_scale : 0.0;
    }
  }
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.data[i] = x.data[i] * mask_[i];
  }
  return y;
}

Tensor Dropout::Backward(const Tensor &dy) {
  if (mask_.empty()) {
    return dy;
  }
  Tensor dx(dy.shape);
  for (std::size_t i = 0; i < dy.size(); ++i) {
    dx.data[i] = dy.data[i] * mask_[i];
  }
  return dx;
}

// ---- Dense ----------------------------------------------------------------------------

Dense::Dense(std::size_t in, std::size_t out) : in_(in), out_(out) {
  weight_.name = "weight";
  weight_.value = Tensor({in, out});
  weight_.grad = Tensor({in, out});
  weight_.l2 = true;
  bias_.name = "bias";
  bias_.value = Tensor({out});
  bias_.grad = Tensor({out});
}

Result<Tensor> Dense::Forward(const Tensor &x, Mode /*mode*/) {
  if (x.rank() < 2 || x.PerSample() != in_) {
    return MakeError(ErrorCode::kShapeMismatch,
                     "dense expects " + std::to_string(in_) + " features, got " + ShapeString(x.shape));
  }
  const std::size_t n = x.dim(0);
  Tensor y({n, out_});
  const double *w = weight_.value.data.data();
  for (std::size_t s = 0; s < n; ++s) {
    const double *in = x.data.data() + s * in_;
    double *out = y.data.data() + s * out_;
    std::copy(bias_.value.data.begin(), bias_.value.data.end(), out);
    for (std::size_t i = 0; i < in_; ++i) {
      const double xv = in[i];
      const double *wr = w + i * out_;
      for (std::size_t o = 0; o < out_; ++o) {
        out[o] += xv * wr[o];
      }
    }
  }
  in_shape_ = x.shape;
  input_ = x;
  return y;
}

Tensor Dense::Backward(const Tensor &dy) {
  const std::size_t n = dy.dim(0);
  Tensor dx(in_shape_);
  const double *w = weight_.value.data.data();
  double *dw = weight_.grad.data.data();
  for (std::size_t s = 0; s < n; ++s) {
    const double *g = dy.data.data() + s * out_;
    const double *in = input_.data.data() + s * in_;
    double *d = dx.data.data() + s * in_;
    for (std::size_t o = 0; o < out_; ++o) {
      bias_.grad.data[o] += g[o];
    }
    for (std::size_t i = 0; i < in_; ++i) {
      const double *wr = w + i * out_;
      double *dwr = dw + i * out_;
      const double xv = in[i];
      double sum = 0.0;
      for (std::size_t o = 0; o < out_; ++o) {
        sum += wr[o] * g[o];
        dwr[o] += xv * g[o];
      }
      d[i] = sum;
    }
  }
  return dx;
}

// ---- Sequential -------------------------------------------------------------------------

Result<Tensor> Sequential::Forward(const Tensor &x, Mode mode) {
  Tensor cur = x;
  for (auto &layer : layers_) {
    auto next = layer->Forward(cur, mode);
    if (!next.ok()) {
      return next.error();
    }
    cur = std::move(next).value();
  }
  return cur;
}

Tensor Sequential::Backward(const Tensor &dy) {
  Tensor cur = dy;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    cur = (*it)->Backward(cur);
  }
  return cur;
}

std::vector<Param *> Sequential::Params() {
  std::vector<Param *> out;
  for (auto &layer : layers_) {
    for (Param *p : layer->Params()) {
      out.push_back(p);
    }
  }
  return out;
}

std::vector<Tensor *> Sequential::State() {
  std::vector<Tensor *> out;
  for (auto &layer : layers_) {
    for (Tensor *t : layer->State()) {
      out.push_back(t);
    }
  }
  return out;
}

} // namespace rfpresence::nn
