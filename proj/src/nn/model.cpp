#include "rfpresence/nn/model.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "rfpresence/core/random.hpp"
#include "rfpresence/nn/loss.hpp"

namespace rfpresence::nn {

namespace {

std::vector<ConvBlockSpec> DftBlocks() { return {{8, 3, 3, 2, 1}, {16, 3, 3, 3, 1}}; }
std::vector<ConvBlockSpec> NoDftBlocks() { return {{8, 5, 3, 4, 1}, {16, 3, 3, 4, 1}}; }

void InitUniform(Param &p, std::size_t fan_in, std::mt19937_64 &rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (auto &w : p.value.data) {
    w = u(rng);
  }
}

std::string JoinSizes(std::span<const std::size_t> v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    os << (i ? " " : "") << v[i];
  }
  return os.str();
}

Result<std::vector<std::size_t>> ParseSizes(const std::string &text, std::size_t expected, const std::string &key) {
  std::istringstream is(text);
  std::vector<std::size_t> out;
  long long v = 0;
  while (is >> v) {
    if (v <= 0) {
      return MakeError(ErrorCode::kParseError, "'" + key + "' needs positive integers");
    }
    out.push_back(static_cast<std::size_t>(v));
  }
  if (!is.eof() || out.size() != expected) {
    return MakeError(ErrorCode::kParseError,
                     "'" + key + "' needs " + std::to_string(expected) + " positive integers, got '" + text + "'");
  }
  return out;
}

} // namespace

Result<std::array<std::size_t, 3>> BranchSpec::OutputShape() const {
  std::size_t h = input[0], w = input[1], c = input[2];
  if (h == 0 || w == 0 || c == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "branch input dims must be positive");
  }
  for (const auto &b : blocks) {
    if (b.kernel_h > h || b.kernel_w > w || b.kernel_h == 0 || b.kernel_w == 0) {
      return MakeError(ErrorCode::kKernelLargerThanInput, "kernel does not fit " + std::to_string(h) + "x" +
                                                              std::to_string(w));
    }
    h = h - b.kernel_h + 1;
    w = w - b.kernel_w + 1;
    if (b.pool_h == 0 || b.pool_w == 0 || b.pool_h > h || b.pool_w > w) {
      return MakeError(ErrorCode::kPoolLargerThanInput, "pool does not fit " + std::to_string(h) + "x" +
                                                            std::to_string(w));
    }
    h /= b.pool_h;
    w /= b.pool_w;
    c = b.out_channels;
    if (c == 0) {
      return MakeError(ErrorCode::kInvalidArgument, "conv output channels must be positive");
    }
  }
  return std::array<std::size_t, 3>{h, w, c};
}

Result<ModelSpec> ModelSpec::ForVariant(Variant variant, std::span<const std::array<std::size_t, 3>> input_shapes) {
  const std::size_t expected = IsParallel(variant) ? 2 : 1;
  if (input_shapes.size() != expected) {
    return MakeError(ErrorCode::kShapeMismatch, std::string(VariantName(variant)) + " takes " +
                                                    std::to_string(expected) + " input image(s)");
  }
  ModelSpec spec;
  spec.variant = variant;
  for (const auto &shape : input_shapes) {
    spec.branches.push_back({shape, UsesDft(variant) ? DftBlocks() : NoDftBlocks()});
  }
  if (auto st = spec.Validate(); !st.ok()) {
    return st.error();
  }
  return spec;
}

Status ModelSpec::Validate() const {
  if (branches.empty()) {
    return MakeError(ErrorCode::kInvalidArgument, "model needs at least one branch");
  }
  if (outputs != 2) {
    return MakeError(ErrorCode::kInvalidArgument, "output layer width must be 2");
  }
  if (hidden == 0) {
    return MakeError(ErrorCode::kInvalidArgument, "hidden width must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "dropout must lie in [0, 1)");
  }
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0) || !(bn_epsilon > 0.0)) {
    return MakeError(ErrorCode::kInvalidArgument, "invalid batch-norm constants");
  }
  for (const auto &b : branches) {
    if (auto out = b.OutputShape(); !out.ok()) {
      return out.error();
    }
  }
  return {};
}

Result<std::size_t> ModelSpec::ConcatFeatures() const {
  std::size_t total = 0;
  for (const auto &b : branches) {
    auto out = b.OutputShape();
    if (!out.ok()) {
      return out.error();
    }
    total += (*out)[0] * (*out)[1] * (*out)[2];
  }
  return total;
}

void ModelSpec::WriteTo(KeyValueConfig &kv) const {
  kv.Set("variant", std::string(VariantName(variant)));
  kv.Set("hidden", std::to_string(hidden));
  std::ostringstream d;
  d.precision(17);
  d << dropout;
  kv.Set("dropout", d.str());
  kv.Set("outputs", std::to_string(outputs));
  std::ostringstream m;
  m.precision(17);
  m << bn_momentum;
  kv.Set("bn_momentum", m.str());
  std::ostringstream e;
  e.precision(17);
  e << bn_epsilon;
  kv.Set("bn_epsilon", e.str());
  kv.Set("branches", std::to_string(branches.size()));
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const std::string prefix = "branch" + std::to_string(i);
    kv.Set(prefix + ".input", JoinSizes(branches[i].input));
    for (const auto &b : branches[i].blocks) {
      const std::array<std::size_t, 5> v{b.out_channels, b.kernel_h, b.kernel_w, b.pool_h, b.pool_w};
      kv.Add(prefix + ".block", JoinSizes(v));
    }
  }
}

Result<ModelSpec> ModelSpec::ReadFrom(const KeyValueConfig &kv) {
  ModelSpec spec;
  const auto variant = ParseVariant(kv.GetString("variant", ""));
  if (!variant) {
    return MakeError(ErrorCode::kParseError, "model spec has an unknown variant");
  }
  spec.variant = *variant;
  auto hidden = kv.GetInt("hidden", 64);
  auto outputs = kv.GetInt("outputs", 2);
  auto dropout = kv.GetDouble("dropout", 0.5);
  auto momentum = kv.GetDouble("bn_momentum", 0.9);
  auto epsilon = kv.GetDouble("bn_epsilon", 1e-5);
  auto count = kv.GetInt("branches", 0);
  for (const Error *err : {hidden.ok() ? nullptr : &hidden.error(), outputs.ok() ? nullptr : &outputs.error(),
                           dropout.ok() ? nullptr : &dropout.error(), momentum.ok() ? nullptr : &momentum.error(),
                           epsilon.ok() ? nullptr : &epsilon.error(), count.ok() ? nullptr : &count.error()}) {
    if (err != nullptr) {
      return *err;
    }
  }
  if (*hidden <= 0 || *outputs <= 0 || *count <= 0) {
    return MakeError(ErrorCode::kParseError, "model spec sizes must be positive");
  }
  spec.hidden = static_cast<std::size_t>(*hidden);
  spec.outputs = static_cast<std::size_t>(*outputs);
  spec.dropout = *dropout;
  spec.bn_momentum = *momentum;
  spec.bn_epsilon = *epsilon;
  for (long long i = 0; i < *count; ++i) {
    const std::string prefix = "branch" + std::to_string(i);
    BranchSpec b;
    auto input = ParseSizes(kv.GetString(prefix + ".input", ""), 3, prefix + ".input");
    if (!input.ok()) {
      return input.error();
    }
    b.input = {(*input)[0], (*input)[1], (*input)[2]};
    for (const auto &text : kv.GetAll(prefix + ".block")) {
      auto v = ParseSizes(text, 5, prefix + ".block");
      if (!v.ok()) {
        return v.error();
      }
      b.blocks.push_back({(*v)[0], (*v)[1], (*v)[2], (*v)[3], (*v)[4]});
    }
    spec.branches.push_back(std::move(b));
  }
  if (auto st = spec.Validate(); !st.ok()) {
    return st.error();
  }
  return spec;
}

std::size_t ConvParamCount(std::size_t kh, std::size_t kw, std::size_t c_in, std::size_t c_out) {
  return kh * kw * c_in * c_out + c_out;
}
std::size_t DenseParamCount(std::size_t in, std::size_t out) { return in * out + out; }
std::size_t BatchNormParamCount(std::size_t channels) { return 2 * channels; }

std::size_t CountParams(const ModelSpec &spec) {
  std::size_t total = 0;
  for (const auto &b : spec.branches) {
    std::size_t c = b.input[2];
    for (const auto &blk : b.blocks) {
      total += ConvParamCount(blk.kernel_h, blk.kernel_w, c, blk.out_channels);
      total += BatchNormParamCount(blk.out_channels);
      c = blk.out_channels;
    }
  }
  const std::size_t features = spec.ConcatFeatures().value();
  total += DenseParamCount(features, spec.hidden);
  total += BatchNormParamCount(spec.hidden);
  total += DenseParamCount(spec.hidden, spec.outputs);
  return total;
}

Result<Model> Model::Create(const ModelSpec &spec, std::uint64_t seed) {
  if (auto st = spec.Validate(); !st.ok()) {
    return st.error();
  }
  Model model;
  model.spec_ = spec;
  model.seed_ = seed;
  std::mt19937_64 rng(DeriveSeed(seed, 1));
  for (const auto &b : spec.branches) {
    Sequential seq;
    std::size_t c = b.input[2];
    for (std::size_t i = 0; i < b.blocks.size(); ++i) {
      const auto &blk = b.blocks[i];
      auto conv = std::make_unique<Conv2d>(c, blk.out_channels, blk.kernel_h, blk.kernel_w);
      InitUniform(conv->kernel(), blk.kernel_h * blk.kernel_w * c, rng);
      conv->set_need_input_grad(i != 0);
      seq.Add(std::move(conv));
      seq.Add(std::make_unique<BatchNorm>(blk.out_channels, spec.bn_momentum, spec.bn_epsilon));
      seq.Add(std::make_unique<Relu>());
      seq.Add(std::make_unique<AvgPool2d>(blk.pool_h, blk.pool_w));
      c = blk.out_channels;
    }
    auto out = b.OutputShape().value();
    model.branch_out_shapes_.push_back({out[0], out[1], out[2]});
    model.branches_.push_back(std::move(seq));
  }
  const std::size_t features = spec.ConcatFeatures().value();
  auto fc1 = std::make_unique<Dense>(features, spec.hidden);
  InitUniform(fc1->weight(), features, rng);
  model.head_.Add(std::move(fc1));
  model.head_.Add(std::make_unique<BatchNorm>(spec.hidden, spec.bn_momentum, spec.bn_epsilon));
  model.head_.Add(std::make_unique<Relu>());
  model.head_.Add(std::make_unique<Dropout>(spec.dropout, DeriveSeed(seed, 2)));
  auto fc2 = std::make_unique<Dense>(spec.hidden, spec.outputs);
  InitUniform(fc2->weight(), spec.hidden, rng);
  model.head_.Add(std::move(fc2));
  return model;
}

Result<Tensor> Model::Logits(std::span<const Tensor> inputs, Mode mode) {
  if (inputs.size() != branches_.size()) {
    return MakeError(ErrorCode::kShapeMismatch, "expected " + std::to_string(branches_.size()) + " input image(s), got " +
                                                    std::to_string(inputs.size()));
  }
  const std::size_t n = inputs.empty() ? 0 : inputs[0].shape.empty() ? 0 : inputs[0].dim(0);
  if (n == 0) {
    return MakeError(ErrorCode::kShapeMismatch, "empty input batch");
  }
  std::vector<Tensor> outs;
  std::size_t features = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const auto &want = spec_.branches[b].input;
    const std::vector<std::size_t> shape{n, want[0], want[1], want[2]};
    if (inputs[b].shape != shape) {
      return MakeError(ErrorCode::kShapeMismatch, "branch " + std::to_string(b) + " expects " + ShapeString(shape) +
                                                      ", got " + ShapeString(inputs[b].shape));
    }
    auto y = branches_[b].Forward(inputs[b], mode);
    if (!y.ok()) {
      return y.error();
    }
    features += y->PerSample();
    outs.push_back(std::move(y).value());
  }
  Tensor concat({n, features});
  std::size_t offset = 0;
  for (const auto &o : outs) {
    const std::size_t f = o.PerSample();
    for (std::size_t s = 0; s < n; ++s) {
      std::copy(o.data.begin() + static_cast<std::ptrdiff_t>(s * f),
                o.data.begin() + static_cast<std::ptrdiff_t>((s + 1) * f),
                concat.data.begin() + static_cast<std::ptrdiff_t>(s * features + offset));
    }
    offset += f;
  }
  return head_.Forward(concat, mode);
}

Result<Tensor> Model::Predict(std::span<const Tensor> inputs) {
  auto logits = Logits(inputs, Mode::kInfer);
  if (!logits.ok()) {
    return logits.error();
  }
  return Softmax(logits.value());
}

void Model::Backward(const Tensor &dlogits) {
  const Tensor dconcat = head_.Backward(dlogits);
  const std::size_t n = dconcat.dim(0);
  const std::size_t features = dconcat.PerSample();
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    const auto &os = branch_out_shapes_[b];
    Tensor dy({n, os[0], os[1], os[2]});
    const std::size_t f = dy.PerSample();
    for (std::size_t s = 0; s < n; ++s) {
      std::copy(dconcat.data.begin() + static_cast<std::ptrdiff_t>(s * features + offset),
                dconcat.data.begin() + static_cast<std::ptrdiff_t>(s * features + offset + f),
                dy.data.begin() + static_cast<std::ptrdiff_t>(s * f));
    }
    offset += f;
    branches_[b].Backward(dy);
  }
}

std::vector<Param *> Model::Params() {
  std::vector<Param *> out;
  for (auto &b : branches_) {
    for (Param *p : b.Params()) {
      out.push_back(p);
    }
  }
  for (Param *p : head_.Params()) {
    out.push_back(p);
  }
  return out;
}

std::vector<std::pair<std::string, Tensor *>> Model::NamedTensors() {
  std::vector<std::pair<std::string, Tensor *>> out;
  auto collect = [&out](Sequential &seq, const std::string &prefix) {
    for (std::size_t i = 0; i < seq.layers().size(); ++i) {
      Layer &layer = *seq.layers()[i];
      const std::string base = prefix + "." + std::to_string(i) + "." + std::string(layer.Kind());
      for (Param *p : layer.Params()) {
        out.emplace_back(base + "." + p->name, &p->value);
      }
      const auto state = layer.State();
      for (std::size_t j = 0; j < state.size(); ++j) {
        out.emplace_back(base + (j == 0 ? ".running_mean" : ".running_var"), state[j]);
      }
    }
  };
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    collect(branches_[b], "branch" + std::to_string(b));
  }
  collect(head_, "head");
  return out;
}

void Model::ZeroGrad() {
  for (Param *p : Params()) {
    p->grad.Fill(0.0);
  }
}

void Model::SetDropoutEnabled(bool enabled) {
  for (auto &layer : head_.layers()) {
    if (auto *d = dynamic_cast<Dropout *>(layer.get())) {
      d->set_enabled(enabled);
    }
  }
}

void Model::FreezeDropoutMask(bool frozen) {
  for (auto &layer : head_.layers()) {
    if (auto *d = dynamic_cast<Dropout *>(layer.get())) {
      d->set_frozen(frozen);
    }
  }
}

void Model::QuantizeToFloat() {
  for (auto &[name, t] : NamedTensors()) {
    for (auto &v : t->data) {
      v = static_cast<double>(static_cast<float>(v));
    }
  }
}

} // namespace rfpresence::nn
