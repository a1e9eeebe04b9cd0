#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles/adam_oracle.hpp"
#include "oracles/gradcheck.hpp"
#include "rfpresence/dsp/preprocess.hpp"
#include "rfpresence/nn/adam.hpp"
#include "rfpresence/nn/loss.hpp"
#include "rfpresence/nn/model.hpp"
#include "rfpresence/nn/model_io.hpp"

using namespace rfpresence;
using namespace rfpresence::nn;

namespace {

Tensor RandomTensor(std::vector<std::size_t> shape, std::mt19937_64 &rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Tensor t(std::move(shape));
  for (auto &v : t.data) {
    v = g(rng);
  }
  return t;
}

double Dot(const Tensor &a, const Tensor &b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += a.data[i] * b.data[i];
  }
  return s;
}

/// Checks input and parameter gradients of L = <r, layer(x)> against central
/// differences; returns the worst relative error.
double LayerGradientError(Layer &layer, Tensor x, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto y0 = layer.Forward(x, Mode::kTrain);
  REQUIRE(y0.ok());
  const Tensor r = RandomTensor(y0->shape, rng);
  for (Param *p : layer.Params()) {
    p->grad = Tensor(p->value.shape);
  }
  REQUIRE(layer.Forward(x, Mode::kTrain).ok());
  const Tensor dx = layer.Backward(r);

  auto loss = [&] { return Dot(r, layer.Forward(x, Mode::kTrain).value()); };
  double worst = oracle::GradientError(dx.data, oracle::NumericGradient(x.data, loss));
  for (Param *p : layer.Params()) {
    CAPTURE(p->name);
    const double e = oracle::GradientError(p->grad.data, oracle::NumericGradient(p->value.data, loss));
    worst = std::max(worst, e);
  }
  return worst;
}

void Randomize(Model &m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  for (Param *p : m.Params()) {
    for (auto &v : p->value.data) {
      v += g(rng);
    }
  }
}

/// Hand count of the reference two-branch network on 50x14x9 and 50x14x6.
std::size_t HandCountReference() {
  // Magnitude branch: conv 3x3x9 -> 8, BN(8); 48x12 -> pool(2,1) -> 24x12;
  // conv 3x3x8 -> 16, BN(16); 22x10 -> pool(3,1) -> 7x10x16 = 1120 features.
  const std::size_t mag = (3 * 3 * 9 * 8 + 8) + 2 * 8 + (3 * 3 * 8 * 16 + 16) + 2 * 16;
  // Phase branch: identical after the first kernel, which sees 6 channels.
  const std::size_t phase = (3 * 3 * 6 * 8 + 8) + 2 * 8 + (3 * 3 * 8 * 16 + 16) + 2 * 16;
  const std::size_t features = 2 * 7 * 10 * 16;
  const std::size_t head = (features * 64 + 64) + 2 * 64 + (64 * 2 + 2);
  return mag + phase + head;
}

} // namespace

TEST_CASE("convolution is a valid cross-correlation") {
  Conv2d conv(9, 8, 3, 3);
  auto y = conv.Forward(Tensor({2, 50, 14, 9}, 1.0), Mode::kInfer);
  REQUIRE(y.ok());
  CHECK(y->shape == std::vector<std::size_t>{2, 48, 12, 8});

  Conv2d id(1, 1, 1, 1);
  id.kernel().value.data = {1.0};
  id.bias().value.data = {0.0};
  std::mt19937_64 rng(1);
  const Tensor x = RandomTensor({3, 5, 4, 1}, rng);
  CHECK(id.Forward(x, Mode::kInfer).value() == x);

  // A single hand-computed output.
  Conv2d small(2, 1, 2, 2);
  for (std::size_t i = 0; i < 8; ++i) {
    small.kernel().value.data[i] = static_cast<double>(i + 1);
  }
  small.bias().value.data = {0.5};
  Tensor in({1, 2, 2, 2});
  for (std::size_t i = 0; i < 8; ++i) {
    in.data[i] = static_cast<double>(10 * (i + 1));
  }
  // Kernel and input share the row-major (kh, kw, c) order: sum 10 i^2 + bias.
  CHECK(small.Forward(in, Mode::kInfer).value().data[0] == doctest::Approx(10.0 * 204.0 + 0.5));

  CHECK(conv.Forward(Tensor({1, 2, 14, 9}), Mode::kInfer).error().code == ErrorCode::kKernelLargerThanInput);
  CHECK(conv.Forward(Tensor({1, 5, 14, 4}), Mode::kInfer).error().code == ErrorCode::kShapeMismatch);
}

TEST_CASE("average pooling takes window means and drops remainders") {
  AvgPool2d pool(2, 1);
  CHECK(pool.Forward(Tensor({1, 48, 12, 8}), Mode::kInfer).value().shape == std::vector<std::size_t>{1, 24, 12, 8});
  AvgPool2d pool3(3, 1);
  CHECK(pool3.Forward(Tensor({1, 22, 10, 16}), Mode::kInfer).value().shape ==
        std::vector<std::size_t>{1, 7, 10, 16});
  const Tensor pooled = pool3.Forward(Tensor({2, 7, 3, 2}, 4.25), Mode::kInfer).value();
  for (const double v : pooled.data) {
    CHECK(v == 4.25);
  }
  Tensor x({1, 2, 2, 1});
  x.data = {1.0, 2.0, 3.0, 5.0};
  AvgPool2d both(2, 2);
  CHECK(both.Forward(x, Mode::kInfer).value().data == std::vector<double>{2.75});
  const Tensor dx = both.Backward(Tensor({1, 1, 1, 1}, 1.0));
  CHECK(dx.data == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  CHECK(both.Forward(Tensor({1, 1, 4, 1}), Mode::kInfer).error().code == ErrorCode::kPoolLargerThanInput);
}

TEST_CASE("batch norm normalizes per channel and tracks running statistics") {
  std::mt19937_64 rng(2);
  BatchNorm bn(3, 0.9, 1e-5);
  Tensor x = RandomTensor({4, 5, 2, 3}, rng, 20.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    x.data[i] += static_cast<double>(i % 3) * 7.0;
  }
  auto y = bn.Forward(x, Mode::kTrain);
  REQUIRE(y.ok());
  const std::size_t rows = x.size() / 3;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    double mean = 0.0, var = 0.0, xmean = 0.0, xvar = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      mean += y->data[r * 3 + ch];
      xmean += x.data[r * 3 + ch];
    }
    mean /= static_cast<double>(rows);
    xmean /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      var += (y->data[r * 3 + ch] - mean) * (y->data[r * 3 + ch] - mean);
      xvar += (x.data[r * 3 + ch] - xmean) * (x.data[r * 3 + ch] - xmean);
    }
    var /= static_cast<double>(rows);
    xvar /= static_cast<double>(rows);
    CHECK(std::abs(mean) <= 1e-9);
    CHECK(std::abs(var - 1.0) <= 1e-6);
    CHECK(var == doctest::Approx(xvar / (xvar + 1e-5)).epsilon(1e-12));
    // running <- momentum * running + (1 - momentum) * batch, from (0, 1).
    CHECK(bn.running_mean().data[ch] == doctest::Approx(0.1 * xmean).epsilon(1e-12));
    CHECK(bn.running_var().data[ch] == doctest::Approx(0.9 + 0.1 * xvar).epsilon(1e-12));
  }

  BatchNorm fresh(3, 0.9, 1e-300);
  const Tensor z = RandomTensor({2, 3}, rng);
  const Tensor out = fresh.Forward(z, Mode::kInfer).value();
  for (std::size_t i = 0; i < z.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(z.data[i]).epsilon(1e-15));
  }
  CHECK(fresh.Forward(Tensor({1, 3}), Mode::kTrain).error().code == ErrorCode::kDegenerateBatch);
}

TEST_CASE("every layer's analytic gradient matches central differences") {
  std::mt19937_64 rng(3);
  SUBCASE("conv2d") {
    Conv2d conv(3, 4, 3, 2);
    for (auto &v : conv.kernel().value.data) {
      v = std::normal_distribution<double>(0.0, 0.5)(rng);
    }
    CHECK(LayerGradientError(conv, RandomTensor({2, 6, 5, 3}, rng), 30) <= 1e-4);
  }
  SUBCASE("conv2d with the specialised channel counts") {
    for (const std::size_t c_out : {8, 16}) {
      Conv2d conv(2, c_out, 3, 3);
      CHECK(LayerGradientError(conv, RandomTensor({2, 5, 4, 2}, rng), 31) <= 1e-4);
    }
  }
  SUBCASE("avg_pool") {
    AvgPool2d pool(3, 2);
    CHECK(LayerGradientError(pool, RandomTensor({2, 7, 5, 2}, rng), 32) <= 1e-4);
  }
  SUBCASE("batch_norm on images and on features") {
    BatchNorm bn(3);
    for (auto &v : bn.gamma().value.data) {
      v = 1.0 + std::normal_distribution<double>(0.0, 0.3)(rng);
    }
    CHECK(LayerGradientError(bn, RandomTensor({4, 3, 2, 3}, rng), 33) <= 1e-4);
    BatchNorm bn_fc(5);
    CHECK(LayerGradientError(bn_fc, RandomTensor({4, 5}, rng), 34) <= 1e-4);
  }
  SUBCASE("relu away from the kink") {
    Relu relu;
    Tensor x = RandomTensor({3, 7}, rng);
    for (auto &v : x.data) {
      v += v > 0.0 ? 0.1 : -0.1;
    }
    CHECK(LayerGradientError(relu, x, 35) <= 1e-4);
  }
  SUBCASE("dense") {
    Dense fc(6, 4);
    CHECK(LayerGradientError(fc, RandomTensor({3, 2, 3}, rng), 36) <= 1e-4);
  }
  SUBCASE("dropout with a frozen mask") {
    Dropout drop(0.5, 7);
    drop.set_frozen(true);
    CHECK(LayerGradientError(drop, RandomTensor({4, 10}, rng), 37) <= 1e-4);
  }
}

TEST_CASE("dropout masks in training and is the identity at inference") {
  std::mt19937_64 rng(4);
  Dropout drop(0.5, 9);
  const Tensor x = RandomTensor({1000, 10}, rng);
  const Tensor y = drop.Forward(x, Mode::kTrain).value();
  std::size_t kept = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (y.data[i] != 0.0) {
      ++kept;
      CHECK(y.data[i] == doctest::Approx(2.0 * x.data[i]));
    }
  }
  CHECK(static_cast<double>(kept) / 10000.0 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(drop.Forward(x, Mode::kInfer).value() == x);
}

TEST_CASE("softmax and cross-entropy") {
  Tensor z({3, 2});
  z.data = {1.5, 1.5, -3.0, 4.0, 700.0, 0.0};
  const Tensor p = Softmax(z);
  CHECK(p.data[0] == doctest::Approx(0.5));
  CHECK(p.data[1] == doctest::Approx(0.5));
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(p.data[2 * n] + p.data[2 * n + 1] == doctest::Approx(1.0).epsilon(1e-12));
  }

  Tensor shifted = z;
  for (auto &v : shifted.data) {
    v += 123.0;
  }
  const Tensor ps = Softmax(shifted);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(ps.data[i] - p.data[i]) <= 1e-12);
  }

  Tensor perfect({1, 2});
  perfect.data = {0.0, 1.0};
  const std::uint8_t one = 1;
  CHECK(CrossEntropy(perfect, std::span(&one, 1)) == 0.0);
  Tensor uniform({2, 2}, 0.5);
  const std::uint8_t labels[] = {0, 1};
  CHECK(CrossEntropy(uniform, labels) == doctest::Approx(std::log(2.0)));

  // Fused gradient against central differences.
  std::mt19937_64 rng(5);
  Tensor logits = RandomTensor({4, 2}, rng);
  const std::uint8_t lab[] = {0, 1, 1, 0};
  const auto out = SoftmaxCrossEntropy(logits, lab);
  auto loss = [&] { return SoftmaxCrossEntropy(logits, lab).loss; };
  CHECK(oracle::GradientError(out.dlogits.data, oracle::NumericGradient(logits.data, loss)) <= 1e-8);
}

TEST_CASE("the L2 penalty covers flagged weights only") {
  Param w{"w", Tensor({1}, 3.0), Tensor({1}), true};
  Param b{"b", Tensor({1}, 5.0), Tensor({1}), false};
  Param *ps[] = {&w, &b};
  CHECK(L2Penalty(ps, 0.0) == 0.0);
  CHECK(L2Penalty(ps, 0.1) == doctest::Approx(0.9));
  AddL2Gradient(ps, 0.1);
  CHECK(w.grad.data[0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(b.grad.data[0] == 0.0);
}

TEST_CASE("Adam follows the scalar reference update") {
  SUBCASE("first step moves by lr against the gradient sign") {
    for (const double g : {3.0, -0.02}) {
      std::vector<double> theta{1.0};
      AdamState s;
      AdamStep(theta, std::vector<double>{g}, s, AdamConfig{});
      CHECK(theta[0] == doctest::Approx(1.0 - 1e-3 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-6));
    }
  }
  SUBCASE("a zero gradient leaves parameters unchanged") {
    std::vector<double> theta{1.0, -2.0};
    AdamState s;
    AdamStep(theta, std::vector<double>{0.0, 0.0}, s, AdamConfig{});
    CHECK(theta == std::vector<double>{1.0, -2.0});
  }
  SUBCASE("200 steps on a quadratic") {
    AdamConfig cfg;
    cfg.lr = 0.1;
    std::vector<double> theta{0.0};
    AdamState s;
    oracle::ScalarAdam ref;
    ref.lr = 0.1;
    double ref_theta = 0.0;
    for (int i = 0; i < 200; ++i) {
      AdamStep(theta, std::vector<double>{2.0 * (theta[0] - 5.0)}, s, cfg);
      ref_theta = ref.Step(ref_theta, 2.0 * (ref_theta - 5.0));
      CHECK(theta[0] == doctest::Approx(ref_theta).epsilon(1e-12));
    }
    CHECK(std::abs(theta[0] - 5.0) <= 0.1);
  }
}

TEST_CASE("parameter count of the reference network") {
  CHECK(DenseParamCount(10, 2) == 22);
  CHECK(ConvParamCount(3, 3, 9, 8) == 656);
  const std::array<std::size_t, 3> shapes[] = {{50, 14, 9}, {50, 14, 6}};
  auto spec = ModelSpec::ForVariant(Variant::kWithDft, shapes);
  REQUIRE(spec.ok());
  CHECK(CountParams(spec.value()) == HandCountReference());
  CHECK(HandCountReference() == 147'210);

  // The count equals the number of trainable scalars the model allocates.
  auto model = Model::Create(spec.value(), 1);
  REQUIRE(model.ok());
  std::size_t allocated = 0;
  for (Param *p : model->Params()) {
    allocated += p->value.size();
  }
  CHECK(allocated == CountParams(spec.value()));

  // Every variant's count is a pure function of its spec.
  for (const Variant v : kAllVariants) {
    dsp::PreprocessConfig pc;
    pc.variant = v;
    const auto in = dsp::InputShapes(pc);
    auto s = ModelSpec::ForVariant(v, in);
    REQUIRE(s.ok());
    auto m = Model::Create(s.value(), 2);
    REQUIRE(m.ok());
    std::size_t n = 0;
    for (Param *p : m->Params()) {
      n += p->value.size();
    }
    CHECK(n == CountParams(s.value()));
    MESSAGE(VariantName(v), " parameters: ", n);
  }
}

TEST_CASE("the no-DFT architecture uses the taller kernel and pools") {
  const std::array<std::size_t, 3> shapes[] = {{128, 14, 9}, {128, 14, 6}};
  auto spec = ModelSpec::ForVariant(Variant::kNoDft, shapes);
  REQUIRE(spec.ok());
  const auto &blocks = spec->branches[0].blocks;
  REQUIRE(blocks.size() == 2);
  CHECK(blocks[0].kernel_h == 5);
  CHECK(blocks[0].kernel_w == 3);
  CHECK(blocks[0].pool_h == 4);
  CHECK(blocks[1].pool_h == 4);
  CHECK(spec->Validate().ok());
}

TEST_CASE("the model produces a probability pair and is deterministic at inference") {
  const std::array<std::size_t, 3> shapes[] = {{50, 14, 9}, {50, 14, 6}};
  auto model = Model::Create(ModelSpec::ForVariant(Variant::kWithDft, shapes).value(), 3);
  REQUIRE(model.ok());
  std::mt19937_64 rng(6);
  Tensor a = RandomTensor({3, 50, 14, 9}, rng);
  Tensor b = RandomTensor({3, 50, 14, 6}, rng);
  // Sample 2 duplicates sample 0.
  std::copy_n(a.data.begin(), 50 * 14 * 9, a.data.begin() + 2 * 50 * 14 * 9);
  std::copy_n(b.data.begin(), 50 * 14 * 6, b.data.begin() + 2 * 50 * 14 * 6);
  const Tensor in[] = {a, b};
  const Tensor p = model->Predict(in).value();
  REQUIRE(p.shape == std::vector<std::size_t>{3, 2});
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(p.data[2 * n] > 0.0);
    CHECK(p.data[2 * n + 1] > 0.0);
    CHECK(p.data[2 * n] + p.data[2 * n + 1] == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(p.data[0] == p.data[4]);
  CHECK(p.data[1] == p.data[5]);
  CHECK(model->Predict(in).value() == p);

  const Tensor wrong[] = {b, a};
  CHECK(model->Predict(wrong).error().code == ErrorCode::kShapeMismatch);
  const Tensor one[] = {a};
  CHECK(model->Predict(one).error().code == ErrorCode::kShapeMismatch);
}

TEST_CASE("end-to-end gradients match central differences") {
  const std::array<std::size_t, 3> shapes[] = {{12, 6, 3}, {12, 6, 2}};
  auto spec = ModelSpec::ForVariant(Variant::kWithDft, shapes);
  REQUIRE(spec.ok());
  auto model = Model::Create(spec.value(), 4);
  REQUIRE(model.ok());
  Randomize(model.value(), 40);
  model->SetDropoutEnabled(false);
  std::mt19937_64 rng(7);
  const Tensor in[] = {RandomTensor({4, 12, 6, 3}, rng), RandomTensor({4, 12, 6, 2}, rng)};
  const std::uint8_t labels[] = {0, 1, 1, 0};

  auto loss = [&] { return SoftmaxCrossEntropy(model->Logits(in, Mode::kTrain).value(), labels).loss; };
  model->ZeroGrad();
  const auto out = SoftmaxCrossEntropy(model->Logits(in, Mode::kTrain).value(), labels);
  model->Backward(out.dlogits);
  for (Param *p : model->Params()) {
    CAPTURE(p->name);
    const std::vector<double> analytic = p->grad.data;
    const auto numeric = oracle::NumericGradient(p->value.data, loss);
    if (oracle::Norm(numeric) < 1e-7) {
      // Biases feeding batch norm have an exactly vanishing gradient.
      CHECK(oracle::Norm(analytic) < 1e-7);
    } else {
      CHECK(oracle::GradientError(analytic, numeric) <= 1e-3);
    }
  }
}

TEST_CASE("model files round-trip bit-exactly and detect corruption") {
  const std::array<std::size_t, 3> shapes[] = {{50, 14, 15}};
  auto model = Model::Create(ModelSpec::ForVariant(Variant::kSingleCnn, shapes).value(), 5);
  REQUIRE(model.ok());
  Randomize(model.value(), 50);
  KeyValueConfig meta;
  meta.Add("note", "round trip");
  const auto bytes = EncodeModel(model.value(), meta);
  REQUIRE(bytes.size() > 12);
  CHECK(bytes[0] == 'R');
  CHECK(bytes[3] == 'M');
  CHECK((bytes[4] | (bytes[5] << 8)) == kModelFormatVersion);
  CHECK(bytes[6] == static_cast<std::uint8_t>(Variant::kSingleCnn));

  auto loaded = DecodeModel(bytes, "mem");
  REQUIRE(loaded.ok());
  CHECK(loaded->model.spec() == model->spec());
  CHECK(loaded->metadata.GetString("note", "") == "round trip");
  CHECK(EncodeModel(loaded->model, loaded->metadata) == bytes);

  // The quantized in-memory model predicts exactly like the loaded one.
  model->QuantizeToFloat();
  std::mt19937_64 rng(8);
  const Tensor in[] = {RandomTensor({2, 50, 14, 15}, rng)};
  CHECK(model->Predict(in).value() == loaded->model.Predict(in).value());

  auto flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x10;
  CHECK(DecodeModel(flipped, "mem").error().code == ErrorCode::kChecksumMismatch);
  auto truncated = bytes;
  truncated.resize(bytes.size() - 9);
  CHECK_FALSE(DecodeModel(truncated, "mem").ok());
  auto magic = bytes;
  magic[0] = 'X';
  CHECK_FALSE(DecodeModel(magic, "mem").ok());
}

TEST_CASE("model construction rejects shapes the stack cannot shrink") {
  const std::array<std::size_t, 3> tiny[] = {{4, 14, 9}, {4, 14, 6}};
  CHECK_FALSE(ModelSpec::ForVariant(Variant::kWithDft, tiny).ok());
  const std::array<std::size_t, 3> one[] = {{50, 14, 9}};
  CHECK(ModelSpec::ForVariant(Variant::kWithDft, one).error().code == ErrorCode::kShapeMismatch);
}
