#include "spcnn/tensor_ops.hpp"

#include <gtest/gtest.h>

#include <random>

#include "spcnn/errors.hpp"
#include "support/fd.hpp"
#include "support/oracles.hpp"

namespace spcnn {
namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape s, double lo = -1, double hi = 1) {
  Tensor t(s);
  std::uniform_real_distribution<double> d(lo, hi);
  for (double& v : t.data()) v = d(rng);
  return t;
}

TEST(Tensor, RejectsMismatchedData) {
  EXPECT_THROW(Tensor(Shape{1, 1, 2, 2}, std::vector<double>(3)), InvalidArgument);
}

TEST(Tensor, CropAndStack) {
  Tensor t = Tensor::image(4, 4);
  for (std::size_t k = 0; k < 16; ++k) t[k] = static_cast<double>(k);
  const Tensor c = t.crop(1, 2, 2, 2);
  EXPECT_EQ(c.at(0, 0), 6.0);
  EXPECT_EQ(c.at(1, 1), 11.0);
  const Tensor parts[] = {c, c};
  const Tensor s = stack(parts);
  EXPECT_EQ(s.shape(), (Shape{2, 1, 2, 2}));
  EXPECT_EQ(s.sample(1), c);
  EXPECT_THROW(t.crop(3, 3, 2, 2), InvalidArgument);
}

TEST(Tensor, GradPairShapesMustAgree) {
  EXPECT_NO_THROW(GradPair(Tensor::image(2, 2)));
  EXPECT_THROW(GradPair(Tensor::image(2, 2), Tensor::image(2, 3)), InvalidArgument);
}

TEST(Conv2dSame, ZeroInputGivesBias) {
  const Tensor x = Tensor::image(3, 3);
  Tensor k(Shape{1, 1, 3, 3}, 0.7);
  const double b[] = {0.25};
  const Tensor y = conv2d_same(x, k, b);
  for (double v : y.data()) EXPECT_EQ(v, 0.25);
}

TEST(Conv2dSame, IdentityKernel) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(rng, Shape{1, 1, 5, 6});
  const Tensor k(Shape{1, 1, 1, 1}, 1.0);
  const double b[] = {0.0};
  EXPECT_EQ(conv2d_same(x, k, b), x);
}

TEST(Conv2dSame, RampWithAveragingKernel) {
  Tensor x = Tensor::image(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) x.at(i, j) = 5.0 * i + j;
  const Tensor k(Shape{1, 1, 3, 3}, 1.0 / 9.0);
  const std::vector<double> b{0.0};
  const Tensor y = conv2d_same(x, k, b);
  const Tensor ref = oracle::conv2d(x, k, b);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(y[i], ref[i], 1e-14);
  // Hand-computed: corners see 4 pixels, the centre sees the full window.
  EXPECT_NEAR(y.at(0, 0), 12.0 / 9.0, 1e-14);
  EXPECT_NEAR(y.at(2, 2), 12.0, 1e-14);
  EXPECT_NEAR(y.at(4, 4), 84.0 / 9.0, 1e-14);
}

TEST(Conv2dSame, MatchesOracleOnRandomShapesIncludingEvenKernels) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<std::size_t> ext(1, 6), ch(1, 3), kk(1, 5);
    const Shape xs{ch(rng), ch(rng), ext(rng) + 2, ext(rng) + 2};
    const Shape ks{ch(rng), xs.c, kk(rng), kk(rng)};
    const Tensor x = random_tensor(rng, xs);
    const Tensor k = random_tensor(rng, ks);
    std::vector<double> b(ks.n);
    for (double& v : b) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Tensor y = conv2d_same(x, k, b);
    const Tensor ref = oracle::conv2d(x, k, b);
    ASSERT_EQ(y.shape(), ref.shape());
    for (std::size_t i = 0; i < y.size(); ++i) ASSERT_NEAR(y[i], ref[i], 1e-12);
  }
}

TEST(Conv2dSame, EvenKernelPadsTopLeftWithTheSmallerHalf) {
  // A 2x2 kernel with a single 1 at (0, 0) reads input (i + 0 - 0, j + 0 - 0):
  // pad_before = floor((2 - 1) / 2) = 0, so it is the identity.
  Tensor k(Shape{1, 1, 2, 2});
  k(0, 0, 0, 0) = 1.0;
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(rng, Shape{1, 1, 4, 4});
  const double b[] = {0.0};
  EXPECT_EQ(conv2d_same(x, k, b), x);
  // A 4x4 kernel with its 1 at (1, 1) is also the identity (pad_before 1).
  Tensor k4(Shape{1, 1, 4, 4});
  k4(0, 0, 1, 1) = 1.0;
  EXPECT_EQ(conv2d_same(x, k4, b), x);
}

TEST(Conv2dSame, ShapeErrorsNameTheDimension) {
  const Tensor x(Shape{1, 2, 4, 4});
  const Tensor k(Shape{1, 3, 3, 3});
  const double b[] = {0.0};
  try {
    conv2d_same(x, k, b);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("channels"), std::string::npos);
  }
  const Tensor k2(Shape{2, 2, 3, 3});
  EXPECT_THROW(conv2d_same(x, k2, b), InvalidArgument);  // bias length
  const Tensor k0(Shape{1, 2, 0, 3});
  EXPECT_THROW(conv2d_same(x, k0, b), InvalidArgument);
}

TEST(Conv2dSame, IsLinearInInput) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor(rng, Shape{2, 3, 7, 6});
  const Tensor z = random_tensor(rng, Shape{2, 3, 7, 6});
  const Tensor k = random_tensor(rng, Shape{4, 3, 3, 3});
  const std::vector<double> zero(4, 0.0);
  const double alpha = 0.7, beta = -1.3;
  Tensor mix(x.shape());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * z[i];
  const Tensor fx = conv2d_same(x, k, zero), fz = conv2d_same(z, k, zero);
  const Tensor fm = conv2d_same(mix, k, zero);
  for (std::size_t i = 0; i < fm.size(); ++i) {
    EXPECT_NEAR(fm[i], alpha * fx[i] + beta * fz[i], 1e-12);
  }
}

TEST(Conv2dSameBackward, ZeroUpstreamGivesZeroGradients) {
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor(rng, Shape{1, 2, 5, 5});
  const Tensor k = random_tensor(rng, Shape{3, 2, 3, 3});
  const auto g = conv2d_same_backward(x, k, Tensor(Shape{1, 3, 5, 5}));
  EXPECT_EQ(sq_norm(g.input), 0.0);
  EXPECT_EQ(sq_norm(g.kernel), 0.0);
  for (double v : g.bias) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dSameBackward, IdentityKernelPassesUpstream) {
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor(rng, Shape{1, 1, 4, 5});
  const Tensor up = random_tensor(rng, Shape{1, 1, 4, 5});
  const auto g = conv2d_same_backward(x, Tensor(Shape{1, 1, 1, 1}, 1.0), up);
  EXPECT_EQ(g.input, up);
}

TEST(Conv2dSameBackward, MatchesFiniteDifferences) {
  std::mt19937_64 rng(5);
  Tensor x = random_tensor(rng, Shape{1, 1, 6, 6});
  Tensor k = random_tensor(rng, Shape{1, 1, 3, 3});
  std::vector<double> b{0.3};
  const auto loss = [&] { return 0.5 * sq_norm(conv2d_same(x, k, b)); };
  const auto g = conv2d_same_backward(x, k, conv2d_same(x, k, b));
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(testing::rel_err(g.input[i], testing::central_diff(x.data(), i, 1e-5, loss)), 1e-6);
  for (std::size_t i = 0; i < k.size(); ++i)
    EXPECT_LT(testing::rel_err(g.kernel[i], testing::central_diff(k.data(), i, 1e-5, loss)), 1e-6);
  EXPECT_LT(testing::rel_err(g.bias[0], testing::central_diff(std::span<double>(b), 0, 1e-5, loss)), 1e-6);
}

TEST(Conv2dSameBackward, RejectsWrongUpstreamShape) {
  const Tensor x(Shape{1, 1, 4, 4});
  const Tensor k(Shape{2, 1, 3, 3});
  EXPECT_THROW(conv2d_same_backward(x, k, Tensor(Shape{1, 1, 4, 4})), InvalidArgument);
}

TEST(Relu, ForwardAndBackward) {
  const Tensor x(Shape{1, 1, 1, 3}, std::vector<double>{-1.0, 0.0, 2.0});
  EXPECT_EQ(relu(x), Tensor(Shape{1, 1, 1, 3}, std::vector<double>{0.0, 0.0, 2.0}));
  const Tensor up(Shape{1, 1, 1, 3}, std::vector<double>{5.0, 6.0, 7.0});
  EXPECT_EQ(relu_backward(x, up), Tensor(Shape{1, 1, 1, 3}, std::vector<double>{0.0, 0.0, 7.0}));
  const Tensor pos(Shape{1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4});
  EXPECT_EQ(relu(pos), pos);
}

TEST(Relu, MatchesFiniteDifferencesAwayFromZero) {
  std::mt19937_64 rng(6);
  Tensor x = random_tensor(rng, Shape{1, 2, 4, 4});
  for (double& v : x.data())
    if (std::abs(v) < 0.01) v = 0.5;
  const Tensor c = random_tensor(rng, x.shape());
  const auto loss = [&] {
    const Tensor r = relu(x);
    double s = 0;
    for (std::size_t i = 0; i < r.size(); ++i) s += c[i] * r[i];
    return s;
  };
  const Tensor g = relu_backward(x, c);
  for (std::size_t i = 0; i < x.size(); ++i)
    EXPECT_LT(testing::rel_err(g[i], testing::central_diff(x.data(), i, 1e-5, loss)), 1e-6);
}

TEST(Maxpool, ConstantImageIsFixedPoint) {
  const Tensor x(Shape{1, 1, 9, 9}, 0.4);
  EXPECT_EQ(maxpool_same_stride1(x, 5).output, x);
}

TEST(Maxpool, SinglePixelSpreadsToWindow) {
  Tensor x = Tensor::image(31, 31);
  x.at(15, 15) = 0.8;
  const Tensor y = maxpool_same_stride1(x, 11).output;
  for (std::size_t i = 0; i < 31; ++i)
    for (std::size_t j = 0; j < 31; ++j) {
      const bool inside = i >= 10 && i <= 20 && j >= 10 && j <= 20;
      EXPECT_EQ(y.at(i, j), inside ? 0.8 : 0.0) << i << "," << j;
    }
}

TEST(Maxpool, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(rng, Shape{1, 1, 16, 16});
  const PoolResult r = maxpool_same_stride1(x, 5);
  EXPECT_EQ(r.output, oracle::maxpool(x, 5));
  for (std::size_t o = 0; o < x.size(); ++o) EXPECT_EQ(x[r.argmax.index[o]], r.output[o]);
}

TEST(Maxpool, NegativeMapsAreNotCorruptedAtBorders) {
  const Tensor x(Shape{1, 1, 6, 6}, -2.0);
  const Tensor y = maxpool_same_stride1(x, 3).output;
  for (double v : y.data()) EXPECT_EQ(v, -2.0);
}

TEST(Maxpool, EvenWindowRejected) {
  EXPECT_THROW(maxpool_same_stride1(Tensor::image(5, 5), 4), InvalidArgument);
}

TEST(Maxpool, DominatesInputAndKeepsSize) {
  std::mt19937_64 rng(9);
  for (std::size_t t = 0; t < 10; ++t) {
    const Tensor x = random_tensor(rng, Shape{2, 1, 7 + t, 9});
    const Tensor y = maxpool_same_stride1(x, 2 * (t % 4) + 1).output;
    ASSERT_EQ(y.shape(), x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) EXPECT_GE(y[i], x[i]);
  }
}

TEST(MaxpoolBackward, ZeroUpstream) {
  std::mt19937_64 rng(10);
  const Tensor x = random_tensor(rng, Shape{1, 1, 6, 6});
  const PoolResult r = maxpool_same_stride1(x, 3);
  EXPECT_EQ(sq_norm(maxpool_backward(r.argmax, Tensor(x.shape()))), 0.0);
}

TEST(MaxpoolBackward, TiesRouteToSmallestIndex) {
  const Tensor x(Shape{1, 1, 4, 4}, 1.0);
  const PoolResult r = maxpool_same_stride1(x, 3);
  // Window top-left corner is the smallest flat index it covers.
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t expect = (i > 0 ? i - 1 : 0) * 4 + (j > 0 ? j - 1 : 0);
      EXPECT_EQ(r.argmax.index[i * 4 + j], expect);
    }
  const Tensor g = maxpool_backward(r.argmax, Tensor(x.shape(), 1.0));
  double total = 0;
  for (double v : g.data()) total += v;
  EXPECT_EQ(total, 16.0);
  EXPECT_EQ(g.at(0, 0), 4.0);  // (0,0),(0,1),(1,0),(1,1) all pick index 0
  EXPECT_EQ(g.at(3, 3), 0.0);
}

TEST(MaxpoolBackward, MatchesFiniteDifferencesAtUniqueArgmax) {
  std::mt19937_64 rng(12);
  Tensor x = random_tensor(rng, Shape{1, 1, 8, 8});
  const PoolResult r = maxpool_same_stride1(x, 3);
  const Tensor g = maxpool_backward(r.argmax, r.output);
  const auto loss = [&] { return 0.5 * sq_norm(maxpool_same_stride1(x, 3).output); };
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_LT(testing::rel_err(g[i], testing::central_diff(x.data(), i, 1e-5, loss)), 1e-6);
  }
}

TEST(Hadamard, Basics) {
  std::mt19937_64 rng(13);
  const Tensor a = random_tensor(rng, Shape{1, 2, 3, 3});
  const Tensor b = random_tensor(rng, a.shape());
  EXPECT_EQ(sq_norm(hadamard(a, Tensor(a.shape()))), 0.0);
  EXPECT_EQ(hadamard(a, Tensor(a.shape(), 1.0)), a);
  const Tensor h = hadamard(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(h[i], a[i] * b[i]);
  EXPECT_THROW(hadamard(a, Tensor::image(3, 3)), InvalidArgument);
}

TEST(SqNorm, Values) {
  EXPECT_EQ(sq_norm(Tensor::image(3, 3)), 0.0);
  Tensor one_hot = Tensor::image(3, 3);
  one_hot.at(1, 2) = 1.0;
  EXPECT_EQ(sq_norm(one_hot), 1.0);
  EXPECT_EQ(sq_norm(Tensor(Shape{1, 1, 1, 3}, std::vector<double>{1, 2, 3})), 14.0);
}

}  // namespace
}  // namespace spcnn
