#include "spcnn/edge.hpp"

#include <gtest/gtest.h>

#include "spcnn/data.hpp"
#include "spcnn/errors.hpp"

namespace spcnn {
namespace {

std::size_t count_edges(const Tensor& e) {
  std::size_t n = 0;
  for (double v : e.data()) n += v != 0.0;
  return n;
}

TEST(Canny, ConstantImageHasNoEdges) {
  EXPECT_EQ(count_edges(canny(Tensor::image(24, 24, 0.6))), 0u);
}

TEST(Canny, VerticalStepGivesOnePixelWideLine) {
  Tensor img = Tensor::image(32, 32);
  for (std::size_t i = 0; i < 32; ++i)
    for (std::size_t j = 16; j < 32; ++j) img.at(i, j) = 1.0;
  const Tensor e = canny(img);
  std::size_t column = 99;
  for (std::size_t i = 0; i < 32; ++i) {
    std::size_t in_row = 0;
    for (std::size_t j = 0; j < 32; ++j) {
      if (e.at(i, j) != 0.0) {
        ++in_row;
        if (column == 99) column = j;
        EXPECT_EQ(j, column) << "row " << i;
      }
    }
    EXPECT_EQ(in_row, 1u) << "row " << i;
  }
  EXPECT_TRUE(column == 15 || column == 16);
}

TEST(Canny, RejectsBadParameters) {
  const Tensor img = Tensor::image(8, 8);
  EXPECT_THROW(canny(img, {1.4, 0.3, 0.2, true}), InvalidArgument);
  EXPECT_THROW(canny(img, {1.4, 0.2, 0.2, true}), InvalidArgument);
  EXPECT_THROW(canny(img, {0.0, 0.1, 0.2, true}), InvalidArgument);
  EXPECT_THROW(canny(Tensor(Shape{1, 2, 8, 8})), InvalidArgument);
}

TEST(Canny, OutputIsBinary) {
  SyntheticParams sp;
  sp.seed = 5;
  sp.count = 1;
  sp.image_size = 64;
  sp.nuclei_per_image = 4;
  const auto imgs = gen_synthetic(sp);
  const Tensor e = canny(imgs[0].luminance);
  for (double v : e.data()) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_GT(count_edges(e), 0u);
}

TEST(Canny, EllipseRingSurroundsTheNucleus) {
  Tensor img = Tensor::image(48, 48, 0.8);
  const Ellipse el{24, 24, 10, 7, 0.4};
  for (std::size_t i = 0; i < 48; ++i)
    for (std::size_t j = 0; j < 48; ++j)
      if (el.level(i, j) <= 1.0) img.at(i, j) = 0.3;
  const Tensor e = canny(img);
  std::size_t near = 0, total = 0;
  for (std::size_t i = 0; i < 48; ++i)
    for (std::size_t j = 0; j < 48; ++j) {
      if (e.at(i, j) == 0.0) continue;
      ++total;
      const double l = el.level(i, j);
      near += l > 0.6 && l < 1.5;
    }
  EXPECT_GT(total, 30u);
  EXPECT_EQ(near, total);
}

TEST(Canny, AbsoluteThresholdsScaleWithIntensity) {
  SyntheticParams sp;
  sp.seed = 2;
  sp.count = 1;
  sp.image_size = 48;
  sp.nuclei_per_image = 3;
  const Tensor img = gen_synthetic(sp)[0].luminance;
  const CannyStages ref = canny_stages(img);
  for (double c : {2.0, 0.37}) {
    Tensor scaled = img;
    for (double& v : scaled.data()) v *= c;
    CannyParams abs_params{1.4, ref.low_threshold * c, ref.high_threshold * c, false};
    EXPECT_EQ(canny(scaled, abs_params), ref.edges) << "scale " << c;
  }
}

}  // namespace
}  // namespace spcnn
