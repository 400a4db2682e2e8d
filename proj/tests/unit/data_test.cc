#include "spcnn/data.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>

#include "spcnn/errors.hpp"
#include "support/temp_dir.hpp"

namespace spcnn {
namespace {

TEST(SoftLabels, NoCentresGiveZeroMap) {
  EXPECT_EQ(make_soft_labels({}, 16, 12), Tensor::image(16, 12));
}

TEST(SoftLabels, SingleStampMatchesClosedForm) {
  const std::vector<Center> c{{20, 17}};
  const Tensor y = make_soft_labels(c, 40, 40);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 40; ++j) {
      const int di = i - 20, dj = j - 17;
      const double want = (std::abs(di) <= 3 && std::abs(dj) <= 3)
                              ? std::exp(-(di * di + dj * dj) / 8.0)
                              : 0.0;
      EXPECT_DOUBLE_EQ(y.at(i, j), want) << i << "," << j;
    }
  EXPECT_EQ(y.at(20, 17), 1.0);
}

TEST(SoftLabels, OverlapTakesElementwiseMax) {
  const std::vector<Center> a{{10, 10}}, b{{10, 13}}, both{{10, 10}, {10, 13}};
  const Tensor ya = make_soft_labels(a, 24, 24);
  const Tensor yb = make_soft_labels(b, 24, 24);
  const Tensor y = make_soft_labels(both, 24, 24);
  for (std::size_t k = 0; k < y.size(); ++k) EXPECT_EQ(y[k], std::max(ya[k], yb[k]));
  for (double v : y.data()) EXPECT_LE(v, 1.0);
  EXPECT_EQ(y.at(10, 10), 1.0);
  EXPECT_EQ(y.at(10, 13), 1.0);
}

TEST(SoftLabels, ClippedAtBorders) {
  const std::vector<Center> c{{0, 0}};
  const Tensor y = make_soft_labels(c, 10, 10);
  EXPECT_EQ(y.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y.at(3, 3), std::exp(-18.0 / 8.0));
  EXPECT_EQ(y.at(4, 0), 0.0);
  const std::vector<Center> bad{{10, 0}};
  EXPECT_THROW(make_soft_labels(bad, 10, 10), InvalidArgument);
}

TEST(Patches, BlankImageGivesNothing) {
  const Tensor z = Tensor::image(100, 100);
  EXPECT_TRUE(extract_patches(z, z, z).empty());
}

TEST(Patches, SingleCentreKeepsOnlyIntersectingWindows) {
  const std::vector<Center> c{{50, 50}};
  const Tensor y = make_soft_labels(c, 100, 100);
  const Tensor x = Tensor::image(100, 100, 0.5);
  const auto tuples = extract_patches(x, x, y);
  // Windows at offsets 0, 20, 40, 60; the stamp spans 47..53.
  std::size_t want = 0;
  for (std::size_t top = 0; top + 40 <= 100; top += 20)
    for (std::size_t left = 0; left + 40 <= 100; left += 20)
      want += top <= 53 && top + 39 >= 47 && left <= 53 && left + 39 >= 47;
  EXPECT_EQ(want, 4u);
  ASSERT_EQ(tuples.size(), want);
  for (const auto& t : tuples) {
    EXPECT_EQ(t.y.shape(), (Shape{1, 1, 40, 40}));
    EXPECT_EQ(t.y.at(50 - t.top, 50 - t.left), 1.0);
  }
}

TEST(Patches, NonOverlappingTilingCount) {
  const std::size_t H = 130, W = 95;
  const Tensor ones = Tensor::image(H, W, 1.0);
  EXPECT_EQ(extract_patches(ones, ones, ones, 40, 40).size(), (H / 40) * (W / 40));
  EXPECT_EQ(extract_patches(ones, ones, ones, 40, 20).size(), 5u * 3u);
}

TEST(Patches, NonEmptyPatchesSurvive) {
  Tensor y = Tensor::image(80, 80);
  y.at(79, 0) = 1e-9;
  const auto tuples = extract_patches(y, y, y);
  ASSERT_EQ(tuples.size(), 1u);
  EXPECT_EQ(tuples[0].top, 40u);
  EXPECT_EQ(tuples[0].left, 0u);
}

TEST(Patches, UndersizedOrMismatchedRejected) {
  const Tensor small = Tensor::image(39, 60);
  EXPECT_THROW(extract_patches(small, small, small), InvalidArgument);
  const Tensor a = Tensor::image(60, 60), b = Tensor::image(60, 61);
  EXPECT_THROW(extract_patches(a, a, b), InvalidArgument);
}

TEST(Patches, TuplesAreAligned) {
  SyntheticParams sp;
  sp.seed = 8;
  sp.count = 2;
  sp.image_size = 96;
  sp.nuclei_per_image = 6;
  const auto imgs = gen_synthetic(sp);
  const auto tuples = build_training_set(imgs);
  ASSERT_FALSE(tuples.empty());
  for (const auto& t : tuples) {
    const auto& img = imgs[t.image_index];
    const Tensor edges = canny(img.luminance);
    const Tensor labels = make_soft_labels(img.centers, 96, 96);
    EXPECT_EQ(t.x, img.luminance.crop(t.top, t.left, 40, 40));
    EXPECT_EQ(t.edges, edges.crop(t.top, t.left, 40, 40));
    EXPECT_EQ(t.y, labels.crop(t.top, t.left, 40, 40));
  }
}

TEST(Synthetic, DeterministicPerSeed) {
  SyntheticParams sp;
  sp.seed = 77;
  sp.count = 3;
  sp.image_size = 64;
  sp.nuclei_per_image = 5;
  const auto a = gen_synthetic(sp);
  const auto b = gen_synthetic(sp);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].luminance, b[i].luminance);
    EXPECT_EQ(a[i].centers, b[i].centers);
  }
  // Image i does not depend on how many images are requested.
  sp.count = 1;
  EXPECT_EQ(gen_synthetic(sp)[0].luminance, a[0].luminance);
}

TEST(Synthetic, ZeroNucleiGivesBackgroundOnly) {
  SyntheticParams sp;
  sp.count = 2;
  sp.image_size = 48;
  sp.nuclei_per_image = 0;
  for (const auto& img : gen_synthetic(sp)) {
    EXPECT_TRUE(img.centers.empty());
    EXPECT_TRUE(img.boundaries.empty());
    for (double v : img.luminance.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(Synthetic, CentresRespectSpacingAndBounds) {
  SyntheticParams sp;
  sp.seed = 3;
  sp.count = 4;
  const auto imgs = gen_synthetic(sp);
  for (const auto& img : imgs) {
    EXPECT_EQ(img.centers.size(), 15u);
    EXPECT_EQ(img.boundaries.size(), img.centers.size());
    for (std::size_t a = 0; a < img.centers.size(); ++a)
      for (std::size_t b = a + 1; b < img.centers.size(); ++b)
        EXPECT_GE(std::hypot(img.centers[a].row - img.centers[b].row,
                             img.centers[a].col - img.centers[b].col),
                  1.2 * 2 * sp.max_semi_axis);
  }
}

TEST(Synthetic, CrowdedImageKeepsFewerNuclei) {
  SyntheticParams sp;
  sp.count = 1;
  sp.image_size = 40;
  sp.nuclei_per_image = 50;
  EXPECT_LT(gen_synthetic(sp)[0].centers.size(), 50u);
}

// Distance from a point to a densely sampled analytic ellipse outline.
double distance_to_outline(const Ellipse& e, double r, double c) {
  double best = 1e9;
  const double ct = std::cos(e.theta), st = std::sin(e.theta);
  for (int k = 0; k < 20000; ++k) {
    const double t = 2.0 * std::numbers::pi * k / 20000.0;
    const double u = e.semi_col * std::cos(t), v = e.semi_row * std::sin(t);
    const double col = e.center_col + u * ct - v * st;
    const double row = e.center_row + u * st + v * ct;
    best = std::min(best, std::hypot(row - r, col - c));
  }
  return best;
}

TEST(Synthetic, BoundaryPixelsLieNearAnalyticEllipse) {
  SyntheticParams sp;
  sp.seed = 12;
  sp.count = 1;
  sp.nuclei_per_image = 6;
  const auto img = gen_synthetic(sp)[0];
  for (const Ellipse& e : img.boundaries) {
    const auto px = boundary_pixels(e, sp.image_size, sp.image_size);
    ASSERT_GT(px.size(), 10u);
    for (const Center& p : px) EXPECT_LE(distance_to_outline(e, p.row, p.col), 1.0);
  }
}

TEST(Dataset, SaveLoadRoundTrip) {
  SyntheticParams sp;
  sp.seed = 21;
  sp.count = 3;
  sp.image_size = 64;
  sp.nuclei_per_image = 4;
  Dataset ds{{1, 3, 21, true}, gen_synthetic(sp)};
  testing::TempDir dir;
  save_dataset(dir.path(), ds);
  const Dataset back = load_dataset(dir.path());
  EXPECT_EQ(back.manifest.image_count, 3u);
  EXPECT_EQ(back.manifest.seed, 21u);
  EXPECT_TRUE(back.manifest.synthetic);
  ASSERT_EQ(back.images.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.images[i].luminance, ds.images[i].luminance);
    EXPECT_EQ(back.images[i].centers, ds.images[i].centers);
  }
}

TEST(Dataset, MissingCsvNamesTheFile) {
  SyntheticParams sp;
  sp.count = 2;
  sp.image_size = 48;
  sp.nuclei_per_image = 2;
  testing::TempDir dir;
  save_dataset(dir.path(), Dataset{{1, 2, 0, true}, gen_synthetic(sp)});
  std::filesystem::remove(dir / "image_0001.csv");
  try {
    load_dataset(dir.path());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("image_0001.csv"), std::string::npos);
  }
}

TEST(Dataset, MalformedCentresRejected) {
  testing::TempDir dir;
  {
    std::ofstream(dir / "a.csv") << "row,col\n3;4\n";
    std::ofstream(dir / "b.csv") << "x,y\n";
  }
  EXPECT_THROW(read_centers_csv(dir / "a.csv"), IoError);
  EXPECT_THROW(read_centers_csv(dir / "b.csv"), IoError);
  EXPECT_THROW(load_dataset(dir / "nothing"), IoError);
}

TEST(Dataset, SplitHalf) {
  SyntheticParams sp;
  sp.count = 5;
  sp.image_size = 40;
  sp.nuclei_per_image = 1;
  const auto imgs = gen_synthetic(sp);
  const Split s = split_half(imgs);
  EXPECT_EQ(s.train.size(), 2u);
  EXPECT_EQ(s.test.size(), 3u);
  EXPECT_EQ(s.test[0].luminance, imgs[2].luminance);
}

}  // namespace
}  // namespace spcnn
