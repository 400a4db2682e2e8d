#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "spcnn/data.hpp"
#include "spcnn/detect.hpp"
#include "spcnn/errors.hpp"
#include "spcnn/eval.hpp"
#include "support/oracles.hpp"
#include "support/temp_dir.hpp"

namespace spcnn {
namespace {

TEST(Detect, ZeroMapGivesNothing) {
  EXPECT_TRUE(detect(Tensor::image(30, 30), 0.3).empty());
}

TEST(Detect, SingleStampGivesItsCentre) {
  const std::vector<Center> c{{12, 19}};
  const auto d = detect(make_soft_labels(c, 32, 32), 0.3);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0], (Detection{12, 19, 1.0}));
}

TEST(Detect, TwoStampsNinePixelsApart) {
  const std::vector<Center> c{{15, 10}, {15, 19}};
  const Tensor y = make_soft_labels(c, 32, 32);
  const auto d = detect(y, 0.3, 3);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d, oracle::detect(y, 0.3, 3));
  EXPECT_EQ(d[0].col, 10);
  EXPECT_EQ(d[1].col, 19);
}

TEST(Detect, PlateauKeepsSmallestFlatIndex) {
  Tensor y = Tensor::image(9, 9);
  y.at(4, 4) = y.at(4, 5) = y.at(5, 4) = 0.8;
  const auto d = detect(y, 0.3, 1);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].row, 4);
  EXPECT_EQ(d[0].col, 4);
}

TEST(Detect, MatchesOracleOnRandomMaps) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 20; ++t) {
    Tensor y = Tensor::image(10 + rng() % 20, 10 + rng() % 20);
    // Coarse quantisation forces plateaus.
    for (double& v : y.data()) v = std::round(u(rng) * 6.0) / 6.0;
    const std::size_t r = 1 + rng() % 4;
    const double thr = u(rng) * 0.8;
    EXPECT_EQ(detect(y, thr, r), oracle::detect(y, thr, static_cast<long>(r)));
  }
}

TEST(Detect, RaisingThresholdNeverAddsDetections) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Tensor y = Tensor::image(48, 48);
  for (double& v : y.data()) v = u(rng);
  std::size_t prev = SIZE_MAX;
  for (double t = 0.0; t <= 1.0; t += 0.05) {
    const auto d = detect(y, t);
    EXPECT_LE(d.size(), prev);
    for (const auto& p : d) EXPECT_GE(p.score, t);
    prev = d.size();
  }
}

TEST(Detect, CsvRoundTrip) {
  testing::TempDir dir;
  const DetectionSet d{{1, 2, 0.5}, {30, 4, 0.123456789012345}};
  write_detections_csv(dir / "d.csv", d);
  EXPECT_EQ(read_detections_csv(dir / "d.csv"), d);
  std::ofstream(dir / "bad.csv") << "row,col\n1,2\n";
  EXPECT_THROW(read_detections_csv(dir / "bad.csv"), IoError);
}

TEST(Match, ExactDetections) {
  const std::vector<Center> gt{{5, 5}, {20, 30}, {40, 8}};
  DetectionSet d;
  for (const auto& c : gt) d.push_back({c.row, c.col, 1.0});
  const MatchResult m = match_golden(d, gt);
  EXPECT_EQ(m.tp, 3u);
  EXPECT_EQ(m.fp, 0u);
  EXPECT_EQ(m.fn, 0u);
}

TEST(Match, SevenPixelsIsOutside) {
  const std::vector<Center> gt{{10, 10}};
  const DetectionSet d{{10, 17, 1.0}};
  const MatchResult m = match_golden(d, gt);
  EXPECT_EQ(m.tp, 0u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 1u);
}

TEST(Match, RadiusIsInclusive) {
  const std::vector<Center> gt{{10, 10}};
  const DetectionSet d{{10, 16, 1.0}};
  EXPECT_EQ(match_golden(d, gt).tp, 1u);
  EXPECT_EQ(match_golden(DetectionSet{{14, 15, 1.0}}, gt).tp, 0u);  // sqrt(41) > 6
}

TEST(Match, TwoDetectionsOneTruth) {
  const std::vector<Center> gt{{10, 10}};
  const DetectionSet d{{10, 14, 0.9}, {12, 10, 0.5}};
  const MatchResult m = match_golden(d, gt);
  EXPECT_EQ(m.tp, 1u);
  EXPECT_EQ(m.fp, 1u);
  EXPECT_EQ(m.fn, 0u);
  ASSERT_EQ(m.pairs.size(), 1u);
  EXPECT_EQ(m.pairs[0], (std::pair<std::size_t, std::size_t>{1, 0}));
  EXPECT_EQ(m.tp, oracle::max_matching(d, gt, 6.0));
}

TEST(Match, IdentitiesAndOracleBound) {
  std::mt19937_64 rng(7);
  for (int t = 0; t < 200; ++t) {
    DetectionSet d(rng() % 6);
    std::vector<Center> gt(rng() % 6);
    for (auto& p : d) p = {static_cast<int>(rng() % 25), static_cast<int>(rng() % 25), 1.0};
    for (auto& c : gt) c = {static_cast<int>(rng() % 25), static_cast<int>(rng() % 25)};
    const MatchResult m = match_golden(d, gt);
    EXPECT_EQ(m.tp + m.fp, d.size());
    EXPECT_EQ(m.tp + m.fn, gt.size());
    EXPECT_EQ(m.pairs.size(), m.tp);
    std::vector<int> dused(d.size()), gused(gt.size());
    for (auto [di, gi] : m.pairs) {
      EXPECT_EQ(++dused[di], 1);
      EXPECT_EQ(++gused[gi], 1);
      EXPECT_LE(std::hypot(d[di].row - gt[gi].row, d[di].col - gt[gi].col), 6.0);
    }
    const std::size_t best = oracle::max_matching(d, gt, 6.0);
    EXPECT_LE(m.tp, best);
    // A greedy maximal matching has at least half the optimum.
    EXPECT_GE(2 * m.tp, best);
  }
}

TEST(Scores, FormulaArithmetic) {
  const EvalReport r = make_report(8, 2, 2, 0.3);
  EXPECT_DOUBLE_EQ(r.precision, 0.8);
  EXPECT_DOUBLE_EQ(r.recall, 0.8);
  EXPECT_DOUBLE_EQ(r.f1, 0.8);
  EXPECT_EQ(r.threshold, 0.3);
}

TEST(Scores, PublishedRowsAreConsistent) {
  EXPECT_NEAR(f1_score(0.803, 0.843), 0.823, 5e-4);
  EXPECT_NEAR(f1_score(0.757, 0.818), 0.786, 5e-4);
}

TEST(Scores, DegenerateCountsAreZero) {
  const EvalReport r = make_report(0, 0, 5);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_EQ(make_report(0, 0, 0).f1, 0.0);
  EXPECT_EQ(f1_score(0.0, 0.0), 0.0);
}

TEST(Scores, HarmonicMeanBounds) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 500; ++t) {
    const EvalReport r = make_report(rng() % 30, rng() % 30, rng() % 30);
    if (r.precision + r.recall == 0.0) continue;
    EXPECT_GE(r.f1, std::min(r.precision, r.recall) - 1e-15);
    EXPECT_LE(r.f1, std::max(r.precision, r.recall) + 1e-15);
  }
}

TEST(Scores, EvaluateIdenticalSetsIsPerfect) {
  const std::vector<Center> gt{{3, 3}, {30, 30}};
  const DetectionSet d{{3, 3, 1.0}, {30, 30, 1.0}};
  EXPECT_EQ(evaluate(d, gt).f1, 1.0);
}

struct SweepFixture {
  std::vector<Tensor> outputs;
  std::vector<std::vector<Center>> gts;
};

SweepFixture sweep_fixture() {
  SweepFixture f;
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 3; ++k) {
    std::vector<Center> c;
    for (int n = 0; n < 6; ++n)
      c.push_back({static_cast<int>(5 + rng() % 54), static_cast<int>(5 + rng() % 54)});
    Tensor y = make_soft_labels(c, 64, 64);
    for (double& v : y.data()) v = 0.9 * v + 0.35 * u(rng);
    f.outputs.push_back(y);
    f.gts.push_back(c);
  }
  return f;
}

TEST(Sweep, MonotoneCountsAndIdentities) {
  const SweepFixture f = sweep_fixture();
  const auto grid = threshold_grid(0.05, 0.95, 0.05);
  ASSERT_EQ(grid.size(), 19u);
  const PrCurve curve = pr_sweep(f.outputs, f.gts, grid);
  ASSERT_EQ(curve.size(), grid.size());
  std::size_t gt_total = 0;
  for (const auto& g : f.gts) gt_total += g.size();
  for (std::size_t k = 0; k < curve.size(); ++k) {
    const PrPoint& p = curve[k];
    EXPECT_DOUBLE_EQ(p.threshold, grid[k]);
    EXPECT_EQ(p.tp + p.fp, p.detections);
    EXPECT_EQ(p.tp + p.fn, gt_total);
    if (k) EXPECT_LE(p.detections, curve[k - 1].detections);
    const EvalReport r = make_report(p.tp, p.fp, p.fn);
    EXPECT_EQ(p.precision, r.precision);
    EXPECT_EQ(p.f1, r.f1);
  }
  const PrPoint best = best_f1(curve);
  for (const auto& p : curve) EXPECT_LE(p.f1, best.f1);
}

TEST(Sweep, MicroPoolsCountsMacroAveragesImages) {
  const SweepFixture f = sweep_fixture();
  const std::vector<double> grid{0.5};
  const PrPoint micro = pr_sweep(f.outputs, f.gts, grid)[0];
  SweepParams macro_params;
  macro_params.averaging = Averaging::kMacro;
  const PrPoint macro = pr_sweep(f.outputs, f.gts, grid, macro_params)[0];
  std::size_t tp = 0, fp = 0, fn = 0;
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t i = 0; i < f.outputs.size(); ++i) {
    const EvalReport r = evaluate(detect(f.outputs[i], 0.5), f.gts[i]);
    tp += r.tp;
    fp += r.fp;
    fn += r.fn;
    p_sum += r.precision;
    r_sum += r.recall;
  }
  EXPECT_EQ(micro.tp, tp);
  EXPECT_DOUBLE_EQ(micro.precision, make_report(tp, fp, fn).precision);
  EXPECT_NEAR(macro.precision, p_sum / 3.0, 1e-15);
  EXPECT_NEAR(macro.recall, r_sum / 3.0, 1e-15);
}

TEST(Sweep, RejectsEmptySetAndUnsortedGrid) {
  const SweepFixture f = sweep_fixture();
  const std::vector<double> ok{0.3}, bad{0.5, 0.3};
  EXPECT_THROW(pr_sweep({}, {}, ok), InvalidArgument);
  EXPECT_THROW(pr_sweep(f.outputs, f.gts, bad), InvalidArgument);
  EXPECT_EQ(pr_sweep(f.outputs, f.gts, ok).size(), 1u);
}

TEST(Sweep, WritesCsvAndGnuplotFiles) {
  const SweepFixture f = sweep_fixture();
  const PrCurve curve = pr_sweep(f.outputs, f.gts, threshold_grid(0.1, 0.9, 0.4));
  testing::TempDir dir;
  write_pr_csv(dir / "pr.csv", curve);
  write_pr_gnuplot(dir / "pr.dat", dir / "pr.gp", curve);
  std::ifstream csv(dir / "pr.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "threshold,precision,recall,f1");
  std::size_t rows = 0;
  for (std::string line; std::getline(csv, line);) rows += !line.empty();
  EXPECT_EQ(rows, curve.size());
  EXPECT_TRUE(std::filesystem::exists(dir / "pr.dat"));
  std::ifstream gp(dir / "pr.gp");
  const std::string script((std::istreambuf_iterator<char>(gp)), {});
  EXPECT_NE(script.find("pr.dat"), std::string::npos);
}

}  // namespace
}  // namespace spcnn
