#include "spcnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <tuple>

#include "spcnn/errors.hpp"

namespace spcnn {

MatchResult match_golden(std::span<const Detection> detections,
                         std::span<const Center> ground_truth, double radius) {
  if (!(radius > 0.0)) throw InvalidArgument("match_golden: radius must be > 0");
  struct Candidate {
    double dist;
    std::size_t det;
    std::size_t gt;
  };
  std::vector<Candidate> cands;
  for (std::size_t d = 0; d < detections.size(); ++d) {
    for (std::size_t g = 0; g < ground_truth.size(); ++g) {
      const double dr = detections[d].row - ground_truth[g].row;
      const double dc = detections[d].col - ground_truth[g].col;
      const double dist = std::sqrt(dr * dr + dc * dc);
      if (dist <= radius) cands.push_back({dist, d, g});
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.dist, a.det, a.gt) < std::tie(b.dist, b.det, b.gt);
  });
  std::vector<char> det_used(detections.size(), 0), gt_used(ground_truth.size(), 0);
  MatchResult m;
  for (const auto& c : cands) {
    if (det_used[c.det] || gt_used[c.gt]) continue;
    det_used[c.det] = gt_used[c.gt] = 1;
    m.pairs.emplace_back(c.det, c.gt);
  }
  m.tp = m.pairs.size();
  m.fp = detections.size() - m.tp;
  m.fn = ground_truth.size() - m.tp;
  return m;
}

double f1_score(double precision, double recall) noexcept {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

EvalReport make_report(std::size_t tp, std::size_t fp, std::size_t fn,
                       double threshold) noexcept {
  EvalReport r{tp, fp, fn, 0.0, 0.0, 0.0, threshold};
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = f1_score(r.precision, r.recall);
  return r;
}

EvalReport evaluate(std::span<const Detection> detections,
                    std::span<const Center> ground_truth, double radius,
                    double threshold) {
  const MatchResult m = match_golden(detections, ground_truth, radius);
  return make_report(m.tp, m.fp, m.fn, threshold);
}

PrCurve pr_sweep(std::span<const Tensor> outputs,
                 std::span<const std::vector<Center>> ground_truth,
                 std::span<const double> thresholds, const SweepParams& params) {
  if (outputs.empty()) throw InvalidArgument("pr_sweep: empty test set");
  if (outputs.size() != ground_truth.size()) {
    throw InvalidArgument("pr_sweep: " + std::to_string(outputs.size()) +
                          " outputs but " + std::to_string(ground_truth.size()) +
                          " ground-truth lists");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw InvalidArgument("pr_sweep: threshold grid must be ascending");
  }
  std::vector<DetectionSet> maxima;
  maxima.reserve(outputs.size());
  for (const auto& y : outputs) maxima.push_back(local_maxima(y, params.nms_radius));

  PrCurve curve;
  for (double t : thresholds) {
    PrPoint pt;
    pt.threshold = t;
    double p_sum = 0.0, r_sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      const DetectionSet dets = filter_by_score(maxima[i], t);
      const MatchResult m = match_golden(dets, ground_truth[i], params.radius);
      pt.tp += m.tp;
      pt.fp += m.fp;
      pt.fn += m.fn;
      pt.detections += dets.size();
      const EvalReport per_image = make_report(m.tp, m.fp, m.fn, t);
      p_sum += per_image.precision;
      r_sum += per_image.recall;
    }
    if (params.averaging == Averaging::kMicro) {
      const EvalReport r = make_report(pt.tp, pt.fp, pt.fn, t);
      pt.precision = r.precision;
      pt.recall = r.recall;
      pt.f1 = r.f1;
    } else {
      const double n = static_cast<double>(outputs.size());
      pt.precision = p_sum / n;
      pt.recall = r_sum / n;
      pt.f1 = f1_score(pt.precision, pt.recall);
    }
    curve.push_back(pt);
  }
  return curve;
}

PrPoint best_f1(const PrCurve& curve) {
  if (curve.empty()) throw InvalidArgument("best_f1: empty curve");
  PrPoint best = curve.front();
  for (const auto& p : curve) {
    if (p.f1 > best.f1) best = p;
  }
  return best;
}

void write_pr_csv(const std::filesystem::path& path, const PrCurve& curve) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "threshold,precision,recall,f1\n" << std::setprecision(17);
  for (const auto& p : curve) {
    out << p.threshold << "," << p.precision << "," << p.recall << "," << p.f1 << "\n";
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_pr_gnuplot(const std::filesystem::path& data_path,
                      const std::filesystem::path& script_path, const PrCurve& curve) {
  {
    std::ofstream out(data_path);
    if (!out) throw IoError("cannot write " + data_path.string());
    out << "# threshold precision recall f1\n" << std::setprecision(10);
    for (const auto& p : curve) {
      out << p.threshold << " " << p.precision << " " << p.recall << " " << p.f1 << "\n";
    }
  }
  std::ofstream gp(script_path);
  if (!gp) throw IoError("cannot write " + script_path.string());
  gp << "set terminal pngcairo size 640,480\n"
     << "set output '" << data_path.stem().string() << ".png'\n"
     << "set xlabel 'Recall'\nset ylabel 'Precision'\n"
     << "set xrange [0:1]\nset yrange [0:1]\nset grid\n"
     << "plot '" << data_path.filename().string()
     << "' using 3:2 with linespoints title 'PR curve'\n";
}

std::vector<double> threshold_grid(double first, double last, double step) {
  if (!(step > 0.0) || last < first) {
    throw InvalidArgument("threshold_grid: need step > 0 and last >= first");
  }
  std::vector<double> grid;
  const auto n = static_cast<std::size_t>(std::floor((last - first) / step + 1e-9));
  for (std::size_t k = 0; k <= n; ++k) grid.push_back(first + step * static_cast<double>(k));
  return grid;
}

}  // namespace spcnn
