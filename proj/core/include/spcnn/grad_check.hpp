#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "spcnn/config.hpp"

namespace spcnn {

// Relative error with an absolute floor tied to the function's magnitude,
// so entries whose true derivative is ~0 are judged against finite-
// difference round-off rather than against zero:
//   |a - n| / max(|a|, |n|, 1e-6 * max(1, |f|))
double gradient_rel_error(double analytic, double numeric, double f_scale) noexcept;

// Central difference (f(x + eps) - f(x - eps)) / (2 eps) of entry `k` of
// `values`, restoring the entry afterwards.
double central_difference(std::span<double> values, std::size_t k, double eps,
                           const std::function<double()>& f);

struct GradCheckOptions {
  std::size_t seeds = 20;
  double eps = 1e-5;
  double tolerance = 1e-4;
  // Negate the analytic prior gradient; the report must then fail.
  bool flip_prior_sign = false;
};

struct GradCheckRow {
  enum class Status { kPass, kFail, kSkipped };

  std::string component;
  Status status = Status::kSkipped;
  double max_rel_error = 0.0;
  std::size_t checked = 0;  // entries compared
  std::size_t excluded = 0;  // entries whose perturbation crossed a kink
  std::string note;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  double seconds = 0.0;

  bool passed() const noexcept;
};

// Finite-difference audit of conv2d, relu, max-pool, hadamard, the full
// network, the prior term and the total loss over options.seeds random
// instances starting at `seed`. Prior rows are skipped when cfg.lambda == 0.
GradCheckReport grad_check(const TrainConfig& cfg, std::uint64_t seed,
                           const GradCheckOptions& options = {});

void print_report(std::ostream& os, const GradCheckReport& report, double tolerance);

}  // namespace spcnn
