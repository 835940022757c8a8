#pragma once

#include <cstddef>
#include <span>

namespace glassmem::stats {

double mean(std::span<const double> xs);
/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> xs);
double standard_error(std::span<const double> xs);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_err = 0.0;
  double intercept_err = 0.0;
};

/// Ordinary least squares y = slope * x + intercept. Requires at least two distinct x.
LineFit fit_line(std::span<const double> xs, std::span<const double> ys);

}  // namespace glassmem::stats
