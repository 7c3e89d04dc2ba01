#pragma once

#include <span>
#include <vector>

namespace memnet {

double mean(std::span<const double> values);

/// Sample standard deviation (n - 1 denominator); 0 for fewer than two values.
double stddev(std::span<const double> values);

double median(std::vector<double> values);

/// mean - z * sd / sqrt(n) with z = 1.6449 (one-sided 95% normal bound).
double lower_confidence_bound(std::span<const double> values);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Ordinary least squares y = slope * x + intercept.
LineFit fit_line(std::span<const double> x, std::span<const double> y);

/// Slope of log(y) against log(x).
double loglog_slope(std::span<const double> x, std::span<const double> y);

}  // namespace memnet
