#pragma once

#include <span>

namespace nowcast::stats {

/// Standard normal CDF via erfc; exact 0.5 at zero.
double normal_cdf(double x);
double student_t_cdf(double x, double dof);

double mean(std::span<const double> x);
double weighted_mean(std::span<const double> x, std::span<const double> w);
double median(std::span<const double> x);
double pearson(std::span<const double> x, std::span<const double> y);
double spearman(std::span<const double> x, std::span<const double> y);

} // namespace nowcast::stats
