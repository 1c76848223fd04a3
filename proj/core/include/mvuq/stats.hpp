#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mvuq::stats {

inline constexpr double kPi = 3.14159265358979323846;

double normal_pdf(double z);
double normal_cdf(double z);
/// Inverse standard-normal CDF, p in (0, 1).
double normal_quantile(double p);

double mean(std::span<const double> x);
/// Sample variance (n - 1 denominator); 0 for fewer than two values.
double variance(std::span<const double> x);
double sample_sd(std::span<const double> x);
double pearson(std::span<const double> a, std::span<const double> b);

/// Type-7 (linear interpolation) quantile of already sorted data.
double quantile_sorted(std::span<const double> sorted, double p);

/// Seeded permutation of 0..n-1 (Fisher-Yates over mt19937_64).
std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed);

}  // namespace mvuq::stats
