#pragma once

// Distribution statistics used by the simulator reports.

#include <span>
#include <vector>

namespace repute::metrics {

/// 1-based ranks; ties share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation (Pearson over average ranks). Returns 0 when
/// either side has no spread or fewer than two points are given.
double spearman(std::span<const double> x, std::span<const double> y);

/// Gini coefficient of max(v, 0). Zero for empty or all-zero input.
double gini(std::span<const double> values);

/// Shannon entropy in bits of max(v, 0) / sum. Zero for all-zero input.
double entropy(std::span<const double> values);

}  // namespace repute::metrics
