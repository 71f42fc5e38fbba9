#include "repute/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "repute/error.hpp"

namespace repute::metrics {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error(ErrorCode::InvalidField, "spearman needs equal-length samples");
  }
  if (x.size() < 2) return 0.0;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double gini(std::span<const double> values) {
  std::vector<double> v;
  v.reserve(values.size());
  for (double x : values) v.push_back(std::max(x, 0.0));
  std::sort(v.begin(), v.end());
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  if (v.empty() || total <= 0.0) return 0.0;
  // Sorted form of sum_ij |x_i - x_j| / (2 n sum).
  const double n = static_cast<double>(v.size());
  double weighted = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * v[i];
  }
  return std::clamp(weighted / (n * total), 0.0, 1.0);
}

double entropy(std::span<const double> values) {
  double total = 0.0;
  for (double x : values) total += std::max(x, 0.0);
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double x : values) {
    const double p = std::max(x, 0.0) / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

}  // namespace repute::metrics
