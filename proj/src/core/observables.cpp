#include "core/observables.hpp"

#include <cmath>

namespace ll {

namespace {
constexpr double kZeroDenominator = 1e-12;

double weighted_difference(double a, double b) {
  const double denom = a + b;
  if (std::abs(denom) < kZeroDenominator) return 0.0;
  return (a - b) / denom;
}
}  // namespace

Eigen::VectorXd delta_n(const Eigen::VectorXd& nb, const Eigen::VectorXd& nf) {
  require(nb.size() == nf.size(), ErrorCode::grid_mismatch, "density vectors differ in length");
  Eigen::VectorXd out(nb.size());
  for (Eigen::Index i = 0; i < nb.size(); ++i) out[i] = weighted_difference(nb[i], nf[i]);
  return out;
}

std::vector<double> delta_entropy(const std::vector<double>& sb, const std::vector<double>& sf) {
  require(sb.size() == sf.size(), ErrorCode::grid_mismatch, "entropy vectors differ in length");
  std::vector<double> out(sb.size());
  for (size_t i = 0; i < sb.size(); ++i) out[i] = weighted_difference(sb[i], sf[i]);
  return out;
}

double imbalance(const Eigen::VectorXd& density) {
  require(density.size() >= 1, ErrorCode::invalid_spec, "imbalance of an empty lattice");
  double odd = 0.0, even = 0.0;
  for (Eigen::Index i = 0; i < density.size(); ++i) ((i % 2 == 0) ? odd : even) += density[i];
  return weighted_difference(odd, even);
}

double total_fluctuations(const Eigen::VectorXd& density) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < density.size(); ++i) s += density[i] - density[i] * density[i];
  return s / static_cast<double>(density.size());
}

BlockAveragedSeries time_block_imbalance(const std::vector<double>& times,
                                         const std::vector<double>& imbalance_series, int window) {
  require(window >= 1, ErrorCode::invalid_spec, "block window must be >= 1");
  require(times.size() == imbalance_series.size(), ErrorCode::grid_mismatch,
          "imbalance series and time grid differ in length");
  require(imbalance_series.size() >= static_cast<size_t>(window), ErrorCode::invalid_spec,
          "block window longer than the series");
  BlockAveragedSeries out;
  const size_t n = imbalance_series.size() - static_cast<size_t>(window) + 1;
  out.times.reserve(n);
  out.value.reserve(n);
  double acc = 0.0;
  for (size_t i = 0; i < static_cast<size_t>(window); ++i) acc += std::abs(imbalance_series[i]);
  for (size_t start = 0;; ++start) {
    out.times.push_back(times[start]);
    out.value.push_back(acc / window);
    if (start + 1 >= n) break;
    acc += std::abs(imbalance_series[start + window]) - std::abs(imbalance_series[start]);
  }
  return out;
}

}  // namespace ll
