#pragma once

#include <Eigen/Dense>
#include <vector>

#include "core/common.hpp"

// Density-derived observables. All normalized differences use the 0/0 -> 0
// convention (denominator below 1e-12).

namespace ll {

// (nb - nf) / (nb + nf), elementwise
Eigen::VectorXd delta_n(const Eigen::VectorXd& nb, const Eigen::VectorXd& nf);

// (Sb - Sf) / (Sb + Sf), per cut
std::vector<double> delta_entropy(const std::vector<double>& sb, const std::vector<double>& sf);

// odd-even imbalance (n_odd - n_even) / (n_odd + n_even), 1-based sites
double imbalance(const Eigen::VectorXd& density);

// sum_i (<n_i> - <n_i>^2) / M; uses <n^2> = <n> for local dimension 2
double total_fluctuations(const Eigen::VectorXd& density);

// sliding-window mean of |I| over `window` consecutive samples; the result
// is indexed by the window start time
struct BlockAveragedSeries {
  std::vector<double> times;
  std::vector<double> value;
};
BlockAveragedSeries time_block_imbalance(const std::vector<double>& times,
                                         const std::vector<double>& imbalance_series, int window);

}  // namespace ll
