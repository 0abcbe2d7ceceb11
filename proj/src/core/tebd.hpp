#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <vector>

#include "core/model.hpp"
#include "core/symmetric_mps.hpp"

namespace ll {

struct NumericsSpec {
  int bond_dim = 100;      // D
  double dt = 0.001;       // Trotter step, units 1/J
  double trunc_tol = 1e-12;  // relative squared-weight threshold
  int trotter_order = 2;

  void validate() const;
};

// Precompiled Trotter gates for one step of exp(-i dt H_eff) with
// H_eff = H - (i/2) sum_m gamma_m n_m. Site generators (potential and the
// anti-Hermitian decay term) are folded into adjacent bond generators with
// weight 1/2 on interior sites and weight 1 at the chain ends.
//
// Second order is a Strang split over the even/odd bond grouping: a half
// step over odd bonds (left to right), a full step over even bonds (right
// to left), then another odd half step.
class TebdPlan {
public:
  TebdPlan(const HamiltonianTerms& terms, const std::vector<JumpChannel>& channels, int sites,
           const NumericsSpec& numerics);

  struct TruncationLedger {
    double discarded = 0.0;        // sum of per-gate relative discarded weights
    double amplitude_bound = 0.0;  // sum of per-gate sqrt(w); (sum)^2 bounds 1-F
    void add(double w) {
      discarded += w;
      amplitude_bound += std::sqrt(std::max(w, 0.0));
    }
  };

  // One Trotter step; returns the accumulated relative discarded weight.
  // The norm is left untouched: unitary plans preserve it (including a
  // rescale after truncation), decaying plans shrink it physically.
  double step(SymmetricMps& state, TruncationLedger* ledger = nullptr) const;

  bool unitary() const { return unitary_; }
  double dt() const { return numerics_.dt; }
  const Eigen::Matrix4cd& half_gate(int bond) const { return half_[static_cast<size_t>(bond - 1)]; }
  const Eigen::Matrix4cd& full_gate(int bond) const { return full_[static_cast<size_t>(bond - 1)]; }

private:
  double sweep(SymmetricMps& state, const std::vector<int>& bonds,
               const std::vector<Eigen::Matrix4cd>& gates, bool ascending,
               TruncationLedger* ledger) const;

  int sites_ = 0;
  bool unitary_ = true;
  NumericsSpec numerics_;
  std::vector<Eigen::Matrix4cd> half_, full_;  // indexed by bond-1
  std::vector<int> odd_, even_;                // 1-based bond indices
};

// <H> from the raw (unfolded) term list.
std::complex<double> energy_expectation(SymmetricMps& state, const HamiltonianTerms& terms);

}  // namespace ll
