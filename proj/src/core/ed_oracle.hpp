#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "core/model.hpp"
#include "core/symmetric_mps.hpp"

// Brute-force dense solver used to validate the tensor-network engine at
// small M. Basis convention: site 1 is the least significant bit, so basis
// index i has site k occupied iff bit (k-1) of i is set. The solver favours
// obviousness over speed; only the Lindblad right-hand side uses a
// precomputed entry list to stay within test runtimes.

namespace ll::ed {

inline constexpr int kMaxDenseSites = 12;
inline constexpr int kMaxLindbladSites = 8;

struct DenseState {
  int sites = 0;
  Eigen::VectorXcd amp;

  double norm() const { return amp.norm(); }
  void normalize();
};

DenseState dense_product_state(const std::vector<int>& occupations);

// Expansion of an MPS into the full 2^M amplitude vector.
DenseState from_mps(const SymmetricMps& state);

// Spin-basis Hamiltonian; identical for both statistics (all Jordan-Wigner
// strings cancel in hopping and density terms).
Eigen::MatrixXcd dense_hamiltonian(const HamiltonianSpec& spec);

// sigma^- at `site`, with the explicit string sign for fermions.
Eigen::MatrixXcd dense_loss_operator(int sites, int site, Species species);
// number operator at `site` (dephasing jump), statistics independent.
Eigen::MatrixXcd dense_dephase_operator(int sites, int site);
std::vector<Eigen::MatrixXcd> dense_jump_operators(int sites, const std::vector<JumpChannel>& channels,
                                                   Species species);

// In-place jump application; returns the jump weight <J^dag J> of the input
// (the squared norm of the unnormalized output given a normalized input).
double apply_loss_dense(DenseState& state, int site, Species species);
double apply_dephase_dense(DenseState& state, int site);

// Fixed-step RK4 integration of the Schroedinger equation.
void evolve_state_rk4(DenseState& state, const HamiltonianSpec& spec, double t, double dt);

// Same, under the effective Hamiltonian H - (i/2) sum_m gamma_m n_m; the
// decaying norm is kept (no-jump probability).
void evolve_effective_rk4(DenseState& state, const HamiltonianSpec& spec,
                          const std::vector<JumpChannel>& channels, double t, double dt);

Eigen::VectorXd densities(const DenseState& state);
Eigen::VectorXd densities(const Eigen::MatrixXcd& rho, int sites);
double total_number(const DenseState& state);

// Von Neumann entropy of the left block reduced density matrix at `cut`
// (cut c separates sites 1..c from c+1..M). Pure states only.
double entanglement_entropy(const DenseState& state, int cut);

// Fixed-step RK4 integration of the master equation. `sampler` is invoked
// with (step, time, rho) at step 0 and after every step. Throws an
// integrator-failure error if the trace drifts by more than 1e-6.
void integrate_master_equation(Eigen::MatrixXcd& rho, const HamiltonianSpec& spec,
                               const std::vector<JumpChannel>& channels, Species species, double t_max,
                               double dt,
                               const std::function<void(int step, double t, const Eigen::MatrixXcd& rho)>& sampler);

}  // namespace ll::ed
