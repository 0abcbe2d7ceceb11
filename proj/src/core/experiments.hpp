#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "core/model.hpp"
#include "core/observables.hpp"
#include "core/trajectories.hpp"

// Drivers for the two experiment protocols: deterministic losses (two
// species evolved in lockstep, loss events at fixed times and sites) and
// stochastic losses (paired-seed trajectory ensembles per species), plus a
// dense-oracle runner and the trajectory-vs-Lindblad validation suite.

namespace ll {

struct DeterministicConfig {
  HamiltonianSpec hamiltonian;
  std::vector<int> occupations;
  DeterministicLossSchedule schedule;
  NumericsSpec numerics;
  double t_max = 4.0;
  double sample_dt = 0.1;
  bool entropies = true;
};

struct DeterministicSpeciesSeries {
  Eigen::MatrixXd density;  // T x M
  Eigen::MatrixXd entropy;  // T x (M-1); empty when entropies are off
  double discarded_weight = 0.0;
  int max_bond = 1;
};

struct DeterministicRunResult {
  std::vector<double> times;
  DeterministicSpeciesSeries boson, fermion;
  Eigen::MatrixXd delta_density;  // T x M
  Eigen::MatrixXd delta_entropy;  // T x (M-1)
  long steps = 0;
};

DeterministicRunResult run_deterministic(const DeterministicConfig& config);

struct StochasticConfig {
  HamiltonianSpec hamiltonian;
  std::vector<int> occupations;
  DissipationSpec dissipation;
  NumericsSpec numerics;
  double t_max = 20.0;
  std::vector<double> sample_times;
  int n_traj = 100;
  std::uint64_t base_seed = 1;
  int threads = 0;
  int block_window = 300;
  bool entropies = false;
  bool run_boson = true;
  bool run_fermion = true;
};

// Ensemble series per species. Linear observables (middle-site density,
// total number) carry plain mean/SEM; the imbalance and the normalized
// total fluctuations are evaluated on the ensemble-mean densities (the
// estimator that converges to the Lindblad value) with jackknife errors.
struct SpeciesEnsembleResult {
  std::vector<double> times;
  ObservableSeries middle_density;
  ObservableSeries total_number;
  ObservableSeries fluctuations;
  ObservableSeries imbalance;
  ObservableSeries imbalance_blockavg;  // indexed by window start time
  Eigen::MatrixXd density_mean, density_sem;  // T x M
  double discarded_weight = 0.0;
  int max_bond = 1;
  long total_jumps = 0;
  int n_traj = 0;
};

struct StochasticRunResult {
  std::optional<SpeciesEnsembleResult> boson, fermion;
  std::vector<std::uint64_t> seeds;  // shared by both species (paired)
  long steps = 0;
};

StochasticRunResult run_stochastic(const StochasticConfig& config);

// Dense Lindblad run emitting the same series as run_stochastic (SEM = 0),
// plus the per-step imbalance needed for time-block averages on the dt grid.
struct LindbladRunResult {
  std::vector<double> times;
  Eigen::MatrixXd density;  // T x M
  std::vector<double> middle_density, total_number, fluctuations, imbalance;
  std::vector<double> dt_times;          // every integrator step
  std::vector<double> dt_imbalance;      // imbalance on the dt grid
  BlockAveragedSeries imbalance_blockavg;  // window on the dt grid
};

LindbladRunResult run_lindblad(const HamiltonianSpec& hamiltonian, const std::vector<int>& occupations,
                               const DissipationSpec& dissipation, Species species, double t_max,
                               double dt, const std::vector<double>& sample_times, int block_window);

// Trajectory-vs-Lindblad equivalence suite (capacity-limited to M <= 6).
struct ValidationOptions {
  int n_traj = 200;
  double t_max = 5.0;
  int grid_count = 25;
  std::uint64_t base_seed = 1;
  int threads = 0;
  double sem_factor = 4.0;
  double abs_floor = 5e-3;
  double required_fraction = 0.85;
};

struct ValidationReport {
  bool pass = false;
  std::string text;
};

ValidationReport run_validation(const HamiltonianSpec& hamiltonian, const std::vector<int>& occupations,
                                const DissipationSpec& dissipation, const NumericsSpec& numerics,
                                const ValidationOptions& options);

}  // namespace ll
