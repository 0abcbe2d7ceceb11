#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "core/model.hpp"
#include "core/observables.hpp"
#include "core/symmetric_mps.hpp"
#include "core/tebd.hpp"

// Stochastic unraveling of the master equation into pure-state quantum
// trajectories (first-order jump scheme): per step, jump with probability
// sum_m gamma_m <n_m> dt, otherwise evolve one Trotter step under
// H - (i/2) sum_m gamma_m n_m and renormalize.

namespace ll {

struct JumpEvent {
  double time = 0.0;
  int site = 0;
  JumpChannel::Kind kind = JumpChannel::Kind::loss;
};

struct TrajectorySample {
  double time = 0.0;
  Eigen::VectorXd density;
  double total_number = 0.0;
  double imbalance = 0.0;
  Eigen::VectorXd fluctuation;  // n - n^2 per site
  std::vector<double> entropy;  // per cut; empty unless requested
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  std::vector<JumpEvent> jumps;
  std::vector<TrajectorySample> samples;
  double discarded_weight = 0.0;
  int max_bond = 1;
  long steps = 0;
};

struct TrajectoryConfig {
  HamiltonianSpec hamiltonian;
  Species species = Species::hard_core_boson;
  std::vector<int> occupations;
  std::vector<JumpChannel> channels;
  NumericsSpec numerics;
  double t_max = 0.0;
  std::vector<double> sample_times;  // snapped to the nearest completed step
  bool record_entropy = false;
};

// One step of the unraveling. Draws a single uniform number: r below the
// total jump probability selects a channel proportionally to its
// gamma_m <n_m> dt, anything else is a no-jump Trotter step. The state is
// renormalized in both branches. Returns the jump if one occured; the
// event time is the end of the step.
std::optional<JumpEvent> effective_step(SymmetricMps& state, const TebdPlan& plan,
                                        const std::vector<JumpChannel>& channels, double t_now,
                                        Species species, Rng& rng, double* discarded = nullptr);

// Deterministic given (config, seed): identical inputs give a bit-identical
// record regardless of what runs concurrently.
TrajectoryRecord run_trajectory(const TrajectoryConfig& config, std::uint64_t seed);

// Trajectory k uses seed base_seed + k; records are returned in index order
// independent of the worker count.
std::vector<TrajectoryRecord> run_ensemble(const TrajectoryConfig& config, int n_traj,
                                           std::uint64_t base_seed, int threads);

struct ObservableSeries {
  std::vector<double> times;
  std::vector<double> mean;
  std::vector<double> sem;
  int n_traj = 0;
};

using SampleSelector = std::function<double(const TrajectorySample&)>;

// Pointwise mean and standard error over records sharing one grid. The
// accumulation is a sum / sum-of-squares merge, so it is associative and
// order independent.
class SeriesAccumulator {
public:
  void add(const TrajectoryRecord& record, const SampleSelector& selector);
  void merge(const SeriesAccumulator& other);
  ObservableSeries finish() const;

private:
  std::vector<double> times_, sum_, sumsq_;
  int count_ = 0;
};

ObservableSeries ensemble_average(const std::vector<TrajectoryRecord>& records,
                                  const SampleSelector& selector);

enum class GridKind { regular, random };

// regular: equispaced including both endpoints; random: sorted uniform
// draws, reproducible from the seed.
std::vector<double> snapshot_grid(GridKind kind, double t_max, int count, std::uint64_t seed);

// Small fan-out helper used for trajectory ensembles.
void parallel_for(int n, int threads, const std::function<void(int)>& fn);

}  // namespace ll
