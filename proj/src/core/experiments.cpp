#include "core/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "core/ed_oracle.hpp"
#include "core/jw_jump.hpp"

namespace ll {

namespace {

double weighted_diff(double a, double b) {
  const double denom = a + b;
  if (std::abs(denom) < 1e-12) return 0.0;
  return (a - b) / denom;
}

double jackknife_sem(const std::vector<double>& leave_one_out) {
  const double k = static_cast<double>(leave_one_out.size());
  if (k < 2.0) return 0.0;
  double mean = 0.0;
  for (double v : leave_one_out) mean += v;
  mean /= k;
  double ss = 0.0;
  for (double v : leave_one_out) ss += (v - mean) * (v - mean);
  return std::sqrt(std::max(0.0, (k - 1.0) / k * ss));
}

int middle_site(int sites) { return (sites % 2 == 0) ? sites / 2 : (sites + 1) / 2; }

SpeciesEnsembleResult assemble_ensemble(const std::vector<TrajectoryRecord>& records, int sites,
                                        int block_window) {
  SpeciesEnsembleResult out;
  const int k = static_cast<int>(records.size());
  require(k >= 2, ErrorCode::invalid_spec, "ensemble statistics need at least 2 trajectories");
  const size_t t_count = records[0].samples.size();
  out.n_traj = k;
  out.times.reserve(t_count);
  for (const auto& s : records[0].samples) out.times.push_back(s.time);

  const int mid = middle_site(sites);
  out.middle_density =
      ensemble_average(records, [mid](const TrajectorySample& s) { return s.density[mid - 1]; });
  out.total_number =
      ensemble_average(records, [](const TrajectorySample& s) { return s.total_number; });

  out.density_mean = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t_count), sites);
  out.density_sem = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(t_count), sites);
  for (int site = 0; site < sites; ++site) {
    auto series =
        ensemble_average(records, [site](const TrajectorySample& s) { return s.density[site]; });
    for (size_t i = 0; i < t_count; ++i) {
      out.density_mean(static_cast<Eigen::Index>(i), site) = series.mean[i];
      out.density_sem(static_cast<Eigen::Index>(i), site) = series.sem[i];
    }
  }

  // Imbalance and total fluctuations of the ensemble-averaged state, with
  // leave-one-out (jackknife) errors. Averaging the per-trajectory ratio
  // instead would carry a Jensen bias relative to the master equation.
  out.imbalance.times = out.times;
  out.imbalance.n_traj = k;
  out.fluctuations.times = out.times;
  out.fluctuations.n_traj = k;
  std::vector<std::vector<double>> loo_imbalance(t_count);  // per time, per left-out record
  std::vector<double> loo(static_cast<size_t>(k));
  for (size_t i = 0; i < t_count; ++i) {
    double odd = 0.0, even = 0.0;
    Eigen::VectorXd mean_density = Eigen::VectorXd::Zero(sites);
    for (const auto& rec : records) mean_density += rec.samples[i].density;
    for (int s = 0; s < sites; ++s) ((s % 2 == 0) ? odd : even) += mean_density[s];
    out.imbalance.mean.push_back(weighted_diff(odd, even));
    out.fluctuations.mean.push_back(total_fluctuations(mean_density / k));

    loo_imbalance[i].resize(static_cast<size_t>(k));
    for (int r = 0; r < k; ++r) {
      double o_r = 0.0, e_r = 0.0;
      const auto& d = records[static_cast<size_t>(r)].samples[i].density;
      for (int s = 0; s < sites; ++s) ((s % 2 == 0) ? o_r : e_r) += d[s];
      loo_imbalance[i][static_cast<size_t>(r)] = weighted_diff(odd - o_r, even - e_r);
      loo[static_cast<size_t>(r)] = total_fluctuations((mean_density - d) / (k - 1));
    }
    out.imbalance.sem.push_back(jackknife_sem(loo_imbalance[i]));
    out.fluctuations.sem.push_back(jackknife_sem(loo));
  }

  if (block_window >= 1 && static_cast<size_t>(block_window) <= t_count) {
    auto block = time_block_imbalance(out.times, out.imbalance.mean, block_window);
    out.imbalance_blockavg.times = block.times;
    out.imbalance_blockavg.mean = block.value;
    out.imbalance_blockavg.n_traj = k;
    // jackknife over whole leave-one-out imbalance series
    const size_t w_count = block.value.size();
    std::vector<double> jsum(w_count, 0.0), jsumsq(w_count, 0.0);
    std::vector<double> series(t_count);
    for (int r = 0; r < k; ++r) {
      for (size_t i = 0; i < t_count; ++i) series[i] = loo_imbalance[i][static_cast<size_t>(r)];
      auto jb = time_block_imbalance(out.times, series, block_window);
      for (size_t i = 0; i < w_count; ++i) {
        jsum[i] += jb.value[i];
        jsumsq[i] += jb.value[i] * jb.value[i];
      }
    }
    out.imbalance_blockavg.sem.resize(w_count);
    const double kd = static_cast<double>(k);
    for (size_t i = 0; i < w_count; ++i) {
      const double mean = jsum[i] / kd;
      const double ss = std::max(0.0, jsumsq[i] - kd * mean * mean);
      out.imbalance_blockavg.sem[i] = std::sqrt((kd - 1.0) / kd * ss);
    }
  }

  for (const auto& rec : records) {
    out.discarded_weight += rec.discarded_weight;
    out.max_bond = std::max(out.max_bond, rec.max_bond);
    out.total_jumps += static_cast<long>(rec.jumps.size());
  }
  return out;
}

}  // namespace

DeterministicRunResult run_deterministic(const DeterministicConfig& config) {
  config.hamiltonian.validate();
  config.numerics.validate();
  config.schedule.validate(config.hamiltonian.sites);
  require(config.t_max > 0.0, ErrorCode::invalid_spec, "deterministic.t_max must be positive");
  require(config.sample_dt > 0.0, ErrorCode::invalid_spec, "deterministic.sample_dt must be positive");

  const int m = config.hamiltonian.sites;
  const double dt = config.numerics.dt;
  const long steps = std::lround(config.t_max / dt);

  std::vector<std::pair<long, int>> events;  // (step, site)
  for (const auto& ev : config.schedule.events)
    events.push_back({std::clamp(std::lround(ev.time / dt), 0L, steps), ev.site});

  const int n_samples = static_cast<int>(std::floor(config.t_max / config.sample_dt + 0.5)) + 1;
  std::vector<double> sample_times;
  std::vector<long> sample_steps;
  for (int i = 0; i < n_samples; ++i) {
    const double t = i * config.sample_dt;
    sample_times.push_back(t);
    sample_steps.push_back(std::clamp(std::lround(t / dt), 0L, steps));
  }

  auto terms = build_hamiltonian_terms(config.hamiltonian);
  TebdPlan plan(terms, {}, m, config.numerics);
  auto boson = SymmetricMps::product_state(config.occupations);
  auto fermion = boson;

  DeterministicRunResult out;
  out.times = sample_times;
  out.steps = steps;
  const auto t_rows = static_cast<Eigen::Index>(sample_times.size());
  out.boson.density = Eigen::MatrixXd::Zero(t_rows, m);
  out.fermion.density = Eigen::MatrixXd::Zero(t_rows, m);
  if (config.entropies) {
    out.boson.entropy = Eigen::MatrixXd::Zero(t_rows, m - 1);
    out.fermion.entropy = Eigen::MatrixXd::Zero(t_rows, m - 1);
  }

  size_t ev_cursor = 0, sample_cursor = 0;
  auto process_step = [&](long step) {
    while (ev_cursor < events.size() && events[ev_cursor].first == step) {
      const int site = events[ev_cursor].second;
      apply_loss(boson, site, Species::hard_core_boson);
      boson.normalize();
      apply_loss(fermion, site, Species::spinless_fermion);
      fermion.normalize();
      ++ev_cursor;
    }
    while (sample_cursor < sample_steps.size() && sample_steps[sample_cursor] == step) {
      const auto row = static_cast<Eigen::Index>(sample_cursor);
      out.boson.density.row(row) = boson.all_densities();
      out.fermion.density.row(row) = fermion.all_densities();
      if (config.entropies) {
        auto sb = boson.all_entropies();
        auto sf = fermion.all_entropies();
        for (int c = 0; c < m - 1; ++c) {
          out.boson.entropy(row, c) = sb[static_cast<size_t>(c)];
          out.fermion.entropy(row, c) = sf[static_cast<size_t>(c)];
        }
      }
      ++sample_cursor;
    }
  };

  process_step(0);
  for (long step = 0; step < steps; ++step) {
    out.boson.discarded_weight += plan.step(boson);
    boson.normalize();
    out.fermion.discarded_weight += plan.step(fermion);
    fermion.normalize();
    out.boson.max_bond = std::max(out.boson.max_bond, boson.bond_dimension());
    out.fermion.max_bond = std::max(out.fermion.max_bond, fermion.bond_dimension());
    process_step(step + 1);
  }

  out.delta_density = Eigen::MatrixXd::Zero(t_rows, m);
  for (Eigen::Index i = 0; i < t_rows; ++i)
    out.delta_density.row(i) =
        delta_n(out.boson.density.row(i).transpose(), out.fermion.density.row(i).transpose());
  if (config.entropies) {
    out.delta_entropy = Eigen::MatrixXd::Zero(t_rows, m - 1);
    for (Eigen::Index i = 0; i < t_rows; ++i)
      for (int c = 0; c < m - 1; ++c)
        out.delta_entropy(i, c) = weighted_diff(out.boson.entropy(i, c), out.fermion.entropy(i, c));
  }
  return out;
}

StochasticRunResult run_stochastic(const StochasticConfig& config) {
  config.hamiltonian.validate();
  config.numerics.validate();
  config.dissipation.validate(config.hamiltonian.sites);
  require(config.n_traj >= 2, ErrorCode::invalid_spec, "stochastic.n_traj must be >= 2");
  require(!config.sample_times.empty(), ErrorCode::invalid_spec, "stochastic run needs sample times");

  StochasticRunResult out;
  out.seeds.reserve(static_cast<size_t>(config.n_traj));
  for (int i = 0; i < config.n_traj; ++i)
    out.seeds.push_back(config.base_seed + static_cast<std::uint64_t>(i));

  TrajectoryConfig traj;
  traj.hamiltonian = config.hamiltonian;
  traj.occupations = config.occupations;
  traj.channels = build_jump_channels(config.dissipation, Species::hard_core_boson);
  traj.numerics = config.numerics;
  traj.t_max = config.t_max;
  traj.sample_times = config.sample_times;
  traj.record_entropy = config.entropies;
  out.steps = std::lround(config.t_max / config.numerics.dt);

  // paired seeds: the same seed list drives both species so that residual
  // Monte-Carlo noise cancels in species comparisons
  if (config.run_boson) {
    traj.species = Species::hard_core_boson;
    auto records = run_ensemble(traj, config.n_traj, config.base_seed, config.threads);
    out.boson = assemble_ensemble(records, config.hamiltonian.sites, config.block_window);
  }
  if (config.run_fermion) {
    traj.species = Species::spinless_fermion;
    auto records = run_ensemble(traj, config.n_traj, config.base_seed, config.threads);
    out.fermion = assemble_ensemble(records, config.hamiltonian.sites, config.block_window);
  }
  return out;
}

LindbladRunResult run_lindblad(const HamiltonianSpec& hamiltonian, const std::vector<int>& occupations,
                               const DissipationSpec& dissipation, Species species, double t_max,
                               double dt, const std::vector<double>& sample_times, int block_window) {
  hamiltonian.validate();
  dissipation.validate(hamiltonian.sites);
  const int m = hamiltonian.sites;
  auto channels = build_jump_channels(dissipation, species);
  auto st = ed::dense_product_state(occupations);
  Eigen::MatrixXcd rho = st.amp * st.amp.adjoint();

  const long steps = std::lround(t_max / dt);
  std::vector<std::pair<long, size_t>> schedule;
  for (size_t i = 0; i < sample_times.size(); ++i)
    schedule.push_back({std::clamp(std::lround(sample_times[i] / dt), 0L, steps), i});
  std::sort(schedule.begin(), schedule.end());

  LindbladRunResult out;
  out.times = sample_times;
  out.density = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sample_times.size()), m);
  out.middle_density.resize(sample_times.size());
  out.total_number.resize(sample_times.size());
  out.fluctuations.resize(sample_times.size());
  out.imbalance.resize(sample_times.size());
  out.dt_times.reserve(static_cast<size_t>(steps) + 1);
  out.dt_imbalance.reserve(static_cast<size_t>(steps) + 1);
  const int mid = middle_site(m);

  size_t cursor = 0;
  ed::integrate_master_equation(rho, hamiltonian, channels, species, t_max, dt,
                                [&](int step, double t, const Eigen::MatrixXcd& r) {
                                  Eigen::VectorXd n = ed::densities(r, m);
                                  out.dt_times.push_back(t);
                                  out.dt_imbalance.push_back(imbalance(n));
                                  while (cursor < schedule.size() && schedule[cursor].first == step) {
                                    const size_t i = schedule[cursor].second;
                                    out.density.row(static_cast<Eigen::Index>(i)) = n;
                                    out.middle_density[i] = n[mid - 1];
                                    out.total_number[i] = n.sum();
                                    out.fluctuations[i] = total_fluctuations(n);
                                    out.imbalance[i] = imbalance(n);
                                    ++cursor;
                                  }
                                });
  if (block_window >= 1 && static_cast<size_t>(block_window) <= out.dt_imbalance.size())
    out.imbalance_blockavg = time_block_imbalance(out.dt_times, out.dt_imbalance, block_window);
  return out;
}

ValidationReport run_validation(const HamiltonianSpec& hamiltonian, const std::vector<int>& occupations,
                                const DissipationSpec& dissipation, const NumericsSpec& numerics,
                                const ValidationOptions& options) {
  require(hamiltonian.sites <= 6, ErrorCode::capacity,
          "validation compares against the full Lindblad oracle; limited to 6 sites, got " +
              std::to_string(hamiltonian.sites));

  StochasticConfig cfg;
  cfg.hamiltonian = hamiltonian;
  cfg.occupations = occupations;
  cfg.dissipation = dissipation;
  cfg.numerics = numerics;
  cfg.t_max = options.t_max;
  cfg.sample_times = snapshot_grid(GridKind::regular, options.t_max, options.grid_count, 0);
  cfg.n_traj = options.n_traj;
  cfg.base_seed = options.base_seed;
  cfg.threads = options.threads;
  cfg.block_window = 0;  // not validated here
  auto ensembles = run_stochastic(cfg);

  std::ostringstream report;
  bool pass = true;
  report << "trajectory-vs-Lindblad validation: M=" << hamiltonian.sites << ", n_traj=" << options.n_traj
         << ", t_max=" << options.t_max << ", " << options.grid_count << " grid times\n";
  report << "criterion: |trajectory - lindblad| <= " << options.sem_factor << "*SEM + " << options.abs_floor
         << " at >= " << options.required_fraction * 100.0 << "% of times\n";

  for (auto species : {Species::hard_core_boson, Species::spinless_fermion}) {
    const auto& ens = species == Species::hard_core_boson ? ensembles.boson : ensembles.fermion;
    auto lind = run_lindblad(hamiltonian, occupations, dissipation, species, options.t_max, numerics.dt,
                             cfg.sample_times, 0);
    struct Row {
      const char* name;
      const ObservableSeries* series;
      const std::vector<double>* reference;
    };
    const Row rows[] = {
        {"middle-site density", &ens->middle_density, &lind.middle_density},
        {"total number", &ens->total_number, &lind.total_number},
        {"imbalance", &ens->imbalance, &lind.imbalance},
        {"total fluctuations/M", &ens->fluctuations, &lind.fluctuations},
    };
    for (const auto& row : rows) {
      int ok = 0;
      double worst = 0.0;
      const size_t n = row.series->times.size();
      for (size_t i = 0; i < n; ++i) {
        const double diff = std::abs(row.series->mean[i] - (*row.reference)[i]);
        const double tol = options.sem_factor * row.series->sem[i] + options.abs_floor;
        if (diff <= tol) ++ok;
        worst = std::max(worst, tol > 0 ? diff / tol : 0.0);
      }
      const double frac = static_cast<double>(ok) / static_cast<double>(n);
      const bool row_pass = frac >= options.required_fraction;
      pass = pass && row_pass;
      report << "  " << species_name(species) << " " << row.name << ": " << ok << "/" << n
             << " within tolerance (worst ratio " << worst << ") -> " << (row_pass ? "pass" : "FAIL")
             << "\n";
    }
  }
  ValidationReport out;
  out.pass = pass;
  out.text = report.str();
  return out;
}

}  // namespace ll
