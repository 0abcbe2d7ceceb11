#include "core/trajectories.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "core/jw_jump.hpp"

namespace ll {

namespace {

// Uniform per-kind rates allow the total jump probability to be read off
// the exact particle number instead of a full density sweep.
struct RateSummary {
  bool uniform = false;
  double loss = 0.0;
  double dephase = 0.0;
};

RateSummary summarize_rates(const std::vector<JumpChannel>& channels, int sites) {
  RateSummary r;
  int n_loss = 0, n_deph = 0;
  double gl = -1.0, gd = -1.0;
  bool mixed = false;
  for (const auto& ch : channels) {
    if (ch.kind == JumpChannel::Kind::loss) {
      if (gl < 0.0)
        gl = ch.rate;
      else if (gl != ch.rate)
        mixed = true;
      ++n_loss;
    } else {
      if (gd < 0.0)
        gd = ch.rate;
      else if (gd != ch.rate)
        mixed = true;
      ++n_deph;
    }
  }
  if (mixed || (n_loss != 0 && n_loss != sites) || (n_deph != 0 && n_deph != sites)) return r;
  r.uniform = true;
  r.loss = n_loss ? gl : 0.0;
  r.dephase = n_deph ? gd : 0.0;
  return r;
}

}  // namespace

std::optional<JumpEvent> effective_step(SymmetricMps& state, const TebdPlan& plan,
                                        const std::vector<JumpChannel>& channels, double t_now,
                                        Species species, Rng& rng, double* discarded) {
  const double dt = plan.dt();
  const RateSummary rates = summarize_rates(channels, state.sites());
  Eigen::VectorXd density;
  bool have_density = false;
  double total_dp = 0.0;
  if (rates.uniform) {
    total_dp = (rates.loss + rates.dephase) * static_cast<double>(state.total_number()) * dt;
  } else {
    density = state.all_densities();
    have_density = true;
    for (const auto& ch : channels) total_dp += ch.rate * density[ch.site - 1] * dt;
  }
  require(total_dp <= 0.1, ErrorCode::config,
          "per-step jump probability " + std::to_string(total_dp) +
              " exceeds 0.1; reduce numerics.dt");

  const double r = rng.uniform();
  if (r >= total_dp) {
    const double w = plan.step(state);
    if (discarded) *discarded += w;
    state.normalize();
    return std::nullopt;
  }

  if (!have_density) density = state.all_densities();
  double cum = 0.0;
  const JumpChannel* pick = nullptr;
  const JumpChannel* last_positive = nullptr;
  for (const auto& ch : channels) {
    const double dp = ch.rate * density[ch.site - 1] * dt;
    if (dp <= 0.0) continue;
    last_positive = &ch;
    if (r < cum + dp) {
      pick = &ch;
      break;
    }
    cum += dp;
  }
  if (!pick) pick = last_positive;  // rounding guard at the top of the window
  require(pick != nullptr, ErrorCode::internal, "jump selected with no populated channel");

  if (pick->kind == JumpChannel::Kind::loss)
    apply_loss(state, pick->site, species);
  else
    apply_dephasing_jump(state, pick->site);
  state.normalize();
  return JumpEvent{t_now + dt, pick->site, pick->kind};
}

namespace {

TrajectorySample measure(SymmetricMps& state, double t, bool entropies) {
  TrajectorySample s;
  s.time = t;
  s.density = state.all_densities();
  s.total_number = static_cast<double>(state.total_number());
  s.imbalance = imbalance(s.density);
  s.fluctuation = s.density.array() - s.density.array().square();
  if (entropies) s.entropy = state.all_entropies();
  return s;
}

}  // namespace

TrajectoryRecord run_trajectory(const TrajectoryConfig& config, std::uint64_t seed) {
  config.hamiltonian.validate();
  config.numerics.validate();
  require(config.t_max >= 0.0, ErrorCode::invalid_spec, "t_max must be >= 0");
  const double dt = config.numerics.dt;
  const long steps = std::lround(config.t_max / dt);

  // snap sample times to completed steps
  std::vector<std::pair<long, size_t>> schedule;
  for (size_t i = 0; i < config.sample_times.size(); ++i) {
    const double t = config.sample_times[i];
    require(t >= 0.0 && t <= config.t_max + 0.5 * dt, ErrorCode::invalid_spec,
            "sample time outside [0, t_max]");
    schedule.push_back({std::clamp(std::lround(t / dt), 0L, steps), i});
  }
  std::sort(schedule.begin(), schedule.end());

  auto terms = build_hamiltonian_terms(config.hamiltonian);
  TebdPlan plan(terms, config.channels, config.hamiltonian.sites, config.numerics);
  auto state = SymmetricMps::product_state(config.occupations);
  Rng rng(seed);

  TrajectoryRecord record;
  record.seed = seed;
  record.samples.resize(config.sample_times.size());
  size_t cursor = 0;
  auto emit = [&](long step) {
    if (cursor < schedule.size() && schedule[cursor].first == step) {
      auto sample = measure(state, config.sample_times[schedule[cursor].second], config.record_entropy);
      while (cursor < schedule.size() && schedule[cursor].first == step) {
        sample.time = config.sample_times[schedule[cursor].second];
        record.samples[schedule[cursor].second] = sample;
        ++cursor;
      }
    }
  };

  emit(0);
  for (long k = 0; k < steps; ++k) {
    auto jump = effective_step(state, plan, config.channels, k * dt, config.species, rng,
                               &record.discarded_weight);
    if (jump) record.jumps.push_back(*jump);
    record.max_bond = std::max(record.max_bond, state.bond_dimension());
    emit(k + 1);
  }
  record.steps = steps;
  return record;
}

void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(threads));
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::vector<TrajectoryRecord> run_ensemble(const TrajectoryConfig& config, int n_traj,
                                           std::uint64_t base_seed, int threads) {
  require(n_traj >= 1, ErrorCode::invalid_spec, "need at least one trajectory");
  std::vector<TrajectoryRecord> records(static_cast<size_t>(n_traj));
  parallel_for(n_traj, threads, [&](int k) {
    records[static_cast<size_t>(k)] = run_trajectory(config, base_seed + static_cast<std::uint64_t>(k));
  });
  return records;
}

void SeriesAccumulator::add(const TrajectoryRecord& record, const SampleSelector& selector) {
  if (count_ == 0 && times_.empty()) {
    times_.reserve(record.samples.size());
    for (const auto& s : record.samples) times_.push_back(s.time);
    sum_.assign(times_.size(), 0.0);
    sumsq_.assign(times_.size(), 0.0);
  }
  require(record.samples.size() == times_.size(), ErrorCode::grid_mismatch,
          "record sampled on a different grid");
  for (size_t i = 0; i < times_.size(); ++i) {
    require(record.samples[i].time == times_[i], ErrorCode::grid_mismatch,
            "record sampled on a different grid");
    const double v = selector(record.samples[i]);
    sum_[i] += v;
    sumsq_[i] += v * v;
  }
  ++count_;
}

void SeriesAccumulator::merge(const SeriesAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  require(times_ == other.times_, ErrorCode::grid_mismatch, "accumulators on different grids");
  for (size_t i = 0; i < times_.size(); ++i) {
    sum_[i] += other.sum_[i];
    sumsq_[i] += other.sumsq_[i];
  }
  count_ += other.count_;
}

ObservableSeries SeriesAccumulator::finish() const {
  require(count_ >= 2, ErrorCode::invalid_spec, "ensemble statistics need at least 2 records");
  ObservableSeries out;
  out.times = times_;
  out.n_traj = count_;
  out.mean.resize(times_.size());
  out.sem.resize(times_.size());
  const double n = static_cast<double>(count_);
  for (size_t i = 0; i < times_.size(); ++i) {
    const double mean = sum_[i] / n;
    const double var = std::max(0.0, (sumsq_[i] - n * mean * mean) / (n - 1.0));
    out.mean[i] = mean;
    out.sem[i] = std::sqrt(var / n);
  }
  return out;
}

ObservableSeries ensemble_average(const std::vector<TrajectoryRecord>& records,
                                  const SampleSelector& selector) {
  require(records.size() >= 2, ErrorCode::invalid_spec, "ensemble_average needs >= 2 records");
  SeriesAccumulator acc;
  for (const auto& r : records) acc.add(r, selector);
  return acc.finish();
}

std::vector<double> snapshot_grid(GridKind kind, double t_max, int count, std::uint64_t seed) {
  require(count >= 1, ErrorCode::invalid_spec, "grid needs at least one point");
  require(t_max >= 0.0, ErrorCode::invalid_spec, "t_max must be >= 0");
  std::vector<double> times;
  times.reserve(static_cast<size_t>(count));
  if (kind == GridKind::regular) {
    if (count == 1) {
      times.push_back(0.0);
    } else {
      for (int i = 0; i < count; ++i)
        times.push_back(t_max * static_cast<double>(i) / static_cast<double>(count - 1));
    }
  } else {
    Rng rng(seed);
    for (int i = 0; i < count; ++i) times.push_back(t_max * rng.uniform());
    std::sort(times.begin(), times.end());
  }
  return times;
}

}  // namespace ll
