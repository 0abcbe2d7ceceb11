#include <cmath>
#include <cstring>

#include "core/ed_oracle.hpp"
#include "core/trajectories.hpp"
#include "doctest.h"

using namespace ll;

namespace {

TrajectoryConfig base_config(int sites, std::vector<int> occ, double gamma_loss, double gamma_deph,
                             double t_max, int n_samples, double dt = 0.001) {
  TrajectoryConfig c;
  c.hamiltonian = {sites, 1.0, 0.0, {}};
  c.occupations = std::move(occ);
  c.channels = build_jump_channels(DissipationSpec::uniform(sites, gamma_loss, gamma_deph),
                                   Species::hard_core_boson);
  c.numerics = {32, dt, 1e-12, 2};
  c.t_max = t_max;
  c.sample_times = snapshot_grid(GridKind::regular, t_max, n_samples, 0);
  return c;
}

}  // namespace

TEST_CASE("zero dissipation reproduces the closed TEBD run exactly") {
  auto cfg = base_config(8, {1, 0, 1, 0, 1, 0, 1, 0}, 0.0, 0.0, 1.0, 5);
  auto record = run_trajectory(cfg, 42);
  CHECK(record.jumps.empty());

  auto st = SymmetricMps::product_state(cfg.occupations);
  TebdPlan plan(build_hamiltonian_terms(cfg.hamiltonian), {}, 8, cfg.numerics);
  for (int k = 0; k < 1000; ++k) {
    plan.step(st);
    st.normalize();
  }
  CHECK((record.samples.back().density - st.all_densities()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("fixed seed reruns are bit-identical") {
  auto cfg = base_config(4, {1, 1, 0, 1}, 0.3, 0.1, 2.0, 9, 0.005);
  auto a = run_trajectory(cfg, 1234);
  auto b = run_trajectory(cfg, 1234);
  REQUIRE(a.jumps.size() == b.jumps.size());
  for (size_t i = 0; i < a.jumps.size(); ++i) {
    CHECK(a.jumps[i].time == b.jumps[i].time);
    CHECK(a.jumps[i].site == b.jumps[i].site);
    CHECK(a.jumps[i].kind == b.jumps[i].kind);
  }
  for (size_t i = 0; i < a.samples.size(); ++i) {
    CHECK(std::memcmp(a.samples[i].density.data(), b.samples[i].density.data(),
                      sizeof(double) * static_cast<size_t>(a.samples[i].density.size())) == 0);
    CHECK(a.samples[i].total_number == b.samples[i].total_number);
  }
  CHECK(a.jumps.size() > 0);
}

TEST_CASE("ensemble results are independent of the worker count") {
  auto cfg = base_config(3, {1, 0, 1}, 0.5, 0.0, 1.0, 4, 0.005);
  auto serial = run_ensemble(cfg, 12, 7, 1);
  auto parallel = run_ensemble(cfg, 12, 7, 4);
  REQUIRE(serial.size() == parallel.size());
  for (size_t k = 0; k < serial.size(); ++k) {
    CHECK(serial[k].jumps.size() == parallel[k].jumps.size());
    for (size_t i = 0; i < serial[k].samples.size(); ++i)
      CHECK((serial[k].samples[i].density - parallel[k].samples[i].density).cwiseAbs().maxCoeff() ==
            0.0);
  }
}

TEST_CASE("uniform loss ensemble decays exponentially") {
  // two sites, one particle: <n_T>(t) = exp(-gamma t)
  const double gamma = 0.5;
  auto cfg = base_config(2, {1, 0}, gamma, 0.0, 2.0, 5, 0.002);
  auto records = run_ensemble(cfg, 600, 11, 0);
  auto series = ensemble_average(records, [](const TrajectorySample& s) { return s.total_number; });
  for (size_t i = 0; i < series.times.size(); ++i) {
    const double expect = std::exp(-gamma * series.times[i]);
    const double margin = 3.0 * std::max(series.sem[i], 1e-12);
    CHECK(std::abs(series.mean[i] - expect) <= margin + 0.01 * expect);
  }
}

TEST_CASE("per-trajectory bookkeeping invariants") {
  auto cfg = base_config(4, {1, 0, 1, 1}, 0.4, 0.3, 2.5, 11, 0.005);
  auto records = run_ensemble(cfg, 24, 3, 2);
  for (const auto& rec : records) {
    // jump times are non-decreasing
    for (size_t i = 1; i < rec.jumps.size(); ++i) CHECK(rec.jumps[i - 1].time <= rec.jumps[i].time);
    // n_T is non-increasing and drops by exactly one at loss jumps
    for (size_t i = 1; i < rec.samples.size(); ++i) {
      const double before = rec.samples[i - 1].total_number;
      const double after = rec.samples[i].total_number;
      CHECK(after <= before + 1e-12);
      int losses = 0;
      for (const auto& j : rec.jumps)
        if (j.kind == JumpChannel::Kind::loss && j.time > rec.samples[i - 1].time &&
            j.time <= rec.samples[i].time + 1e-12)
          ++losses;
      CHECK(before - after == doctest::Approx(losses).epsilon(1e-12));
    }
  }
}

TEST_CASE("dephasing-only trajectories conserve the particle number") {
  auto cfg = base_config(4, {1, 0, 1, 0}, 0.0, 0.8, 2.0, 6, 0.005);
  auto records = run_ensemble(cfg, 16, 21, 2);
  int jumps_seen = 0;
  for (const auto& rec : records) {
    jumps_seen += static_cast<int>(rec.jumps.size());
    for (const auto& s : rec.samples) CHECK(s.total_number == 2.0);
    for (const auto& j : rec.jumps) CHECK(j.kind == JumpChannel::Kind::dephase);
  }
  CHECK(jumps_seen > 0);
}

TEST_CASE("trajectory ensemble matches the Lindblad oracle on a small lattice") {
  const int m = 4;
  std::vector<int> occ{1, 0, 1, 0};
  const double gamma = 0.25, t_max = 2.0;
  auto cfg = base_config(m, occ, gamma, 0.0, t_max, 9, 0.002);
  const int n_traj = 400;

  for (auto sp : {Species::hard_core_boson, Species::spinless_fermion}) {
    cfg.species = sp;
    auto records = run_ensemble(cfg, n_traj, 1000, 0);

    std::vector<Eigen::VectorXd> ed_density;
    auto st = ed::dense_product_state(occ);
    Eigen::MatrixXcd rho = st.amp * st.amp.adjoint();
    std::vector<long> sample_steps;
    for (double t : cfg.sample_times) sample_steps.push_back(std::lround(t / cfg.numerics.dt));
    ed::integrate_master_equation(rho, cfg.hamiltonian, cfg.channels, sp, t_max, cfg.numerics.dt,
                                  [&](int step, double, const Eigen::MatrixXcd& r) {
                                    for (long s : sample_steps)
                                      if (s == step) ed_density.push_back(ed::densities(r, m));
                                  });
    REQUIRE(ed_density.size() == cfg.sample_times.size());

    for (int site = 1; site <= m; ++site) {
      auto series = ensemble_average(
          records, [site](const TrajectorySample& s) { return s.density[site - 1]; });
      int ok = 0;
      for (size_t i = 0; i < series.times.size(); ++i) {
        const double margin = 3.0 * std::max(series.sem[i], 1e-12) + 2e-3;
        if (std::abs(series.mean[i] - ed_density[i][site - 1]) <= margin) ++ok;
      }
      CHECK(ok >= static_cast<int>(0.88 * static_cast<double>(series.times.size())));
    }
  }
}

TEST_CASE("ensemble averaging is associative") {
  auto cfg = base_config(3, {1, 1, 0}, 0.4, 0.0, 1.0, 5, 0.005);
  auto records = run_ensemble(cfg, 40, 5, 2);
  auto whole = ensemble_average(records, [](const TrajectorySample& s) { return s.imbalance; });

  SeriesAccumulator left, right;
  auto sel = SampleSelector([](const TrajectorySample& s) { return s.imbalance; });
  for (int k = 0; k < 20; ++k) left.add(records[static_cast<size_t>(k)], sel);
  for (int k = 20; k < 40; ++k) right.add(records[static_cast<size_t>(k)], sel);
  left.merge(right);
  auto merged = left.finish();
  for (size_t i = 0; i < whole.times.size(); ++i) {
    CHECK(whole.mean[i] == doctest::Approx(merged.mean[i]).epsilon(1e-12));
    CHECK(whole.sem[i] == doctest::Approx(merged.sem[i]).epsilon(1e-12));
  }

  // two records with values 0 and 1 -> mean 0.5, sem 0.5
  TrajectoryRecord r0, r1;
  TrajectorySample s0, s1;
  s0.time = s1.time = 0.0;
  s0.density = Eigen::VectorXd::Zero(1);
  s1.density = Eigen::VectorXd::Ones(1);
  r0.samples = {s0};
  r1.samples = {s1};
  auto tiny = ensemble_average({r0, r1}, [](const TrajectorySample& s) { return s.density[0]; });
  CHECK(tiny.mean[0] == doctest::Approx(0.5));
  CHECK(tiny.sem[0] == doctest::Approx(0.5));
}

TEST_CASE("mismatched grids are rejected") {
  auto cfg = base_config(3, {1, 0, 1}, 0.2, 0.0, 1.0, 4, 0.005);
  auto a = run_trajectory(cfg, 1);
  cfg.sample_times = snapshot_grid(GridKind::regular, 1.0, 5, 0);
  auto b = run_trajectory(cfg, 2);
  CHECK_THROWS_AS(ensemble_average({a, b}, [](const TrajectorySample& s) { return s.total_number; }),
                  Error);
}

TEST_CASE("snapshot grids") {
  auto reg = snapshot_grid(GridKind::regular, 2.0, 5, 0);
  CHECK(reg == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});

  auto r1 = snapshot_grid(GridKind::random, 20.0, 1000, 99);
  auto r2 = snapshot_grid(GridKind::random, 20.0, 1000, 99);
  CHECK(r1 == r2);
  CHECK(std::is_sorted(r1.begin(), r1.end()));
  // empirical CDF close to uniform (KS statistic)
  double ks = 0.0;
  for (size_t i = 0; i < r1.size(); ++i) {
    const double f = r1[i] / 20.0;
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / 1000.0));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / 1000.0));
  }
  CHECK(ks < 0.05);
}

TEST_CASE("oversized jump probability per step is a configuration error") {
  auto cfg = base_config(4, {1, 1, 1, 1}, 10.0, 0.0, 0.1, 2, 0.01);
  CHECK_THROWS_AS(run_trajectory(cfg, 1), Error);
}

TEST_CASE("states stay normalized through effective steps") {
  auto cfg = base_config(4, {1, 1, 0, 1}, 0.5, 0.2, 0.0, 1, 0.005);
  auto terms = build_hamiltonian_terms(cfg.hamiltonian);
  TebdPlan plan(terms, cfg.channels, 4, cfg.numerics);
  auto st = SymmetricMps::product_state(cfg.occupations);
  Rng rng(7);
  int jumps = 0;
  for (int k = 0; k < 400; ++k) {
    auto j = effective_step(st, plan, cfg.channels, k * cfg.numerics.dt, Species::hard_core_boson, rng);
    if (j) ++jumps;
    CHECK(st.norm() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(st.sites() == 4);
}
