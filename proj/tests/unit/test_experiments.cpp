#include <cmath>

#include "core/ed_oracle.hpp"
#include "core/experiments.hpp"
#include "doctest.h"

using namespace ll;

TEST_CASE("normalized differences and the 0/0 convention") {
  Eigen::VectorXd nb(3), nf(3);
  nb << 0.5, 0.6, 0.0;
  nf << 0.5, 0.4, 0.0;
  auto d = delta_n(nb, nf);
  CHECK(d[0] == doctest::Approx(0.0));
  CHECK(d[1] == doctest::Approx(0.2));
  CHECK(d[2] == doctest::Approx(0.0));
  Eigen::VectorXd bad(2);
  CHECK_THROWS_AS(delta_n(nb, bad), Error);

  auto ds = delta_entropy({std::log(2.0), 0.0}, {0.0, 0.0});
  CHECK(ds[0] == doctest::Approx(1.0));
  CHECK(ds[1] == doctest::Approx(0.0));
}

TEST_CASE("imbalance of simple patterns") {
  Eigen::VectorXd a(4), b(4), c(4);
  a << 1, 0, 1, 0;
  b << 0.3, 0.3, 0.3, 0.3;
  c << 0, 1, 0, 1;
  CHECK(imbalance(a) == doctest::Approx(1.0));
  CHECK(imbalance(b) == doctest::Approx(0.0));
  CHECK(imbalance(c) == doctest::Approx(-1.0));
  CHECK(imbalance(Eigen::VectorXd::Zero(4)) == doctest::Approx(0.0));
}

TEST_CASE("total fluctuations") {
  Eigen::VectorXd fock(3);
  fock << 1, 0, 1;
  CHECK(total_fluctuations(fock) == doctest::Approx(0.0));
  Eigen::VectorXd spread(2);
  spread << 0.5, 0.5;
  CHECK(total_fluctuations(spread) == doctest::Approx(0.25));
}

TEST_CASE("time-block averaged imbalance") {
  std::vector<double> times{0, 1, 2, 3, 4, 5};
  std::vector<double> constant(6, 0.7);
  auto blk = time_block_imbalance(times, constant, 3);
  REQUIRE(blk.value.size() == 4);
  for (double v : blk.value) CHECK(v == doctest::Approx(0.7));
  CHECK(blk.times.front() == 0.0);

  std::vector<double> alternating{0, 1, 0, 1, 0, 1};
  auto one = time_block_imbalance(times, alternating, 1);
  CHECK(one.value == alternating);
  auto two = time_block_imbalance(times, alternating, 2);
  for (double v : two.value) CHECK(v == doctest::Approx(0.5));

  // absolute values enter the window
  std::vector<double> alt_sign{0.5, -0.5, 0.5, -0.5, 0.5, -0.5};
  auto abs_blk = time_block_imbalance(times, alt_sign, 2);
  for (double v : abs_blk.value) CHECK(v == doctest::Approx(0.5));

  CHECK_THROWS_AS(time_block_imbalance(times, constant, 7), Error);
}

TEST_CASE("single deterministic loss keeps the species identical") {
  DeterministicConfig cfg;
  cfg.hamiltonian = {8, 1.0, 0.0, {}};
  cfg.occupations = std::vector<int>(8, 1);
  cfg.schedule.events = {{0.0, 4}};
  cfg.numerics = {64, 0.001, 1e-12, 2};
  cfg.t_max = 1.0;
  cfg.sample_dt = 0.25;
  auto result = run_deterministic(cfg);
  CHECK(result.delta_density.cwiseAbs().maxCoeff() < 1e-8);
  CHECK(result.delta_entropy.cwiseAbs().maxCoeff() < 1e-8);
  // the hole is actually there and spreads
  CHECK(result.boson.density(0, 3) == doctest::Approx(0.0));
  CHECK(result.boson.density.row(result.times.size() - 1).minCoeff() > 0.0);
}

TEST_CASE("two deterministic losses reproduce the dense protocol and split the species") {
  const int m = 8;
  const double tau0 = 1.5, t_max = 2.5;
  DeterministicConfig cfg;
  cfg.hamiltonian = {m, 1.0, 0.0, {}};
  cfg.occupations = std::vector<int>(m, 1);
  cfg.schedule = DeterministicLossSchedule::two_loss(m, tau0, 0);
  cfg.numerics = {64, 0.001, 0.0, 2};
  cfg.t_max = t_max;
  cfg.sample_dt = 0.5;
  auto result = run_deterministic(cfg);

  // pre-second-loss null result
  for (size_t i = 0; i < result.times.size(); ++i) {
    if (result.times[i] >= tau0) break;
    CHECK(result.delta_density.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(result.delta_entropy.row(static_cast<Eigen::Index>(i)).cwiseAbs().maxCoeff() < 1e-8);
  }
  // nonzero afterwards
  CHECK(result.delta_density.row(result.times.size() - 1).cwiseAbs().maxCoeff() > 1e-3);

  // dense oracle, same snapped protocol
  for (auto sp : {Species::hard_core_boson, Species::spinless_fermion}) {
    auto st = ed::dense_product_state(cfg.occupations);
    ed::apply_loss_dense(st, m / 2, sp);
    st.normalize();
    ed::evolve_state_rk4(st, cfg.hamiltonian, tau0, 0.001);
    ed::apply_loss_dense(st, m / 2, sp);
    st.normalize();
    ed::evolve_state_rk4(st, cfg.hamiltonian, t_max - tau0, 0.001);
    const auto& got = sp == Species::hard_core_boson ? result.boson : result.fermion;
    CHECK((got.density.row(result.times.size() - 1).transpose() - ed::densities(st))
              .cwiseAbs()
              .maxCoeff() < 1e-6);
  }

}

TEST_CASE("losses at the reflection center keep the difference map symmetric") {
  // needs a loss site that is a fixed point of the reflection, i.e. the
  // central site of an odd chain
  const int m = 7, s0 = 4;
  DeterministicConfig cfg;
  cfg.hamiltonian = {m, 1.0, 0.0, {}};
  cfg.occupations = std::vector<int>(m, 1);
  cfg.schedule.events = {{0.0, s0}, {1.0, s0}};
  cfg.numerics = {64, 0.001, 1e-12, 2};
  cfg.t_max = 2.0;
  cfg.sample_dt = 0.25;
  auto result = run_deterministic(cfg);
  CHECK(result.delta_density.cwiseAbs().maxCoeff() > 1e-3);
  for (size_t i = 0; i < result.times.size(); ++i)
    for (int d = 1; s0 - d >= 1 && s0 + d <= m; ++d) {
      const double left = result.delta_density(static_cast<Eigen::Index>(i), s0 - d - 1);
      const double right = result.delta_density(static_cast<Eigen::Index>(i), s0 + d - 1);
      CHECK(std::abs(left - right) < 1e-6);
    }
}

TEST_CASE("half filling maximizes the density difference") {
  // the even-occupied wave keeps the canonical loss site M/2 occupied
  auto run = [](std::vector<int> occ) {
    DeterministicConfig cfg;
    cfg.hamiltonian = {8, 1.0, 0.0, {}};
    cfg.occupations = std::move(occ);
    cfg.schedule = DeterministicLossSchedule::two_loss(8, 1.0, 0);
    cfg.numerics = {64, 0.001, 1e-12, 2};
    cfg.t_max = 2.0;
    cfg.sample_dt = 0.25;
    return run_deterministic(cfg).delta_density.cwiseAbs().maxCoeff();
  };
  const double unit = run({1, 1, 1, 1, 1, 1, 1, 1});
  const double half = run({0, 1, 0, 1, 0, 1, 0, 1});
  CHECK(half > unit);
  CHECK(half > 1e-2);
}

TEST_CASE("a scheduled loss on a deterministically empty site fails loudly") {
  DeterministicConfig cfg;
  cfg.hamiltonian = {4, 1.0, 0.0, {}};
  cfg.occupations = {0, 1, 1, 1};
  cfg.schedule.events = {{0.0, 1}};
  cfg.numerics = {16, 0.001, 1e-12, 2};
  cfg.t_max = 0.5;
  cfg.sample_dt = 0.1;
  CHECK_THROWS_AS(run_deterministic(cfg), Error);
}

TEST_CASE("closed stochastic runs give bit-identical species series") {
  StochasticConfig cfg;
  cfg.hamiltonian = {6, 1.0, 0.0, {}};
  cfg.occupations = {1, 0, 1, 0, 1, 0};
  cfg.dissipation = DissipationSpec::uniform(6, 0.0, 0.0);
  cfg.numerics = {32, 0.005, 1e-12, 2};
  cfg.t_max = 1.0;
  cfg.sample_times = snapshot_grid(GridKind::regular, 1.0, 5, 0);
  cfg.n_traj = 2;
  cfg.base_seed = 9;
  cfg.threads = 2;
  cfg.block_window = 2;
  auto result = run_stochastic(cfg);
  REQUIRE(result.boson.has_value());
  REQUIRE(result.fermion.has_value());
  for (size_t i = 0; i < result.boson->times.size(); ++i) {
    CHECK(result.boson->middle_density.mean[i] == result.fermion->middle_density.mean[i]);
    CHECK(result.boson->imbalance.mean[i] == result.fermion->imbalance.mean[i]);
    CHECK(result.boson->total_number.mean[i] == 3.0);
    CHECK(result.boson->middle_density.sem[i] == 0.0);  // no randomness entered
  }
  CHECK(result.boson->total_jumps == 0);
  CHECK(result.boson->imbalance_blockavg.mean.size() == 4);
}

TEST_CASE("stochastic ensemble tracks the Lindblad oracle including derived series") {
  StochasticConfig cfg;
  cfg.hamiltonian = {4, 1.0, 0.0, {}};
  cfg.occupations = {1, 0, 1, 0};
  cfg.dissipation = DissipationSpec::uniform(4, 0.3, 0.1);
  cfg.numerics = {16, 0.002, 1e-12, 2};
  cfg.t_max = 2.0;
  cfg.sample_times = snapshot_grid(GridKind::regular, 2.0, 9, 0);
  cfg.n_traj = 300;
  cfg.base_seed = 77;
  cfg.threads = 0;
  cfg.block_window = 0;
  cfg.run_fermion = false;
  auto result = run_stochastic(cfg);
  auto lind = run_lindblad(cfg.hamiltonian, cfg.occupations, cfg.dissipation,
                           Species::hard_core_boson, cfg.t_max, cfg.numerics.dt, cfg.sample_times, 0);
  const auto& ens = *result.boson;
  for (size_t i = 0; i < ens.times.size(); ++i) {
    CHECK(std::abs(ens.total_number.mean[i] - lind.total_number[i]) <=
          3.0 * ens.total_number.sem[i] + 5e-3);
    CHECK(std::abs(ens.middle_density.mean[i] - lind.middle_density[i]) <=
          3.0 * ens.middle_density.sem[i] + 5e-3);
    CHECK(std::abs(ens.imbalance.mean[i] - lind.imbalance[i]) <= 3.0 * ens.imbalance.sem[i] + 2e-2);
    CHECK(std::abs(ens.fluctuations.mean[i] - lind.fluctuations[i]) <=
          3.0 * ens.fluctuations.sem[i] + 5e-3);
  }
  CHECK(ens.total_jumps > 0);
}

TEST_CASE("validation suite passes on a small lattice") {
  ValidationOptions opt;
  opt.n_traj = 150;
  opt.t_max = 2.0;
  opt.grid_count = 9;
  opt.base_seed = 5;
  opt.threads = 0;
  auto report = run_validation({4, 1.0, 0.0, {}}, {1, 0, 1, 0}, DissipationSpec::uniform(4, 0.3, 0.0),
                               {16, 0.002, 1e-12, 2}, opt);
  INFO(report.text);
  CHECK(report.pass);
}

TEST_CASE("validation refuses oversized systems") {
  ValidationOptions opt;
  CHECK_THROWS_AS(run_validation({8, 1.0, 0.0, {}}, std::vector<int>(8, 1),
                                 DissipationSpec::uniform(8, 0.1, 0.0), {16, 0.001, 1e-12, 2}, opt),
                  Error);
}
