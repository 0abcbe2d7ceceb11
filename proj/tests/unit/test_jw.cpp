#include <cmath>
#include <complex>

#include "core/ed_oracle.hpp"
#include "core/jw_jump.hpp"
#include "core/symmetric_mps.hpp"
#include "core/tebd.hpp"
#include "doctest.h"

using namespace ll;
using cplx = std::complex<double>;

namespace {

// (|011> + |110>)/sqrt(2), leftmost digit = site 1
SymmetricMps superposition_011_110() {
  auto st = SymmetricMps::product_state({0, 1, 1});
  const double c = 1.0 / std::sqrt(2.0);
  Eigen::Matrix4cd a = Eigen::Matrix4cd::Identity();
  a(1, 1) = c;
  a(2, 1) = c;
  a(1, 2) = -c;
  a(2, 2) = c;  // |01> -> (|01> + |10>)/sqrt(2)
  Eigen::Matrix4cd b = Eigen::Matrix4cd::Identity();
  b(1, 1) = 0.0;
  b(2, 2) = 0.0;
  b(1, 2) = 1.0;
  b(2, 1) = 1.0;  // swap within the one-particle block
  GateOptions opt;
  st.apply_two_site_gate(1, a, opt);  // c|011> + c|101>
  st.apply_two_site_gate(2, b, opt);  // c|011> + c|110>
  return st;
}

}  // namespace

TEST_CASE("string phase is trivial at the left edge and tracks parity") {
  auto st = SymmetricMps::product_state({1, 1, 0, 1});
  auto s1 = string_phase(st, 1);
  REQUIRE(s1.size() == 1);
  CHECK(s1[0].sign == 1);
  auto s3 = string_phase(st, 3);
  REQUIRE(s3.size() == 1);
  CHECK(s3[0].charge == 2);
  CHECK(s3[0].sign == 1);  // (-1)^2
  auto s4 = string_phase(st, 4);
  CHECK(s4[0].charge == 2);
  CHECK(s4[0].sign == 1);
}

TEST_CASE("string phase splits by sector on a superposition") {
  auto st = superposition_011_110();
  auto signs = string_phase(st, 2);
  REQUIRE(signs.size() == 2);
  CHECK(signs[0].charge == 0);
  CHECK(signs[0].sign == 1);
  CHECK(signs[1].charge == 1);
  CHECK(signs[1].sign == -1);
}

TEST_CASE("loss from unit filling is statistics independent") {
  for (auto sp : {Species::hard_core_boson, Species::spinless_fermion}) {
    auto st = SymmetricMps::product_state({1, 1, 1, 1});
    const double w = apply_loss(st, 2, sp);
    CHECK(w == doctest::Approx(1.0));
    st.normalize();
    auto n = st.all_densities();
    CHECK(n[0] == doctest::Approx(1.0));
    CHECK(n[1] == doctest::Approx(0.0));
    CHECK(n[2] == doctest::Approx(1.0));
    CHECK(n[3] == doctest::Approx(1.0));
    CHECK(st.total_number() == 3);
  }
}

TEST_CASE("fermionic loss flips the odd-sector sign on a superposition") {
  // (|011> + |110>)/sqrt(2), loss at site 2:
  // boson -> (|001> + |100>)/sqrt(2); fermion -> (|001> - |100>)/sqrt(2)
  auto boson = superposition_011_110();
  auto fermion = boson;
  const double wb = apply_loss(boson, 2, Species::hard_core_boson);
  const double wf = apply_loss(fermion, 2, Species::spinless_fermion);
  CHECK(wb == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(wf == doctest::Approx(1.0).epsilon(1e-12));
  auto db = ed::from_mps(boson);
  auto df = ed::from_mps(fermion);
  // |001>: site3 occupied -> index 4; |100>: site1 occupied -> index 1
  const cplx b4 = db.amp[4], b1 = db.amp[1];
  const cplx f4 = df.amp[4], f1 = df.amp[1];
  CHECK(std::abs(b4 - f4) < 1e-12);
  CHECK(std::abs(b1 + f1) < 1e-12);  // relative sign flip
  CHECK(std::abs(std::abs(b1) - 1.0 / std::sqrt(2.0)) < 1e-12);
  // densities agree at the instant of the jump
  CHECK((boson.all_densities() - fermion.all_densities()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("species diverge under evolution after a loss from a superposition") {
  auto run = [&](Species sp) {
    auto st = superposition_011_110();
    apply_loss(st, 2, sp);
    st.normalize();
    HamiltonianSpec spec{3, 1.0, 0.0, {}};
    TebdPlan plan(build_hamiltonian_terms(spec), {}, 3, {64, 0.001, 1e-12, 2});
    for (int k = 0; k < 800; ++k) plan.step(st);
    return st.all_densities();
  };
  auto nb = run(Species::hard_core_boson);
  auto nf = run(Species::spinless_fermion);
  // ED oracle for the same protocol
  auto dense_run = [&](Species sp) {
    Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(8);
    amp[6] = 1.0 / std::sqrt(2.0);  // |011>: sites 2,3 occupied
    amp[3] = 1.0 / std::sqrt(2.0);  // |110>: sites 1,2 occupied
    ed::DenseState st{3, amp};
    ed::apply_loss_dense(st, 2, sp);
    st.normalize();
    ed::evolve_state_rk4(st, {3, 1.0, 0.0, {}}, 0.8, 0.001);
    return ed::densities(st);
  };
  CHECK((nb - dense_run(Species::hard_core_boson)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((nf - dense_run(Species::spinless_fermion)).cwiseAbs().maxCoeff() < 1e-7);
  CHECK((nb - nf).cwiseAbs().maxCoeff() > 1e-2);
}

TEST_CASE("loss on an empty site raises an annihilated-state error") {
  auto st = SymmetricMps::product_state({0, 1});
  CHECK_THROWS_AS(apply_loss(st, 1, Species::hard_core_boson), Error);
}

TEST_CASE("dephasing jump projects onto the occupied component") {
  auto st = SymmetricMps::product_state({1, 0});
  Eigen::Matrix4cd g = Eigen::Matrix4cd::Identity();
  const double c = 1.0 / std::sqrt(2.0);
  g(1, 1) = c;
  g(2, 2) = c;
  g(1, 2) = c;
  g(2, 1) = -c;
  GateOptions opt;
  st.apply_two_site_gate(1, g, opt);  // (|10> - |01>)/sqrt(2) up to phases
  const double w = apply_dephasing_jump(st, 1);
  CHECK(w == doctest::Approx(0.5).epsilon(1e-12));
  st.normalize();
  CHECK(st.local_density(1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(st.total_number() == 1);

  auto fock = SymmetricMps::product_state({1, 1, 0});
  const double wf = apply_dephasing_jump(fock, 2);
  CHECK(wf == doctest::Approx(1.0));
}

TEST_CASE("dephasing jump matches the dense projection on a scrambled state") {
  Rng rng(42);
  std::vector<int> occ{1, 0, 1, 1, 0, 1};
  auto st = SymmetricMps::product_state(occ);
  HamiltonianSpec spec{6, 1.0, 0.5, {}};
  TebdPlan plan(build_hamiltonian_terms(spec), {}, 6, {64, 0.01, 1e-14, 2});
  for (int k = 0; k < 100; ++k) plan.step(st);
  st.normalize();
  auto dense = ed::from_mps(st);
  const double w = apply_dephasing_jump(st, 3);
  st.normalize();
  const double wd = ed::apply_dephase_dense(dense, 3);
  dense.normalize();
  CHECK(w == doctest::Approx(wd).epsilon(1e-10));
  CHECK((st.all_densities() - ed::densities(dense)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("string signs alone do not change any density") {
  Rng rng(7);
  std::vector<int> occ{1, 0, 1, 1, 0};
  auto st = SymmetricMps::product_state(occ);
  HamiltonianSpec spec{5, 1.0, 0.0, {}};
  TebdPlan plan(build_hamiltonian_terms(spec), {}, 5, {32, 0.01, 1e-14, 2});
  for (int k = 0; k < 60; ++k) plan.step(st);
  st.normalize();
  auto boson = st;
  auto fermion = st;
  const double wb = apply_loss(boson, 3, Species::hard_core_boson);
  const double wf = apply_loss(fermion, 3, Species::spinless_fermion);
  CHECK(wb == doctest::Approx(wf).epsilon(1e-12));
  boson.normalize();
  fermion.normalize();
  CHECK((boson.all_densities() - fermion.all_densities()).cwiseAbs().maxCoeff() < 1e-10);
  for (int c = 1; c <= 4; ++c)
    CHECK(boson.entanglement_entropy(c) == doctest::Approx(fermion.entanglement_entropy(c)).epsilon(1e-9));
}

TEST_CASE("fermionic mps loss equals the explicit dense string operator") {
  for (std::uint64_t seed : {1u, 9u}) {
    Rng rng(seed);
    std::vector<int> occ{1, 1, 0, 1, 0, 1, 1, 0};
    auto st = SymmetricMps::product_state(occ);
    HamiltonianSpec spec{8, 1.0, 0.3, {}};
    TebdPlan plan(build_hamiltonian_terms(spec), {}, 8, {64, 0.01, 1e-14, 2});
    for (int k = 0; k < 80; ++k) plan.step(st);
    st.normalize();
    const int site = 1 + static_cast<int>(rng.uniform() * 8);
    auto dense = ed::from_mps(st);
    Eigen::VectorXcd expect = ed::dense_loss_operator(8, site, Species::spinless_fermion) * dense.amp;
    apply_loss(st, site, Species::spinless_fermion);
    auto got = ed::from_mps(st);
    CHECK((got.amp - expect).cwiseAbs().maxCoeff() < 1e-10);
  }
}
