#include "core/tebd.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace ll {

namespace {
using cplx = std::complex<double>;

Eigen::Matrix4cd kron_left(const Eigen::Matrix2cd& g) {  // g (x) I
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int a = 0; a < 2; ++a)
    for (int c = 0; c < 2; ++c)
      for (int b = 0; b < 2; ++b) out(2 * a + b, 2 * c + b) = g(a, c);
  return out;
}

Eigen::Matrix4cd kron_right(const Eigen::Matrix2cd& g) {  // I (x) g
  Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
  for (int b = 0; b < 2; ++b)
    for (int d = 0; d < 2; ++d)
      for (int a = 0; a < 2; ++a) out(2 * a + b, 2 * a + d) = g(b, d);
  return out;
}

}  // namespace

void NumericsSpec::validate() const {
  require(bond_dim >= 1, ErrorCode::invalid_spec, "numerics.bond_dim must be >= 1");
  require(dt > 0.0, ErrorCode::invalid_spec, "numerics.dt must be positive");
  require(trunc_tol >= 0.0, ErrorCode::invalid_spec, "numerics.trunc_tol must be >= 0");
  require(trotter_order == 1 || trotter_order == 2, ErrorCode::invalid_spec,
          "numerics.trotter_order must be 1 or 2");
}

TebdPlan::TebdPlan(const HamiltonianTerms& terms, const std::vector<JumpChannel>& channels, int sites,
                   const NumericsSpec& numerics)
    : sites_(sites), numerics_(numerics) {
  numerics.validate();
  require(sites >= 2, ErrorCode::invalid_spec, "TEBD needs at least 2 sites");

  std::vector<Eigen::Matrix2cd> site_gen(static_cast<size_t>(sites) + 1, Eigen::Matrix2cd::Zero());
  for (const auto& st : terms.sites) {
    require(st.site >= 1 && st.site <= sites, ErrorCode::invalid_spec, "site term out of range");
    site_gen[static_cast<size_t>(st.site)] += st.h.cast<cplx>();
  }
  for (const auto& ch : channels) {
    require(ch.site >= 1 && ch.site <= sites, ErrorCode::invalid_spec, "channel site out of range");
    if (ch.rate == 0.0) continue;
    site_gen[static_cast<size_t>(ch.site)](1, 1) += cplx(0.0, -0.5 * ch.rate);  // -i/2 gamma n
    unitary_ = false;
  }

  std::vector<Eigen::Matrix4cd> gen(static_cast<size_t>(sites - 1), Eigen::Matrix4cd::Zero());
  for (const auto& bt : terms.bonds) {
    require(bt.site >= 1 && bt.site <= sites - 1, ErrorCode::invalid_spec, "bond term out of range");
    gen[static_cast<size_t>(bt.site - 1)] += bt.h.cast<cplx>();
  }
  for (int b = 1; b <= sites - 1; ++b) {
    const double wl = (b == 1) ? 1.0 : 0.5;
    const double wr = (b + 1 == sites) ? 1.0 : 0.5;
    gen[static_cast<size_t>(b - 1)] += wl * kron_left(site_gen[static_cast<size_t>(b)]) +
                                       wr * kron_right(site_gen[static_cast<size_t>(b + 1)]);
  }

  half_.resize(gen.size());
  full_.resize(gen.size());
  const cplx mi(0.0, -1.0);
  for (size_t i = 0; i < gen.size(); ++i) {
    half_[i] = (mi * (0.5 * numerics_.dt) * gen[i]).exp();
    full_[i] = (mi * numerics_.dt * gen[i]).exp();
  }
  for (int b = 1; b <= sites - 1; ++b) (b % 2 == 1 ? odd_ : even_).push_back(b);
}

double TebdPlan::sweep(SymmetricMps& state, const std::vector<int>& bonds,
                       const std::vector<Eigen::Matrix4cd>& gates, bool ascending,
                       TruncationLedger* ledger) const {
  GateOptions opt;
  opt.max_bond = numerics_.bond_dim;
  opt.trunc_tol = numerics_.trunc_tol;
  opt.renormalize = unitary_;
  opt.move_right = ascending;
  double discarded = 0.0;
  auto apply = [&](int b) {
    const double w = state.apply_two_site_gate(b, gates[static_cast<size_t>(b - 1)], opt);
    discarded += w;
    if (ledger) ledger->add(w);
  };
  if (ascending) {
    for (int b : bonds) apply(b);
  } else {
    for (auto it = bonds.rbegin(); it != bonds.rend(); ++it) apply(*it);
  }
  return discarded;
}

double TebdPlan::step(SymmetricMps& state, TruncationLedger* ledger) const {
  double discarded = 0.0;
  if (numerics_.trotter_order == 2) {
    discarded += sweep(state, odd_, half_, true, ledger);
    discarded += sweep(state, even_, full_, false, ledger);
    discarded += sweep(state, odd_, half_, true, ledger);
  } else {
    discarded += sweep(state, odd_, full_, true, ledger);
    discarded += sweep(state, even_, full_, false, ledger);
  }
  return discarded;
}

std::complex<double> energy_expectation(SymmetricMps& state, const HamiltonianTerms& terms) {
  cplx e(0.0, 0.0);
  for (const auto& bt : terms.bonds) e += state.expectation_bond(bt.site, bt.h.cast<cplx>());
  for (const auto& st : terms.sites) {
    const double n = state.local_density(st.site);
    e += st.h(1, 1) * n + st.h(0, 0) * (1.0 - n);
  }
  return e;
}

}  // namespace ll
