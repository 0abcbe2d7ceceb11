#include "core/ed_oracle.hpp"

#include <bit>
#include <cmath>
#include <complex>

namespace ll::ed {

namespace {

using cplx = std::complex<double>;

void check_capacity(int sites, int limit, const char* what) {
  require(sites >= 1 && sites <= limit, ErrorCode::capacity,
          std::string(what) + ": dense solver limited to " + std::to_string(limit) + " sites, got " +
              std::to_string(sites));
}

int dim_of(int sites) { return 1 << sites; }

// String sign of lowering site with bit index b on basis state i:
// parity of the occupation of all lower bits.
inline double string_sign(int i, int b) {
  return (std::popcount(static_cast<unsigned>(i) & ((1u << b) - 1u)) & 1) ? -1.0 : 1.0;
}

// Sparse column representation of H for the structured products below.
struct HamiltonianAction {
  int dim = 0;
  Eigen::VectorXd diag;
  // per column c: list of (row j, amplitude) with H(j, c) = amplitude
  std::vector<std::vector<std::pair<int, double>>> offdiag;
};

HamiltonianAction build_action(const HamiltonianSpec& spec) {
  HamiltonianAction act;
  act.dim = dim_of(spec.sites);
  act.diag = Eigen::VectorXd::Zero(act.dim);
  act.offdiag.assign(static_cast<size_t>(act.dim), {});
  for (int i = 0; i < act.dim; ++i) {
    double d = 0.0;
    for (int s = 0; s < spec.sites; ++s) {
      if (i & (1 << s)) d += spec.eps(s + 1);
      if (s + 1 < spec.sites && (i & (1 << s)) && (i & (1 << (s + 1)))) d += spec.interaction;
    }
    act.diag[i] = d;
  }
  for (int s = 0; s + 1 < spec.sites; ++s) {
    const int mask = (1 << s) | (1 << (s + 1));
    for (int i = 0; i < act.dim; ++i) {
      const int bits = i & mask;
      if (bits == (1 << s) || bits == (1 << (s + 1))) {
        const int j = i ^ mask;
        act.offdiag[static_cast<size_t>(i)].push_back({j, -spec.tunneling});
      }
    }
  }
  return act;
}

// out = H * v
void apply_action(const HamiltonianAction& act, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
  out = act.diag.array() * v.array();
  for (int c = 0; c < act.dim; ++c)
    for (const auto& [j, amp] : act.offdiag[static_cast<size_t>(c)]) out[j] += amp * v[c];
}

}  // namespace

void DenseState::normalize() {
  double n = amp.norm();
  require(n > 1e-14, ErrorCode::annihilated_state, "dense state has zero norm");
  amp /= n;
}

DenseState dense_product_state(const std::vector<int>& occupations) {
  const int sites = static_cast<int>(occupations.size());
  check_capacity(sites, kMaxDenseSites, "dense_product_state");
  int index = 0;
  for (int s = 0; s < sites; ++s) {
    require(occupations[static_cast<size_t>(s)] == 0 || occupations[static_cast<size_t>(s)] == 1,
            ErrorCode::invalid_spec, "occupations must be 0 or 1");
    if (occupations[static_cast<size_t>(s)]) index |= 1 << s;
  }
  DenseState st;
  st.sites = sites;
  st.amp = Eigen::VectorXcd::Zero(dim_of(sites));
  st.amp[index] = 1.0;
  return st;
}

DenseState from_mps(const SymmetricMps& state) {
  const int m = state.sites();
  check_capacity(m, kMaxDenseSites, "from_mps");
  Eigen::MatrixXcd cur = Eigen::MatrixXcd::Ones(1, 1);
  for (int s = 1; s <= m; ++s) {
    const auto& lb = state.bond(s - 1);
    const auto& rb = state.bond(s);
    std::vector<int> loff(static_cast<size_t>(lb.count()) + 1, 0);
    for (int i = 0; i < lb.count(); ++i)
      loff[static_cast<size_t>(i) + 1] = loff[static_cast<size_t>(i)] + lb.dim[static_cast<size_t>(i)];
    std::vector<int> roff(static_cast<size_t>(rb.count()) + 1, 0);
    for (int i = 0; i < rb.count(); ++i)
      roff[static_cast<size_t>(i) + 1] = roff[static_cast<size_t>(i)] + rb.dim[static_cast<size_t>(i)];
    const int prefixes = 1 << (s - 1);
    Eigen::MatrixXcd next = Eigen::MatrixXcd::Zero(2 * prefixes, rb.total_dim());
    for (const auto& blk : state.site_blocks(s))
      next.block(blk.occ * prefixes, roff[static_cast<size_t>(blk.right)], prefixes,
                 rb.dim[static_cast<size_t>(blk.right)]) +=
          cur.middleCols(loff[static_cast<size_t>(blk.left)], lb.dim[static_cast<size_t>(blk.left)]) *
          blk.a;
    cur = std::move(next);
  }
  DenseState out;
  out.sites = m;
  out.amp = cur.col(0);
  return out;
}

Eigen::MatrixXcd dense_hamiltonian(const HamiltonianSpec& spec) {
  spec.validate();
  check_capacity(spec.sites, kMaxDenseSites, "dense_hamiltonian");
  HamiltonianAction act = build_action(spec);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(act.dim, act.dim);
  for (int i = 0; i < act.dim; ++i) h(i, i) = act.diag[i];
  for (int c = 0; c < act.dim; ++c)
    for (const auto& [j, amp] : act.offdiag[static_cast<size_t>(c)]) h(j, c) += amp;
  return h;
}

Eigen::MatrixXcd dense_loss_operator(int sites, int site, Species species) {
  check_capacity(sites, kMaxDenseSites, "dense_loss_operator");
  require(site >= 1 && site <= sites, ErrorCode::invalid_spec, "loss site out of range");
  const int dim = dim_of(sites);
  const int b = site - 1;
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i) {
    if (!(i & (1 << b))) continue;
    double sign = species == Species::spinless_fermion ? string_sign(i, b) : 1.0;
    op(i ^ (1 << b), i) = sign;
  }
  return op;
}

Eigen::MatrixXcd dense_dephase_operator(int sites, int site) {
  check_capacity(sites, kMaxDenseSites, "dense_dephase_operator");
  require(site >= 1 && site <= sites, ErrorCode::invalid_spec, "dephase site out of range");
  const int dim = dim_of(sites);
  Eigen::MatrixXcd op = Eigen::MatrixXcd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    if (i & (1 << (site - 1))) op(i, i) = 1.0;
  return op;
}

std::vector<Eigen::MatrixXcd> dense_jump_operators(int sites, const std::vector<JumpChannel>& channels,
                                                   Species species) {
  std::vector<Eigen::MatrixXcd> ops;
  ops.reserve(channels.size());
  for (const auto& ch : channels)
    ops.push_back(ch.kind == JumpChannel::Kind::loss ? dense_loss_operator(sites, ch.site, species)
                                                     : dense_dephase_operator(sites, ch.site));
  return ops;
}

double apply_loss_dense(DenseState& state, int site, Species species) {
  require(site >= 1 && site <= state.sites, ErrorCode::invalid_spec, "loss site out of range");
  const int b = site - 1;
  const int dim = dim_of(state.sites);
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    if (!(i & (1 << b))) continue;
    double sign = species == Species::spinless_fermion ? string_sign(i, b) : 1.0;
    out[i ^ (1 << b)] = sign * state.amp[i];
  }
  double weight = out.squaredNorm() / state.amp.squaredNorm();
  require(weight >= 1e-14, ErrorCode::annihilated_state,
          "loss on site " + std::to_string(site) + " annihilates the state");
  state.amp = std::move(out);
  return weight;
}

double apply_dephase_dense(DenseState& state, int site) {
  require(site >= 1 && site <= state.sites, ErrorCode::invalid_spec, "dephase site out of range");
  const int b = site - 1;
  const int dim = dim_of(state.sites);
  for (int i = 0; i < dim; ++i)
    if (!(i & (1 << b))) state.amp[i] = 0.0;
  double weight = state.amp.squaredNorm();
  require(weight >= 1e-14, ErrorCode::annihilated_state,
          "dephasing jump on site " + std::to_string(site) + " annihilates the state");
  return weight;
}

namespace {

void rk4_evolve(DenseState& state, const HamiltonianAction& act, const Eigen::VectorXcd& decay_diag,
                double t, double dt) {
  const cplx mi(0.0, -1.0);
  const long steps = std::lround(t / dt);
  Eigen::VectorXcd k1(act.dim), k2(act.dim), k3(act.dim), k4(act.dim), tmp(act.dim);
  auto deriv = [&](const Eigen::VectorXcd& v, Eigen::VectorXcd& out) {
    apply_action(act, v, out);
    if (decay_diag.size() > 0) out.array() += decay_diag.array() * v.array();
    out *= mi;
  };
  for (long n = 0; n < steps; ++n) {
    deriv(state.amp, k1);
    tmp = state.amp + 0.5 * dt * k1;
    deriv(tmp, k2);
    tmp = state.amp + 0.5 * dt * k2;
    deriv(tmp, k3);
    tmp = state.amp + dt * k3;
    deriv(tmp, k4);
    state.amp += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
}

}  // namespace

void evolve_state_rk4(DenseState& state, const HamiltonianSpec& spec, double t, double dt) {
  spec.validate();
  require(spec.sites == state.sites, ErrorCode::invalid_spec, "state/spec size mismatch");
  require(dt > 0.0, ErrorCode::invalid_spec, "dt must be positive");
  rk4_evolve(state, build_action(spec), Eigen::VectorXcd(), t, dt);
}

void evolve_effective_rk4(DenseState& state, const HamiltonianSpec& spec,
                          const std::vector<JumpChannel>& channels, double t, double dt) {
  spec.validate();
  require(spec.sites == state.sites, ErrorCode::invalid_spec, "state/spec size mismatch");
  require(dt > 0.0, ErrorCode::invalid_spec, "dt must be positive");
  HamiltonianAction act = build_action(spec);
  Eigen::VectorXcd decay = Eigen::VectorXcd::Zero(act.dim);
  for (const auto& ch : channels) {
    const int b = ch.site - 1;
    for (int i = 0; i < act.dim; ++i)
      if (i & (1 << b)) decay[i] += cplx(0.0, -0.5 * ch.rate);
  }
  rk4_evolve(state, act, decay, t, dt);
}

Eigen::VectorXd densities(const DenseState& state) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(state.sites);
  const double norm2 = state.amp.squaredNorm();
  for (int i = 0; i < state.amp.size(); ++i) {
    const double p = std::norm(state.amp[i]);
    if (p == 0.0) continue;
    for (int s = 0; s < state.sites; ++s)
      if (i & (1 << s)) n[s] += p;
  }
  return n / norm2;
}

Eigen::VectorXd densities(const Eigen::MatrixXcd& rho, int sites) {
  Eigen::VectorXd n = Eigen::VectorXd::Zero(sites);
  for (int i = 0; i < rho.rows(); ++i) {
    const double p = rho(i, i).real();
    for (int s = 0; s < sites; ++s)
      if (i & (1 << s)) n[s] += p;
  }
  return n;
}

double total_number(const DenseState& state) { return densities(state).sum(); }

double entanglement_entropy(const DenseState& state, int cut) {
  require(cut >= 1 && cut <= state.sites - 1, ErrorCode::invalid_spec, "cut out of range");
  const int ldim = 1 << cut;
  const int rdim = 1 << (state.sites - cut);
  Eigen::MatrixXcd psi(ldim, rdim);
  for (int b = 0; b < rdim; ++b)
    for (int a = 0; a < ldim; ++a) psi(a, b) = state.amp[a + (b << cut)];
  Eigen::MatrixXcd rho_l = psi * psi.adjoint() / state.amp.squaredNorm();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho_l, Eigen::EigenvaluesOnly);
  double s = 0.0;
  for (double p : es.eigenvalues())
    if (p > 1e-15) s -= p * std::log(p);
  return s;
}

void integrate_master_equation(Eigen::MatrixXcd& rho, const HamiltonianSpec& spec,
                               const std::vector<JumpChannel>& channels, Species species, double t_max,
                               double dt,
                               const std::function<void(int, double, const Eigen::MatrixXcd&)>& sampler) {
  spec.validate();
  check_capacity(spec.sites, kMaxLindbladSites, "integrate_master_equation");
  const int dim = dim_of(spec.sites);
  require(rho.rows() == dim && rho.cols() == dim, ErrorCode::invalid_spec, "rho dimension mismatch");
  require(dt > 0.0 && t_max >= 0.0, ErrorCode::invalid_spec, "invalid integration window");
  require(std::abs(rho.trace().real() - 1.0) < 1e-6, ErrorCode::invalid_spec, "rho0 must have unit trace");
  require((rho - rho.adjoint()).cwiseAbs().maxCoeff() < 1e-8, ErrorCode::invalid_spec, "rho0 must be Hermitian");

  HamiltonianAction act = build_action(spec);

  // Elementwise coefficient collecting every anticommutator piece plus the
  // dephasing refill: for rates g on channel m,
  //   loss:     -g/2 (n_m(i) + n_m(j))
  //   dephase:  -g/2 (n_m(i) - n_m(j))^2
  Eigen::MatrixXd decay = Eigen::MatrixXd::Zero(dim, dim);
  struct LossRefill {
    int bit;
    double rate;
  };
  std::vector<LossRefill> refills;
  for (const auto& ch : channels) {
    require(ch.site >= 1 && ch.site <= spec.sites, ErrorCode::invalid_spec, "channel site out of range");
    require(ch.rate >= 0.0, ErrorCode::invalid_spec, "negative channel rate");
    const int b = ch.site - 1;
    for (int i = 0; i < dim; ++i) {
      const double ni = (i >> b) & 1;
      for (int j = 0; j < dim; ++j) {
        const double nj = (j >> b) & 1;
        if (ch.kind == JumpChannel::Kind::loss)
          decay(i, j) -= 0.5 * ch.rate * (ni + nj);
        else
          decay(i, j) -= 0.5 * ch.rate * (ni - nj) * (ni - nj);
      }
    }
    if (ch.kind == JumpChannel::Kind::loss) refills.push_back({b, ch.rate});
  }

  const bool fermion = species == Species::spinless_fermion;
  Eigen::MatrixXcd l(dim, dim), k1(dim, dim), k2(dim, dim), k3(dim, dim), k4(dim, dim), work(dim, dim);

  auto rhs = [&](const Eigen::MatrixXcd& r, Eigen::MatrixXcd& out) {
    // l = r * H column by column, then -i[H, r] = i (l - l^dag) for Hermitian r.
    for (int c = 0; c < dim; ++c) l.col(c) = act.diag[c] * r.col(c);
    for (int c = 0; c < dim; ++c)
      for (const auto& [j, amp] : act.offdiag[static_cast<size_t>(c)]) l.col(c) += amp * r.col(j);
    out = cplx(0.0, 1.0) * (l - l.adjoint());
    out.array() += decay.array() * r.array();
    for (const auto& rf : refills) {
      const int half = dim >> 1;
      const int low_mask = (1 << rf.bit) - 1;
      for (int y = 0; y < half; ++y) {
        const int j2 = ((y >> rf.bit) << (rf.bit + 1)) | (y & low_mask);
        const int j1 = j2 | (1 << rf.bit);
        const double sj = fermion ? string_sign(j2, rf.bit) : 1.0;
        for (int x = 0; x < half; ++x) {
          const int i2 = ((x >> rf.bit) << (rf.bit + 1)) | (x & low_mask);
          const int i1 = i2 | (1 << rf.bit);
          const double si = fermion ? string_sign(i2, rf.bit) : 1.0;
          out(i2, j2) += rf.rate * si * sj * r(i1, j1);
        }
      }
    }
  };

  const long steps = std::lround(t_max / dt);
  if (sampler) sampler(0, 0.0, rho);
  for (long n = 0; n < steps; ++n) {
    rhs(rho, k1);
    work = rho + 0.5 * dt * k1;
    rhs(work, k2);
    work = rho + 0.5 * dt * k2;
    rhs(work, k3);
    work = rho + dt * k3;
    rhs(work, k4);
    rho += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const double trace = rho.trace().real();
    if (std::abs(trace - 1.0) > 1e-6)
      fail(ErrorCode::integrator_failure,
           "master-equation trace drifted to " + std::to_string(trace) + " at t=" +
               std::to_string((n + 1) * dt));
    if (sampler) sampler(static_cast<int>(n + 1), (n + 1) * dt, rho);
  }
}

}  // namespace ll::ed
