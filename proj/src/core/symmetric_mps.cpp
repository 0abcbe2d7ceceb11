#include "core/symmetric_mps.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace ll {

namespace {

using cplx = std::complex<double>;

void thin_qr(const Eigen::MatrixXcd& a, Eigen::MatrixXcd& q, Eigen::MatrixXcd& r) {
  const auto k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  q = qr.householderQ() * Eigen::MatrixXcd::Identity(a.rows(), k);
  r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

void thin_svd(const Eigen::MatrixXcd& x, Eigen::MatrixXcd& u, Eigen::VectorXd& s, Eigen::MatrixXcd& v) {
  if (std::max(x.rows(), x.cols()) <= 16) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  } else {
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    u = svd.matrixU();
    s = svd.singularValues();
    v = svd.matrixV();
  }
}

void sort_blocks(std::vector<MpsBlock>& blocks) {
  std::sort(blocks.begin(), blocks.end(), [](const MpsBlock& a, const MpsBlock& b) {
    return std::tie(a.left, a.occ) < std::tie(b.left, b.occ);
  });
}

}  // namespace

SymmetricMps SymmetricMps::product_state(const std::vector<int>& occupations) {
  const int m = static_cast<int>(occupations.size());
  require(m >= 1, ErrorCode::invalid_spec, "product state needs at least one site");
  SymmetricMps st;
  st.sites_ = m;
  st.center_ = 0;
  st.bonds_.resize(static_cast<size_t>(m) + 1);
  st.tensors_.resize(static_cast<size_t>(m));
  int q = 0;
  st.bonds_[0] = {{0}, {1}};
  for (int s = 0; s < m; ++s) {
    const int d = occupations[static_cast<size_t>(s)];
    require(d == 0 || d == 1, ErrorCode::invalid_spec, "occupations must be 0 or 1");
    q += d;
    st.bonds_[static_cast<size_t>(s) + 1] = {{q}, {1}};
    MpsBlock b;
    b.left = 0;
    b.right = 0;
    b.occ = d;
    b.a = Eigen::MatrixXcd::Ones(1, 1);
    st.tensors_[static_cast<size_t>(s)].push_back(std::move(b));
  }
  return st;
}

int SymmetricMps::total_number() const {
  const auto& last = bonds_.back();
  require(last.count() == 1, ErrorCode::internal, "state is not in a single total-number sector");
  return last.charge[0] - bonds_.front().charge[0];
}

int SymmetricMps::bond_dimension() const {
  int d = 0;
  for (const auto& b : bonds_) d = std::max(d, b.total_dim());
  return d;
}

double SymmetricMps::norm() const {
  double n2 = 0.0;
  for (const auto& b : tensors_[static_cast<size_t>(center_)]) n2 += b.a.squaredNorm();
  return std::sqrt(n2);
}

double SymmetricMps::normalize() {
  const double n = norm();
  require(n > 1e-150, ErrorCode::annihilated_state, "cannot normalize a zero-norm state");
  for (auto& b : tensors_[static_cast<size_t>(center_)]) b.a /= n;
  return n;
}

void SymmetricMps::scale(std::complex<double> factor) {
  for (auto& b : tensors_[static_cast<size_t>(center_)]) b.a *= factor;
}

void SymmetricMps::move_center_right() {
  const int s = center_;
  require(s + 1 < sites_, ErrorCode::internal, "cannot move center right of the last site");
  auto& blocks = tensors_[static_cast<size_t>(s)];
  auto& rbond = bonds_[static_cast<size_t>(s) + 1];
  std::vector<Eigen::MatrixXcd> rmats(static_cast<size_t>(rbond.count()));
  std::vector<char> seen(static_cast<size_t>(rbond.count()), 0);

  std::sort(blocks.begin(), blocks.end(), [](const MpsBlock& a, const MpsBlock& b) {
    return std::tie(a.right, a.occ, a.left) < std::tie(b.right, b.occ, b.left);
  });
  for (size_t i = 0; i < blocks.size();) {
    size_t j = i;
    const int r = blocks[i].right;
    int rows = 0;
    while (j < blocks.size() && blocks[j].right == r) rows += static_cast<int>(blocks[j++].a.rows());
    Eigen::MatrixXcd a(rows, rbond.dim[static_cast<size_t>(r)]);
    int off = 0;
    for (size_t b = i; b < j; ++b) {
      a.middleRows(off, blocks[b].a.rows()) = blocks[b].a;
      off += static_cast<int>(blocks[b].a.rows());
    }
    Eigen::MatrixXcd q;
    thin_qr(a, q, rmats[static_cast<size_t>(r)]);
    seen[static_cast<size_t>(r)] = 1;
    off = 0;
    for (size_t b = i; b < j; ++b) {
      const int nr = static_cast<int>(blocks[b].a.rows());
      blocks[b].a = q.middleRows(off, nr);
      off += nr;
    }
    rbond.dim[static_cast<size_t>(r)] = static_cast<int>(q.cols());
    i = j;
  }
  for (int r = 0; r < rbond.count(); ++r)
    require(seen[static_cast<size_t>(r)], ErrorCode::internal, "bond sector with no feeding blocks (state not pruned)");
  for (auto& b : tensors_[static_cast<size_t>(s) + 1]) b.a = rmats[static_cast<size_t>(b.left)] * b.a;
  sort_blocks(blocks);
  center_ = s + 1;
}

void SymmetricMps::move_center_left() {
  const int s = center_;
  require(s - 1 >= 0, ErrorCode::internal, "cannot move center left of the first site");
  auto& blocks = tensors_[static_cast<size_t>(s)];
  auto& lbond = bonds_[static_cast<size_t>(s)];
  std::vector<Eigen::MatrixXcd> lmats(static_cast<size_t>(lbond.count()));
  std::vector<char> seen(static_cast<size_t>(lbond.count()), 0);

  std::sort(blocks.begin(), blocks.end(), [](const MpsBlock& a, const MpsBlock& b) {
    return std::tie(a.left, a.occ, a.right) < std::tie(b.left, b.occ, b.right);
  });
  for (size_t i = 0; i < blocks.size();) {
    size_t j = i;
    const int l = blocks[i].left;
    int cols = 0;
    while (j < blocks.size() && blocks[j].left == l) cols += static_cast<int>(blocks[j++].a.cols());
    Eigen::MatrixXcd a(lbond.dim[static_cast<size_t>(l)], cols);
    int off = 0;
    for (size_t b = i; b < j; ++b) {
      a.middleCols(off, blocks[b].a.cols()) = blocks[b].a;
      off += static_cast<int>(blocks[b].a.cols());
    }
    // a = (r^dag q^dag) with q from the QR of a^dag
    Eigen::MatrixXcd q, r;
    thin_qr(a.adjoint(), q, r);
    lmats[static_cast<size_t>(l)] = r.adjoint();
    seen[static_cast<size_t>(l)] = 1;
    Eigen::MatrixXcd qd = q.adjoint();
    off = 0;
    for (size_t b = i; b < j; ++b) {
      const int nc = static_cast<int>(blocks[b].a.cols());
      blocks[b].a = qd.middleCols(off, nc);
      off += nc;
    }
    lbond.dim[static_cast<size_t>(l)] = static_cast<int>(qd.rows());
    i = j;
  }
  for (int l = 0; l < lbond.count(); ++l)
    require(seen[static_cast<size_t>(l)], ErrorCode::internal, "bond sector with no feeding blocks (state not pruned)");
  for (auto& b : tensors_[static_cast<size_t>(s) - 1]) b.a = b.a * lmats[static_cast<size_t>(b.right)];
  sort_blocks(blocks);
  center_ = s - 1;
}

void SymmetricMps::move_center_to(int site) {
  require(site >= 1 && site <= sites_, ErrorCode::invalid_spec, "site out of range");
  const int target = site - 1;
  while (center_ < target) move_center_right();
  while (center_ > target) move_center_left();
}

double SymmetricMps::apply_two_site_gate(int bond, const Eigen::Matrix4cd& gate, const GateOptions& opt) {
  require(bond >= 1 && bond <= sites_ - 1, ErrorCode::invalid_spec, "gate bond out of range");
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 4; ++col) {
      const int drow = (row >> 1) + (row & 1);
      const int dcol = (col >> 1) + (col & 1);
      if (drow != dcol)
        require(std::abs(gate(row, col)) <= 1e-14, ErrorCode::charge_violation,
                "two-site gate does not conserve particle number");
    }

  move_center_to(bond);
  const int s = bond - 1;
  const auto& lbond = bonds_[static_cast<size_t>(s)];
  const auto& rbond = bonds_[static_cast<size_t>(s) + 2];

  // Two-site wavefunction, keyed by (left sector, occ_left, occ_right).
  std::map<std::tuple<int, int, int>, Eigen::MatrixXcd> theta;
  for (const auto& b1 : tensors_[static_cast<size_t>(s)])
    for (const auto& b2 : tensors_[static_cast<size_t>(s) + 1]) {
      if (b2.left != b1.right) continue;
      auto key = std::make_tuple(b1.left, b1.occ, b2.occ);
      auto [it, inserted] = theta.try_emplace(key, b1.a * b2.a);
      if (!inserted) it->second += b1.a * b2.a;
    }

  std::map<std::tuple<int, int, int>, Eigen::MatrixXcd> gated;
  for (const auto& [key, m] : theta) {
    const auto [l, d1, d2] = key;
    const int src = 2 * d1 + d2;
    for (int e1 = 0; e1 <= 1; ++e1)
      for (int e2 = 0; e2 <= 1; ++e2) {
        if (e1 + e2 != d1 + d2) continue;
        const cplx c = gate(2 * e1 + e2, src);
        if (c == cplx(0.0, 0.0)) continue;
        auto key2 = std::make_tuple(l, e1, e2);
        auto [it, inserted] = gated.try_emplace(key2, c * m);
        if (!inserted) it->second += c * m;
      }
  }

  // Per middle-charge SVD problem. Row groups are (left sector, occ_left)
  // with charge(l) + occ_left = qm; column groups are (occ_right, right
  // sector) with charge(r) = qm + occ_right.
  struct Problem {
    std::vector<std::pair<int, int>> rows;  // (left sector, e1)
    std::vector<std::pair<int, int>> cols;  // (e2, right sector)
    Eigen::MatrixXcd u, v;
    Eigen::VectorXd sv;
    int kept = 0;
  };
  std::map<int, Problem> problems;
  for (const auto& [key, m] : gated) {
    const auto [l, e1, e2] = key;
    const int qm = lbond.charge[static_cast<size_t>(l)] + e1;
    auto& pr = problems[qm];
    std::pair<int, int> row{l, e1};
    if (std::find(pr.rows.begin(), pr.rows.end(), row) == pr.rows.end()) pr.rows.push_back(row);
    const int r = rbond.find(qm + e2);
    require(r >= 0, ErrorCode::internal, "missing right sector in gate update");
    std::pair<int, int> col{e2, r};
    if (std::find(pr.cols.begin(), pr.cols.end(), col) == pr.cols.end()) pr.cols.push_back(col);
  }

  double total_sq = 0.0;
  struct SvRef {
    double value;
    int qm;
    int pos;
  };
  std::vector<SvRef> all_sv;
  for (auto& [qm, pr] : problems) {
    std::sort(pr.rows.begin(), pr.rows.end(),
              [](auto a, auto b) { return std::tie(a.second, a.first) < std::tie(b.second, b.first); });
    std::sort(pr.cols.begin(), pr.cols.end());
    int nrows = 0, ncols = 0;
    for (auto [l, e1] : pr.rows) nrows += lbond.dim[static_cast<size_t>(l)];
    for (auto [e2, r] : pr.cols) ncols += rbond.dim[static_cast<size_t>(r)];
    Eigen::MatrixXcd x = Eigen::MatrixXcd::Zero(nrows, ncols);
    int roff = 0;
    for (auto [l, e1] : pr.rows) {
      const int rdim = lbond.dim[static_cast<size_t>(l)];
      int coff = 0;
      for (auto [e2, r] : pr.cols) {
        const int cdim = rbond.dim[static_cast<size_t>(r)];
        auto it = gated.find(std::make_tuple(l, e1, e2));
        if (it != gated.end()) x.block(roff, coff, rdim, cdim) = it->second;
        coff += cdim;
      }
      roff += rdim;
    }
    thin_svd(x, pr.u, pr.sv, pr.v);
    for (int p = 0; p < pr.sv.size(); ++p) {
      all_sv.push_back({pr.sv[p], qm, p});
      total_sq += pr.sv[p] * pr.sv[p];
    }
  }
  require(total_sq > 0.0, ErrorCode::internal, "gate produced a zero state");

  std::sort(all_sv.begin(), all_sv.end(), [](const SvRef& a, const SvRef& b) {
    if (a.value != b.value) return a.value > b.value;
    return std::tie(a.qm, a.pos) < std::tie(b.qm, b.pos);
  });
  // Truncation budget: drop the largest tail whose summed squared weight
  // stays below trunc_tol (relative), then enforce the bond-dimension cap.
  const int count = static_cast<int>(all_sv.size());
  std::vector<double> suffix(static_cast<size_t>(count) + 1, 0.0);
  for (int i = count - 1; i >= 0; --i)
    suffix[static_cast<size_t>(i)] =
        suffix[static_cast<size_t>(i) + 1] + all_sv[static_cast<size_t>(i)].value * all_sv[static_cast<size_t>(i)].value;
  int keep = count;
  while (keep > 1 && suffix[static_cast<size_t>(keep) - 1] <= opt.trunc_tol * total_sq) --keep;
  keep = std::min(keep, opt.max_bond);
  keep = std::max(keep, 1);
  double kept_sq = 0.0;
  for (int i = 0; i < keep; ++i) {
    const auto& ref = all_sv[static_cast<size_t>(i)];
    problems[ref.qm].kept = std::max(problems[ref.qm].kept, ref.pos + 1);
    kept_sq += ref.value * ref.value;
  }
  // `kept` counts the largest selected rank per sector; because all_sv is
  // globally sorted, every position below it is selected too.
  const double discarded = std::max(0.0, 1.0 - kept_sq / total_sq);
  const double rescale = opt.renormalize ? std::sqrt(total_sq / kept_sq) : 1.0;

  BondSectors mid;
  std::vector<MpsBlock> left_new, right_new;
  int m_idx = 0;
  for (auto& [qm, pr] : problems) {
    if (pr.kept == 0) continue;
    const int k = pr.kept;
    mid.charge.push_back(qm);
    mid.dim.push_back(k);
    Eigen::MatrixXcd uk = pr.u.leftCols(k);
    Eigen::VectorXd sk = pr.sv.head(k) * rescale;
    Eigen::MatrixXcd rmat;
    if (opt.move_right) {
      rmat = sk.asDiagonal() * pr.v.leftCols(k).adjoint();
    } else {
      uk = uk * sk.asDiagonal();
      rmat = pr.v.leftCols(k).adjoint();
    }
    int roff = 0;
    for (auto [l, e1] : pr.rows) {
      const int rdim = lbond.dim[static_cast<size_t>(l)];
      left_new.push_back({l, m_idx, e1, uk.middleRows(roff, rdim)});
      roff += rdim;
    }
    int coff = 0;
    for (auto [e2, r] : pr.cols) {
      const int cdim = rbond.dim[static_cast<size_t>(r)];
      right_new.push_back({m_idx, r, e2, rmat.middleCols(coff, cdim)});
      coff += cdim;
    }
    ++m_idx;
  }
  bonds_[static_cast<size_t>(s) + 1] = std::move(mid);
  tensors_[static_cast<size_t>(s)] = std::move(left_new);
  tensors_[static_cast<size_t>(s) + 1] = std::move(right_new);
  sort_blocks(tensors_[static_cast<size_t>(s)]);
  sort_blocks(tensors_[static_cast<size_t>(s) + 1]);
  center_ = opt.move_right ? s + 1 : s;

  // Truncation can orphan outer-bond sectors; prune only when it happened.
  std::vector<char> lseen(static_cast<size_t>(lbond.count()), 0);
  std::vector<char> rseen(static_cast<size_t>(rbond.count()), 0);
  for (const auto& b : tensors_[static_cast<size_t>(s)]) lseen[static_cast<size_t>(b.left)] = 1;
  for (const auto& b : tensors_[static_cast<size_t>(s) + 1]) rseen[static_cast<size_t>(b.right)] = 1;
  if (std::find(lseen.begin(), lseen.end(), 0) != lseen.end() ||
      std::find(rseen.begin(), rseen.end(), 0) != rseen.end())
    require(prune(), ErrorCode::internal, "truncation annihilated the state");
  return discarded;
}

double SymmetricMps::local_density(int site) {
  require(site >= 1 && site <= sites_, ErrorCode::invalid_spec, "site out of range");
  move_center_to(site);
  double occ = 0.0, all = 0.0;
  for (const auto& b : tensors_[static_cast<size_t>(site - 1)]) {
    const double w = b.a.squaredNorm();
    all += w;
    if (b.occ == 1) occ += w;
  }
  require(all > 0.0, ErrorCode::annihilated_state, "density of a zero-norm state");
  return occ / all;
}

Eigen::VectorXd SymmetricMps::all_densities() {
  Eigen::VectorXd n(sites_);
  move_center_to(1);
  for (int s = 1; s <= sites_; ++s) n[s - 1] = local_density(s);
  return n;
}

std::vector<double> SymmetricMps::schmidt_values(int cut) {
  require(cut >= 1 && cut <= sites_ - 1, ErrorCode::invalid_spec, "cut out of range");
  move_center_to(cut);
  const int s = cut - 1;
  auto blocks = tensors_[static_cast<size_t>(s)];  // copy; we only need the spectra
  const auto& rbond = bonds_[static_cast<size_t>(cut)];
  std::sort(blocks.begin(), blocks.end(), [](const MpsBlock& a, const MpsBlock& b) {
    return std::tie(a.right, a.occ, a.left) < std::tie(b.right, b.occ, b.left);
  });
  std::vector<double> vals;
  for (size_t i = 0; i < blocks.size();) {
    size_t j = i;
    const int r = blocks[i].right;
    int rows = 0;
    while (j < blocks.size() && blocks[j].right == r) rows += static_cast<int>(blocks[j++].a.rows());
    Eigen::MatrixXcd a(rows, rbond.dim[static_cast<size_t>(r)]);
    int off = 0;
    for (size_t b = i; b < j; ++b) {
      a.middleRows(off, blocks[b].a.rows()) = blocks[b].a;
      off += static_cast<int>(blocks[b].a.rows());
    }
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    for (double v : svd.singularValues()) vals.push_back(v);
    i = j;
  }
  std::sort(vals.begin(), vals.end(), std::greater<double>());
  return vals;
}

double SymmetricMps::entanglement_entropy(int cut) {
  const auto vals = schmidt_values(cut);
  double total = 0.0;
  for (double v : vals) total += v * v;
  require(total > 0.0, ErrorCode::annihilated_state, "entropy of a zero-norm state");
  double s = 0.0;
  for (double v : vals) {
    const double p = v * v / total;
    if (p > 1e-16) s -= p * std::log(p);
  }
  return s;
}

std::vector<double> SymmetricMps::all_entropies() {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(sites_ - 1));
  for (int c = 1; c <= sites_ - 1; ++c) out.push_back(entanglement_entropy(c));
  return out;
}

std::complex<double> SymmetricMps::expectation_bond(int bond, const Eigen::Matrix4cd& op) {
  require(bond >= 1 && bond <= sites_ - 1, ErrorCode::invalid_spec, "bond out of range");
  move_center_to(bond);
  const int s = bond - 1;
  std::map<std::tuple<int, int, int>, Eigen::MatrixXcd> theta;
  double norm_sq = 0.0;
  for (const auto& b1 : tensors_[static_cast<size_t>(s)])
    for (const auto& b2 : tensors_[static_cast<size_t>(s) + 1]) {
      if (b2.left != b1.right) continue;
      auto key = std::make_tuple(b1.left, b1.occ, b2.occ);
      auto [it, inserted] = theta.try_emplace(key, b1.a * b2.a);
      if (!inserted) it->second += b1.a * b2.a;
    }
  cplx acc(0.0, 0.0);
  for (const auto& [key, m] : theta) norm_sq += m.squaredNorm();
  for (const auto& [key, m] : theta) {
    const auto [l, e1, e2] = key;
    for (int d1 = 0; d1 <= 1; ++d1)
      for (int d2 = 0; d2 <= 1; ++d2) {
        if (d1 + d2 != e1 + e2) continue;
        const cplx c = op(2 * e1 + e2, 2 * d1 + d2);
        if (c == cplx(0.0, 0.0)) continue;
        auto it = theta.find(std::make_tuple(l, d1, d2));
        if (it == theta.end()) continue;
        acc += c * (m.conjugate().cwiseProduct(it->second)).sum();
      }
  }
  require(norm_sq > 0.0, ErrorCode::annihilated_state, "expectation on a zero-norm state");
  return acc / norm_sq;
}

void SymmetricMps::apply_lowering(int site, bool fermion_string) {
  require(site >= 1 && site <= sites_, ErrorCode::invalid_spec, "site out of range");
  move_center_to(site);
  const int s = site - 1;
  const auto& lbond = bonds_[static_cast<size_t>(s)];
  std::vector<MpsBlock> kept;
  for (auto& b : tensors_[static_cast<size_t>(s)]) {
    if (b.occ != 1) continue;
    MpsBlock nb;
    nb.left = b.left;
    nb.right = b.right;
    nb.occ = 0;
    nb.a = std::move(b.a);
    if (fermion_string && (lbond.charge[static_cast<size_t>(b.left)] & 1)) nb.a = -nb.a;
    kept.push_back(std::move(nb));
  }
  tensors_[static_cast<size_t>(s)] = std::move(kept);
  for (int bnd = s + 1; bnd <= sites_; ++bnd)
    for (auto& q : bonds_[static_cast<size_t>(bnd)].charge) q -= 1;
  require(prune(), ErrorCode::annihilated_state,
          "loss on site " + std::to_string(site) + " annihilated the state");
}

void SymmetricMps::project_occupied(int site) {
  require(site >= 1 && site <= sites_, ErrorCode::invalid_spec, "site out of range");
  move_center_to(site);
  const int s = site - 1;
  std::vector<MpsBlock> kept;
  for (auto& b : tensors_[static_cast<size_t>(s)])
    if (b.occ == 1) kept.push_back(std::move(b));
  tensors_[static_cast<size_t>(s)] = std::move(kept);
  require(prune(), ErrorCode::annihilated_state,
          "dephasing jump on site " + std::to_string(site) + " annihilated the state");
}

bool SymmetricMps::prune() {
  const int m = sites_;
  std::vector<std::vector<char>> fwd(static_cast<size_t>(m) + 1), bwd(static_cast<size_t>(m) + 1);
  for (int b = 0; b <= m; ++b) {
    fwd[static_cast<size_t>(b)].assign(static_cast<size_t>(bonds_[static_cast<size_t>(b)].count()), 0);
    bwd[static_cast<size_t>(b)].assign(static_cast<size_t>(bonds_[static_cast<size_t>(b)].count()), 0);
  }
  std::fill(fwd[0].begin(), fwd[0].end(), 1);
  for (int s = 0; s < m; ++s)
    for (const auto& b : tensors_[static_cast<size_t>(s)])
      if (fwd[static_cast<size_t>(s)][static_cast<size_t>(b.left)])
        fwd[static_cast<size_t>(s) + 1][static_cast<size_t>(b.right)] = 1;
  std::fill(bwd[static_cast<size_t>(m)].begin(), bwd[static_cast<size_t>(m)].end(), 1);
  for (int s = m - 1; s >= 0; --s)
    for (const auto& b : tensors_[static_cast<size_t>(s)])
      if (bwd[static_cast<size_t>(s) + 1][static_cast<size_t>(b.right)])
        bwd[static_cast<size_t>(s)][static_cast<size_t>(b.left)] = 1;

  std::vector<std::vector<int>> remap(static_cast<size_t>(m) + 1);
  for (int b = 0; b <= m; ++b) {
    auto& bond = bonds_[static_cast<size_t>(b)];
    remap[static_cast<size_t>(b)].assign(static_cast<size_t>(bond.count()), -1);
    BondSectors nb;
    for (int i = 0; i < bond.count(); ++i) {
      if (fwd[static_cast<size_t>(b)][static_cast<size_t>(i)] &&
          bwd[static_cast<size_t>(b)][static_cast<size_t>(i)] && bond.dim[static_cast<size_t>(i)] > 0) {
        remap[static_cast<size_t>(b)][static_cast<size_t>(i)] = nb.count();
        nb.charge.push_back(bond.charge[static_cast<size_t>(i)]);
        nb.dim.push_back(bond.dim[static_cast<size_t>(i)]);
      }
    }
    if (nb.count() == 0) return false;
    bond = std::move(nb);
  }
  for (int s = 0; s < m; ++s) {
    std::vector<MpsBlock> kept;
    for (auto& b : tensors_[static_cast<size_t>(s)]) {
      const int nl = remap[static_cast<size_t>(s)][static_cast<size_t>(b.left)];
      const int nr = remap[static_cast<size_t>(s) + 1][static_cast<size_t>(b.right)];
      if (nl < 0 || nr < 0) continue;
      b.left = nl;
      b.right = nr;
      kept.push_back(std::move(b));
    }
    if (kept.empty()) return false;
    tensors_[static_cast<size_t>(s)] = std::move(kept);
  }
  return true;
}

void SymmetricMps::check_consistency() const {
  require(static_cast<int>(bonds_.size()) == sites_ + 1, ErrorCode::internal, "bond array size");
  require(bonds_.front().count() == 1 && bonds_.back().count() == 1, ErrorCode::internal,
          "edge bonds must be one-dimensional sectors");
  for (int s = 0; s < sites_; ++s) {
    const auto& lb = bonds_[static_cast<size_t>(s)];
    const auto& rb = bonds_[static_cast<size_t>(s) + 1];
    require(!tensors_[static_cast<size_t>(s)].empty(), ErrorCode::internal, "site tensor has no blocks");
    for (const auto& b : tensors_[static_cast<size_t>(s)]) {
      require(b.left >= 0 && b.left < lb.count() && b.right >= 0 && b.right < rb.count(),
              ErrorCode::internal, "block sector index out of range");
      require(b.occ == 0 || b.occ == 1, ErrorCode::internal, "bad physical index");
      require(rb.charge[static_cast<size_t>(b.right)] ==
                  lb.charge[static_cast<size_t>(b.left)] + b.occ,
              ErrorCode::internal, "block violates charge conservation");
      require(b.a.rows() == lb.dim[static_cast<size_t>(b.left)] &&
                  b.a.cols() == rb.dim[static_cast<size_t>(b.right)],
              ErrorCode::internal, "block shape does not match bond dimensions");
    }
  }
}

bool SymmetricMps::is_canonical(double tol) const {
  for (int s = 0; s < sites_; ++s) {
    if (s == center_) continue;
    const auto& blocks = tensors_[static_cast<size_t>(s)];
    if (s < center_) {
      const auto& rb = bonds_[static_cast<size_t>(s) + 1];
      for (int r = 0; r < rb.count(); ++r) {
        const int d = rb.dim[static_cast<size_t>(r)];
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
        for (const auto& b : blocks)
          if (b.right == r) acc += b.a.adjoint() * b.a;
        if ((acc - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > tol) return false;
      }
    } else {
      const auto& lb = bonds_[static_cast<size_t>(s)];
      for (int l = 0; l < lb.count(); ++l) {
        const int d = lb.dim[static_cast<size_t>(l)];
        Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(d, d);
        for (const auto& b : blocks)
          if (b.left == l) acc += b.a * b.a.adjoint();
        if ((acc - Eigen::MatrixXcd::Identity(d, d)).cwiseAbs().maxCoeff() > tol) return false;
      }
    }
  }
  return true;
}

std::complex<double> overlap(const SymmetricMps& a, const SymmetricMps& b) {
  require(a.sites_ == b.sites_, ErrorCode::invalid_spec, "overlap needs equal system sizes");
  std::map<std::pair<int, int>, Eigen::MatrixXcd> env;
  env[{0, 0}] = Eigen::MatrixXcd::Ones(1, 1);
  for (int s = 0; s < a.sites_; ++s) {
    std::map<std::pair<int, int>, Eigen::MatrixXcd> next;
    for (const auto& [key, e] : env)
      for (const auto& ba : a.tensors_[static_cast<size_t>(s)]) {
        if (ba.left != key.first) continue;
        for (const auto& bb : b.tensors_[static_cast<size_t>(s)]) {
          if (bb.left != key.second || bb.occ != ba.occ) continue;
          Eigen::MatrixXcd contrib = ba.a.adjoint() * e * bb.a;
          auto [it, inserted] = next.try_emplace(std::make_pair(ba.right, bb.right), contrib);
          if (!inserted) it->second += contrib;
        }
      }
    env = std::move(next);
    if (env.empty()) return {0.0, 0.0};
  }
  std::complex<double> total(0.0, 0.0);
  for (const auto& [key, e] : env) {
    if (a.bonds_.back().charge[static_cast<size_t>(key.first)] !=
        b.bonds_.back().charge[static_cast<size_t>(key.second)])
      continue;
    total += e(0, 0);
  }
  return total;
}

}  // namespace ll
