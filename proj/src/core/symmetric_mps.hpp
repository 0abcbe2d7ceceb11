#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <vector>

#include "core/common.hpp"

// Number-conserving matrix product state. Every bond carries the list of
// cumulative-particle-number sectors (total occupation strictly to the left
// of the bond); a site tensor is a set of blocks routing a left sector to
// the right sector raised by the physical occupation. The state is kept in
// mixed-canonical form around an orthogonality center, so the Frobenius
// norm of the center tensor is the state norm and Schmidt spectra are read
// off by a single per-sector SVD of the center.
//
// Public site and cut indices are 1-based (cut c separates sites 1..c from
// c+1..M); internal storage is 0-based.

namespace ll {

struct BondSectors {
  std::vector<int> charge;  // strictly increasing
  std::vector<int> dim;

  int count() const { return static_cast<int>(charge.size()); }
  int find(int q) const {
    for (int i = 0; i < count(); ++i)
      if (charge[static_cast<size_t>(i)] == q) return i;
    return -1;
  }
  int total_dim() const {
    int t = 0;
    for (int d : dim) t += d;
    return t;
  }
};

struct MpsBlock {
  int left = 0;   // sector index on the left bond
  int right = 0;  // sector index on the right bond
  int occ = 0;    // physical occupation; charge(right) = charge(left) + occ
  Eigen::MatrixXcd a;
};

struct GateOptions {
  int max_bond = std::numeric_limits<int>::max();
  double trunc_tol = 0.0;    // relative squared-weight threshold
  bool renormalize = true;   // restore the pre-truncation norm (unitary gates)
  bool move_right = true;    // where the center lands after the update
};

class SymmetricMps {
public:
  static SymmetricMps product_state(const std::vector<int>& occupations);

  int sites() const { return sites_; }
  int center_site() const { return center_ + 1; }
  int total_number() const;
  int bond_dimension() const;  // max total bond dimension
  const BondSectors& bond(int b) const { return bonds_[static_cast<size_t>(b)]; }  // b in [0, M]
  const std::vector<MpsBlock>& site_blocks(int site) const {
    return tensors_[static_cast<size_t>(site - 1)];
  }

  double norm() const;
  // Returns the prior norm and rescales to norm 1; zero norm is an error.
  double normalize();
  void scale(std::complex<double> factor);

  void move_center_to(int site);

  // Applies a two-site gate on (bond, bond+1). The gate is a 4x4 block in
  // the basis {00,01,10,11} (left occupation first) and must conserve the
  // two-site particle number. Returns the relative discarded weight.
  double apply_two_site_gate(int bond, const Eigen::Matrix4cd& gate, const GateOptions& opt);

  double local_density(int site);
  Eigen::VectorXd all_densities();
  // Schmidt values at a cut, sorted descending.
  std::vector<double> schmidt_values(int cut);
  double entanglement_entropy(int cut);
  std::vector<double> all_entropies();
  std::complex<double> expectation_bond(int bond, const Eigen::Matrix4cd& op);

  // sigma^- at `site`; for fermions each block is multiplied by the parity
  // sign of the bond charge stored to its left. The caller is responsible
  // for checking the resulting norm. Charges right of `site` are decremented.
  void apply_lowering(int site, bool fermion_string);
  // Projects onto the occupied component at `site`.
  void project_occupied(int site);

  // Drops sectors unreachable from either chain end; returns false when the
  // state has been annihilated.
  bool prune();

  void check_consistency() const;   // structural invariants
  bool is_canonical(double tol = 1e-10) const;  // gauge conditions around the center

  friend std::complex<double> overlap(const SymmetricMps& a, const SymmetricMps& b);

private:
  SymmetricMps() = default;
  void move_center_right();
  void move_center_left();

  int sites_ = 0;
  int center_ = 0;
  std::vector<BondSectors> bonds_;            // size sites_+1
  std::vector<std::vector<MpsBlock>> tensors_;  // size sites_
};

std::complex<double> overlap(const SymmetricMps& a, const SymmetricMps& b);

}  // namespace ll
