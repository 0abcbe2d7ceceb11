#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "core/common.hpp"

// Physical model declarations: Hamiltonian terms, dissipation channels and
// initial occupation patterns. Site indices are 1-based at this interface.
//
// Two-site operator blocks use the basis {00, 01, 10, 11} where the first
// digit is the occupation of the left site, i.e. index = 2*d_left + d_right.

namespace ll {

enum class Species { hard_core_boson, spinless_fermion };

inline const char* species_name(Species s) {
  return s == Species::hard_core_boson ? "boson" : "fermion";
}

struct HamiltonianSpec {
  int sites = 0;                  // M >= 2
  double tunneling = 1.0;         // J
  double interaction = 0.0;       // U, nearest-neighbour n_i n_{i+1}
  std::vector<double> potential;  // eps_i, length M; empty means all zero

  void validate() const;
  double eps(int site) const {  // 1-based
    return potential.empty() ? 0.0 : potential[static_cast<size_t>(site - 1)];
  }
};

struct DissipationSpec {
  std::vector<double> loss_rate;     // gamma_l per site, length M
  std::vector<double> dephase_rate;  // gamma_d per site, length M

  void validate(int sites) const;
  static DissipationSpec uniform(int sites, double loss, double dephase);
  bool is_uniform(double& loss, double& dephase) const;
};

struct InitialStatePattern {
  // preset: "unit-filling" | "cdw-odd" | "cdw-even" | "" (custom occupations)
  std::string preset;
  std::vector<int> occupations;  // used when preset is empty

  std::vector<int> resolve(int sites) const;
};

std::vector<int> build_initial_state(const InitialStatePattern& pattern, int sites);

struct LossEvent {
  double time = 0.0;
  int site = 0;  // 1-based
};

struct DeterministicLossSchedule {
  std::vector<LossEvent> events;  // sorted by time

  void validate(int sites) const;
  // Canonical two-loss protocol: site M/2 at t=0 and site M/2 - delta at t=tau0.
  static DeterministicLossSchedule two_loss(int sites, double tau0, int delta);
};

struct BondTerm {
  int site = 0;  // acts on (site, site+1), 1-based
  Eigen::Matrix4d h;
};

struct SiteTerm {
  int site = 0;
  Eigen::Matrix2d h;
};

struct HamiltonianTerms {
  std::vector<BondTerm> bonds;
  std::vector<SiteTerm> sites;
};

// One bond term per nearest-neighbour pair (open boundaries), one site term
// per site with nonzero potential. The output does not depend on particle
// statistics: after the Jordan-Wigner mapping hopping and density terms are
// string-free, so both species run the same spin Hamiltonian.
HamiltonianTerms build_hamiltonian_terms(const HamiltonianSpec& spec);

struct JumpChannel {
  enum class Kind { loss, dephase };
  Kind kind = Kind::loss;
  int site = 0;  // 1-based
  double rate = 0.0;
};

inline const char* channel_kind_name(JumpChannel::Kind k) {
  return k == JumpChannel::Kind::loss ? "loss" : "dephase";
}

// Channels with rate zero are omitted. The species tag does not alter the
// channel list (the statistics enter only when a loss is applied).
std::vector<JumpChannel> build_jump_channels(const DissipationSpec& spec, Species species);

}  // namespace ll
