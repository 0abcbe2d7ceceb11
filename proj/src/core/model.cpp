#include "core/model.hpp"

#include <algorithm>
#include <cmath>

namespace ll {

void HamiltonianSpec::validate() const {
  require(sites >= 2, ErrorCode::invalid_spec, "model.sites: need at least 2 sites, got " + std::to_string(sites));
  require(potential.empty() || static_cast<int>(potential.size()) == sites, ErrorCode::invalid_spec,
          "model.eps: expected " + std::to_string(sites) + " entries, got " + std::to_string(potential.size()));
  require(std::isfinite(tunneling) && std::isfinite(interaction), ErrorCode::invalid_spec,
          "model: non-finite coupling");
  for (double e : potential)
    require(std::isfinite(e), ErrorCode::invalid_spec, "model.eps: non-finite entry");
}

void DissipationSpec::validate(int sites) const {
  require(static_cast<int>(loss_rate.size()) == sites, ErrorCode::invalid_spec,
          "model.gamma_loss: expected " + std::to_string(sites) + " entries");
  require(static_cast<int>(dephase_rate.size()) == sites, ErrorCode::invalid_spec,
          "model.gamma_dephase: expected " + std::to_string(sites) + " entries");
  for (double g : loss_rate)
    require(g >= 0.0 && std::isfinite(g), ErrorCode::invalid_spec, "model.gamma_loss: negative or non-finite rate");
  for (double g : dephase_rate)
    require(g >= 0.0 && std::isfinite(g), ErrorCode::invalid_spec, "model.gamma_dephase: negative or non-finite rate");
}

DissipationSpec DissipationSpec::uniform(int sites, double loss, double dephase) {
  DissipationSpec d;
  d.loss_rate.assign(static_cast<size_t>(sites), loss);
  d.dephase_rate.assign(static_cast<size_t>(sites), dephase);
  return d;
}

bool DissipationSpec::is_uniform(double& loss, double& dephase) const {
  if (loss_rate.empty()) return false;
  loss = loss_rate.front();
  dephase = dephase_rate.front();
  for (double g : loss_rate)
    if (g != loss) return false;
  for (double g : dephase_rate)
    if (g != dephase) return false;
  return true;
}

std::vector<int> InitialStatePattern::resolve(int sites) const {
  std::vector<int> occ(static_cast<size_t>(sites), 0);
  if (preset == "unit-filling") {
    std::fill(occ.begin(), occ.end(), 1);
  } else if (preset == "cdw-odd") {
    for (int i = 1; i <= sites; i += 2) occ[static_cast<size_t>(i - 1)] = 1;
  } else if (preset == "cdw-even") {
    for (int i = 2; i <= sites; i += 2) occ[static_cast<size_t>(i - 1)] = 1;
  } else if (preset.empty()) {
    require(static_cast<int>(occupations.size()) == sites, ErrorCode::invalid_spec,
            "model.initial: occupation list must have " + std::to_string(sites) + " entries");
    for (int v : occupations)
      require(v == 0 || v == 1, ErrorCode::invalid_spec, "model.initial: occupations must be 0 or 1");
    occ = occupations;
  } else {
    fail(ErrorCode::invalid_spec, "model.initial: unknown preset '" + preset + "'");
  }
  return occ;
}

std::vector<int> build_initial_state(const InitialStatePattern& pattern, int sites) {
  return pattern.resolve(sites);
}

void DeterministicLossSchedule::validate(int sites) const {
  double last = 0.0;
  bool first = true;
  for (const auto& ev : events) {
    require(ev.time >= 0.0 && std::isfinite(ev.time), ErrorCode::invalid_spec,
            "deterministic.events: event time must be >= 0");
    require(ev.site >= 1 && ev.site <= sites, ErrorCode::invalid_spec,
            "deterministic.events: site " + std::to_string(ev.site) + " out of range [1," + std::to_string(sites) + "]");
    require(first || ev.time >= last, ErrorCode::invalid_spec, "deterministic.events: events must be sorted by time");
    last = ev.time;
    first = false;
  }
}

DeterministicLossSchedule DeterministicLossSchedule::two_loss(int sites, double tau0, int delta) {
  DeterministicLossSchedule s;
  int m0 = sites / 2;
  s.events.push_back({0.0, m0});
  s.events.push_back({tau0, m0 - delta});
  s.validate(sites);
  return s;
}

HamiltonianTerms build_hamiltonianterms_impl(const HamiltonianSpec& spec) {
  HamiltonianTerms terms;
  const double j = spec.tunneling;
  const double u = spec.interaction;

  Eigen::Matrix4d hop = Eigen::Matrix4d::Zero();
  hop(1, 2) = -j;  // |01> <10|
  hop(2, 1) = -j;
  Eigen::Matrix4d nn = Eigen::Matrix4d::Zero();
  nn(3, 3) = u;  // n (x) n

  terms.bonds.reserve(static_cast<size_t>(spec.sites - 1));
  for (int i = 1; i <= spec.sites - 1; ++i) terms.bonds.push_back({i, hop + nn});

  for (int i = 1; i <= spec.sites; ++i) {
    double e = spec.eps(i);
    if (e == 0.0) continue;
    Eigen::Matrix2d n = Eigen::Matrix2d::Zero();
    n(1, 1) = e;
    terms.sites.push_back({i, n});
  }
  return terms;
}

HamiltonianTerms build_hamiltonian_terms(const HamiltonianSpec& spec) {
  spec.validate();
  return build_hamiltonianterms_impl(spec);
}

std::vector<JumpChannel> build_jump_channels(const DissipationSpec& spec, Species /*species*/) {
  const int sites = static_cast<int>(spec.loss_rate.size());
  spec.validate(sites);
  std::vector<JumpChannel> channels;
  for (int i = 1; i <= sites; ++i) {
    double g = spec.loss_rate[static_cast<size_t>(i - 1)];
    if (g > 0.0) channels.push_back({JumpChannel::Kind::loss, i, g});
  }
  for (int i = 1; i <= sites; ++i) {
    double g = spec.dephase_rate[static_cast<size_t>(i - 1)];
    if (g > 0.0) channels.push_back({JumpChannel::Kind::dephase, i, g});
  }
  return channels;
}

}  // namespace ll
