#include "core/jw_jump.hpp"

namespace ll {

namespace {
constexpr double kAnnihilationThreshold = 1e-14;
}

std::vector<BlockSign> string_phase(const SymmetricMps& state, int site) {
  require(site >= 1 && site <= state.sites(), ErrorCode::invalid_spec, "site out of range");
  const auto& bond = state.bond(site - 1);
  std::vector<BlockSign> signs;
  signs.reserve(static_cast<size_t>(bond.count()));
  for (int i = 0; i < bond.count(); ++i) {
    const int q = bond.charge[static_cast<size_t>(i)];
    signs.push_back({q, (q & 1) ? -1 : +1});
  }
  return signs;
}

double apply_loss(SymmetricMps& state, int site, Species species) {
  const double weight = state.local_density(site);
  require(weight >= kAnnihilationThreshold, ErrorCode::annihilated_state,
          "loss on site " + std::to_string(site) + " would annihilate the state (<n> = " +
              std::to_string(weight) + ")");
  state.apply_lowering(site, species == Species::spinless_fermion);
  return weight;
}

double apply_dephasing_jump(SymmetricMps& state, int site) {
  const double weight = state.local_density(site);
  require(weight >= kAnnihilationThreshold, ErrorCode::annihilated_state,
          "dephasing jump on site " + std::to_string(site) + " would annihilate the state (<n> = " +
              std::to_string(weight) + ")");
  state.project_occupied(site);
  return weight;
}

}  // namespace ll
