#pragma once

#include <vector>

#include "core/model.hpp"
#include "core/symmetric_mps.hpp"

// Loss and dephasing jumps on a SymmetricMps. For fermions the Jordan-Wigner
// string collapses to a per-sector sign read directly from the cumulative
// charge stored on the bond left of the jump site; it is never recomputed by
// contraction.

namespace ll {

struct BlockSign {
  int charge = 0;
  int sign = 1;
};

// Per-sector string signs (-1)^charge on the bond left of `site`.
std::vector<BlockSign> string_phase(const SymmetricMps& state, int site);

// sigma^- at `site` (times the string sign per sector for fermions).
// Returns the jump weight = pre-loss <n_site>; the state is left
// unnormalized, with squared norm equal to the weight for normalized input.
// A weight below 1e-14 (loss on an empty site) is an annihilated-state error.
double apply_loss(SymmetricMps& state, int site, Species species);

// Projection onto the occupied component at `site` (n is a projector for
// local dimension 2); identical for both statistics. Same weight contract.
double apply_dephasing_jump(SymmetricMps& state, int site);

}  // namespace ll
