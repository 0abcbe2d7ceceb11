#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace ll {

enum class ErrorCode {
  invalid_spec,
  charge_violation,
  annihilated_state,
  capacity,
  grid_mismatch,
  config,
  io,
  validation,
  integrator_failure,
  internal,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

inline void require(bool cond, ErrorCode code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

// Seeded generator with a fixed uniform-double recipe, so streams do not
// depend on the standard library's distribution implementation.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t raw() { return eng_(); }
  // uniform in [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

private:
  std::mt19937_64 eng_;
};

}  // namespace ll
