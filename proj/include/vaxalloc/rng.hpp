#pragma once

#include <cstdint>
#include <random>

namespace vaxalloc {

using Rng = std::mt19937_64;

// Independent random streams of one episode. Keeping them apart means the
// exogenous environment draws do not depend on which policy is running.
enum class Stream : std::uint32_t {
  kInitialState = 1,
  kEnvironment = 2,
  kObservation = 3,
  kSolver = 4,
  kScenario = 5,
};

inline Rng make_stream(std::uint64_t master_seed, Stream stream, std::uint32_t salt = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                    static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(stream), salt};
  return Rng(seq);
}

}  // namespace vaxalloc
