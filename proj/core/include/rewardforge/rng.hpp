#pragma once

#include <cstdint>
#include <string_view>

namespace rewardforge {

// Counter-based PRNG with explicit state (SplitMix64 output function).
// Every draw is a pure hash of (seed, counter), so a stream can be replayed
// from any point by restoring the two fields. The algorithm is fixed for the
// 0.x series; changing it is a breaking change for recorded experiments.
struct RngState {
  std::uint64_t seed = 0;
  std::uint64_t counter = 0;

  explicit RngState(std::uint64_t s = 0) : seed(s) {}

  std::uint64_t next_u64();

  // Uniform double in [0, 1).
  double next_double();

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n);

  // Standard normal via Box-Muller; consumes two uniforms per call.
  double next_gaussian();
};

// Derives an independent seed for a named stage/stream from a master seed.
// Used so pretrain/midtrain/rl/eval/data stages are independently replayable.
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag);

// FNV-1a 64-bit hash, used for corpus integrity fields and seed derivation.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace rewardforge
