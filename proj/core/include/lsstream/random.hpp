#ifndef LSSTREAM_RANDOM_HPP
#define LSSTREAM_RANDOM_HPP

#include <cstdint>
#include <random>

namespace lsstream {

using Rng = std::mt19937_64;

/// Purpose tags for seed derivation. A replicate (or a single run) owns one
/// seed; every consumer of randomness inside it gets its own child seed, so
/// that e.g. the selection draws U_t do not shift when the precision-update
/// draws J_t are switched on or off.
enum class SeedPurpose : std::uint64_t {
  kCoefficients = 1,
  kInnovations = 2,
  kExogenous = 3,
  kSelection = 4,
  kPrecisionUpdate = 5,
  kMonteCarlo = 6,
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Child seed of `parent` for a purpose tag. Deterministic, and distinct
/// tags give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag);
std::uint64_t derive_seed(std::uint64_t parent, SeedPurpose purpose);

/// Seed of replicate `index` under a master seed.
std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index);

/// Uniform draw in the open interval (0, 1), 53 bits.
double uniform_open01(Rng& rng);

}  // namespace lsstream

#endif  // LSSTREAM_RANDOM_HPP
