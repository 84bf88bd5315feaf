#include "lsstream/random.hpp"

namespace lsstream {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t tag) {
  return mix64(parent ^ mix64(tag * 0xd1342543de82ef95ULL + 1));
}

std::uint64_t derive_seed(std::uint64_t parent, SeedPurpose purpose) {
  return derive_seed(parent, static_cast<std::uint64_t>(purpose));
}

std::uint64_t replicate_seed(std::uint64_t master, std::uint64_t index) {
  return derive_seed(master, 0x1000 + index);
}

double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

}  // namespace lsstream
