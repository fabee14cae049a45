#include "damopt/random.hpp"

#include <cmath>

namespace damopt {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t node,
                           std::uint64_t replication) {
  std::uint64_t key = splitmix64(seed);
  key = splitmix64(key ^ (node * 0x632be59bd9b4e019ULL));
  key = splitmix64(key ^ (replication * 0x85157af5ULL + 0x1234567ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(key),
                    static_cast<std::uint32_t>(key >> 32)};
  engine_.seed(seq);
}

}  // namespace damopt
