#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace damopt {

// Deterministic stream keyed by (seed, node, replication). Keys are mixed
// with splitmix64 so every stream is independent of evaluation order.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t node, std::uint64_t replication);

  // Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }
  // Exponential with the given rate, by inversion.
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace damopt
