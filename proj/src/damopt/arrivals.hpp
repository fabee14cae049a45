#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "damopt/random.hpp"

namespace damopt {

inline constexpr double kInfiniteCapacity = std::numeric_limits<double>::infinity();

// Per-node harvesting statistics: Poisson arrivals of intensity lambda,
// mean packet energy 1/zeta, battery capacity (may be infinite).
struct HarvestParams {
  double lambda = 1.0;
  double zeta = 1.0;
  double capacity = kInfiniteCapacity;

  bool finite() const { return std::isfinite(capacity); }
  double mean_energy_rate() const { return lambda / zeta; }
  // lambda = 0 is accepted and means "no harvesting".
  void validate() const;
};

struct ExponentialPackets {
  double zeta = 1.0;
};

// Piecewise-linear CDF through the knots (x_i, B(x_i)).
struct TabulatedPackets {
  std::vector<double> x;
  std::vector<double> cdf;
};

class PacketDistribution {
 public:
  static PacketDistribution exponential(double zeta);
  static PacketDistribution tabulated(std::vector<double> x, std::vector<double> cdf);
  // Two whitespace-separated columns (x, B(x)); '#' starts a comment.
  static PacketDistribution parse(std::istream& in);
  static PacketDistribution load(const std::string& path);

  bool is_exponential() const {
    return std::holds_alternative<ExponentialPackets>(form_);
  }
  double exponential_rate() const;
  double mean() const;

  // 1 - B(x) for x >= 0.
  double survival(double x) const;
  double sample(RandomStream& rng) const;

 private:
  explicit PacketDistribution(std::variant<ExponentialPackets, TabulatedPackets> f)
      : form_(std::move(f)) {}
  std::variant<ExponentialPackets, TabulatedPackets> form_;
};

double survival(const PacketDistribution& dist, double x);

struct Arrival {
  double time;
  double energy;
};

// Endless arrival sequence; times are +inf when lambda = 0.
class ArrivalStream {
 public:
  ArrivalStream(const HarvestParams& params, const PacketDistribution& dist,
                std::uint64_t seed, std::uint64_t node, std::uint64_t replication);
  Arrival next();

 private:
  double lambda_;
  const PacketDistribution* dist_;
  RandomStream rng_;
  double t_ = 0.0;
};

// Arrivals on (0, horizon]; the stream is keyed by (seed, node, replication).
std::vector<Arrival> sample_arrivals(const HarvestParams& params,
                                     const PacketDistribution& dist,
                                     double horizon, std::uint64_t seed,
                                     std::uint64_t node = 0,
                                     std::uint64_t replication = 0);

}  // namespace damopt
