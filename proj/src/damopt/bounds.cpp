#include "damopt/bounds.hpp"

#include <cmath>

#include "damopt/error.hpp"

namespace damopt {

double upper_bound_finite(std::span<const HarvestParams> params, const RateFunction& rate) {
  double total = 0.0;
  for (const auto& p : params) {
    require(p.finite(), ErrorCode::kUsage,
            "infinite capacity: use the infinite-battery bound");
    require(p.lambda >= 0.0 && p.zeta > 0.0 && p.capacity >= 0.0, ErrorCode::kDomain,
            "invalid harvesting parameters");
    total += p.mean_energy_rate() * -std::expm1(-p.zeta * p.capacity);
  }
  return rate(total);
}

double upper_bound_infinite(std::span<const HarvestParams> params, const RateFunction& rate) {
  double total = 0.0;
  for (const auto& p : params) {
    require(p.lambda >= 0.0 && p.zeta > 0.0, ErrorCode::kDomain,
            "invalid harvesting parameters");
    total += p.mean_energy_rate();
  }
  return rate(total);
}

double upper_bound(std::span<const HarvestParams> params, const RateFunction& rate) {
  for (const auto& p : params)
    if (!p.finite()) return upper_bound_infinite(params, rate);
  return upper_bound_finite(params, rate);
}

}  // namespace damopt
