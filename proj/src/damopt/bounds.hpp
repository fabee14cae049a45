#pragma once

#include <span>

#include "damopt/arrivals.hpp"
#include "damopt/rate.hpp"

namespace damopt {

// r(sum_k (lambda_k / zeta_k)(1 - exp(-zeta_k L_k))); all capacities finite.
double upper_bound_finite(std::span<const HarvestParams> params, const RateFunction& rate);

// r(sum_k lambda_k / zeta_k)
double upper_bound_infinite(std::span<const HarvestParams> params, const RateFunction& rate);

// Dispatches on whether every capacity is finite.
double upper_bound(std::span<const HarvestParams> params, const RateFunction& rate);

}  // namespace damopt
