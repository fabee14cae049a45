#pragma once

#include <functional>
#include <ostream>
#include <vector>

#include "damopt/arrivals.hpp"
#include "damopt/policy.hpp"

namespace damopt {

// Stationary law of the battery level: an atom at 0 plus a density on
// (0, extent]. Quadrature is the trapezoid rule in the cumulant variable
// s(x) = int_0^x lambda / p, in which the measure has the bounded density
// f p / lambda; this keeps the 1/p singularity at x = 0+ out of the sums.
struct StationaryMeasure {
  double atom = 1.0;
  double step = 0.0;
  std::vector<double> density;    // f(x_i); density[0] is f(0+)
  std::vector<double> flux;       // f(x_i) p(x_i), the downcrossing rate
  std::vector<double> weights;    // quadrature mass attached to node i
  std::vector<double> cell_mass;  // mass of (x_c, x_{c+1}]
  double tail_mass = 0.0;         // mass above the grid (infinite battery)

  double total_mass() const;
  // P(X <= x_i) at every node.
  std::vector<double> cdf() const;
  void require_normalized(double tol = 1e-6) const;
};

// Closed-form measure for exponential packets (rate params.zeta).
// params.capacity must equal policy.extent() or be infinite; in the latter
// case the policy is continued by its last value and the tail mass is
// integrated analytically.
StationaryMeasure measure_closed_form(const PolicyGrid& policy,
                                      const HarvestParams& params);

// Trapezoid marching for the Volterra equation of the second kind with
// kernel 1 - B(x - v); works for any packet distribution, finite capacity.
StationaryMeasure measure_volterra(const PolicyGrid& policy,
                                   const HarvestParams& params,
                                   const PacketDistribution& dist);

double mean_power(const StationaryMeasure& measure, const PolicyGrid& policy);

// |f(x)p(x) - lambda [pi0 (1 - B(x)) + int_0^x (1 - B(x - v)) f(v) dv]| at
// every node.
std::vector<double> level_crossing_residual(const StationaryMeasure& measure,
                                            const PolicyGrid& policy,
                                            const HarvestParams& params,
                                            const PacketDistribution& dist);

// Analytic crossing rates at an arbitrary level in (0, extent).
double downcrossing_rate(const StationaryMeasure& measure,
                         const PolicyGrid& policy, double level);
double upcrossing_rate(const StationaryMeasure& measure, const PolicyGrid& policy,
                       const HarvestParams& params,
                       const PacketDistribution& dist, double level);

// Grid a policy for an infinite battery, doubling the extent (at fixed
// step) until the closed-form tail mass drops below tail_tol.
PolicyGrid grid_for_infinite_battery(const std::function<double(double)>& p,
                                     double p0plus, const HarvestParams& params,
                                     double step, double tail_tol = 1e-8);

// "# atom = <pi0>" header, then "x f(x)" rows for x > 0.
void write_measure(std::ostream& out, const StationaryMeasure& measure);

}  // namespace damopt
