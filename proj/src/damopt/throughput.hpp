#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "damopt/arrivals.hpp"
#include "damopt/measure.hpp"
#include "damopt/policy.hpp"
#include "damopt/rate.hpp"

namespace damopt {

// Discrete law of the transmitted power p(X) under a stationary measure:
// power 0 with the atom's mass, then p(x_i) with the quadrature weight of
// node i (right limit at x_0; tail mass folded into the last node).
struct PowerLaw {
  std::vector<double> power;
  std::vector<double> mass;
  std::size_t size() const { return power.size(); }
  double mean() const;
};

PowerLaw power_law(const PolicyGrid& policy, const StationaryMeasure& measure);

// Law of the sum of independent powers; capacity error above max_support.
PowerLaw convolve(std::span<const PowerLaw> laws, std::size_t max_support = 20'000'000);

struct NodeState {
  HarvestParams params;
  PolicyGrid policy;
  StationaryMeasure measure;
};

struct SystemState {
  std::vector<NodeState> nodes;
  RateFunction rate;
};

inline constexpr std::size_t kDefaultMaxNodes = 4;

// E[r(sum_k p_k(X_k))] over the product of the stationary measures, expanded
// over the subsets of nodes that are away from the empty state.
double sum_throughput(const SystemState& state, std::size_t max_nodes = kDefaultMaxNodes);

// phi(q) = E[r(q + sum_{k != j} p_k(X_k))] and its first two q-derivatives.
struct PhiMoments {
  std::vector<double> q;
  std::vector<double> phi;
  std::vector<double> d1;
  std::vector<double> d2;
};

PhiMoments phi_moments(const SystemState& state, std::size_t j,
                       std::span<const double> q_grid,
                       std::size_t max_nodes = kDefaultMaxNodes);

struct PhiJet {
  double phi, d1, d2;
};

// phi and derivatives as a function of a continuous power argument, for the
// ODE integrator. Small supports are summed directly; otherwise the moments
// are tabulated on t = log(1 + q / q_scale) and interpolated by cubic
// Hermite with the next derivative as slope.
class PhiFunction {
 public:
  PhiFunction(RateFunction rate, PowerLaw others, double q_max = 1e8);

  bool covers(double q) const { return !table_ || q <= q_max_; }
  void extend(double q_max);
  double q_max() const { return q_max_; }
  bool tabulated() const { return table_; }

  PhiJet operator()(double q) const;
  PhiJet exact(double q) const;
  const PowerLaw& others() const { return others_; }

 private:
  void build();

  RateFunction rate_;
  PowerLaw others_;
  double q_max_;
  bool table_;
  double dt_ = 0.025;
  double q_scale_ = 1e-4;
  // value and q-derivatives 1..3 at each t node
  std::vector<double> f0_, f1_, f2_, f3_;
};

// r(sum_k (lambda_k/zeta_k + rho)) * prod_k (lambda_k/zeta_k) / (lambda_k/zeta_k + rho)
double infinite_battery_lower_bound(std::span<const HarvestParams> params,
                                    double rho, const RateFunction& rate);

}  // namespace damopt
