#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "damopt/arrivals.hpp"
#include "damopt/measure.hpp"
#include "damopt/policy.hpp"
#include "damopt/rate.hpp"

namespace damopt {

// Exact drain dynamics dX/dt = -p(X) for a gridded policy. On each cell p^2
// is linear in x, so p is linear in time and every map below is closed form.
class DepletionMap {
 public:
  explicit DepletionMap(const PolicyGrid& policy);

  // Time to drain from x to 0.
  double tau(double x) const;
  // Level reached from x after dt without arrivals (0 once drained).
  double level_after(double x, double dt) const;
  double power(double x) const { return policy_(x); }
  // int_0^x p(v) dv, which equals int p^2 dt along a drain.
  double power_integral(double x) const;
  const PolicyGrid& policy() const { return policy_; }

  // With `remaining` drain time left: the cell the level is in (n above the
  // grid, -1 when empty), and the power there.
  std::ptrdiff_t cell_of_time(double remaining) const;
  double power_at_time(double remaining, std::size_t cell) const;
  // tau(x_i); for i = n this is where the constant tail begins.
  double node_time(std::size_t i) const { return t_[i]; }

 private:
  PolicyGrid policy_;
  std::vector<double> t_;   // tau at nodes
  std::vector<double> e_;   // int_0^{x_i} p dv
  std::vector<double> half_slope_;
};

struct SimNode {
  HarvestParams params;
  PolicyGrid policy;
  PacketDistribution packets;
};

struct SimConfig {
  double horizon = 1e5;
  std::size_t replications = 1;
  std::uint64_t seed = 1;
  double burn_in = 0.0;
  std::vector<double> level_probes;
  double initial_level = 0.0;
  // Empirical CDF sampled at cdf_points + 1 levels on [0, cdf_max];
  // cdf_max <= 0 means the policy grid extent.
  std::size_t cdf_points = 1000;
  double cdf_max = 0.0;
  std::size_t workers = 1;
  bool event_log = false;
  std::size_t event_log_limit = 100000;

  void validate() const;
};

struct Estimate {
  double mean = 0.0;
  double se = 0.0;  // standard error across replications; inf if only one
};

struct NodeStats {
  Estimate atom;
  Estimate mean_power;
  Estimate power_variance;
  Estimate overflow_rate;  // clipped energy per unit time
  double time_positive = 0.0;  // fraction of time in (0, L], pooled
  std::vector<double> cdf_levels;
  std::vector<double> cdf;     // pooled over replications
  std::vector<Estimate> down_rate;
  std::vector<Estimate> up_rate;
  std::vector<std::uint64_t> down_count;
  std::vector<std::uint64_t> up_count;
};

struct SimEvent {
  double time;
  std::size_t node;
  std::string kind;  // "arrival", "empty"
  double level;
};

struct TrajectoryStats {
  double horizon = 0.0;
  double burn_in = 0.0;
  std::size_t replications = 0;
  std::vector<double> probes;
  Estimate throughput;
  std::vector<NodeStats> nodes;
  std::vector<SimEvent> events;  // replication 0 only, when enabled
};

TrajectoryStats simulate(const std::vector<SimNode>& nodes, const RateFunction& rate,
                         const SimConfig& config);

struct CrossingCheck {
  double level;
  Estimate empirical_down;
  Estimate empirical_up;
  double analytic_down;
  double analytic_up;
  double z_down;  // (empirical - analytic) / se
  double z_up;
  bool within_3se;
};

// Empirical vs analytic down/up-crossing rates of node `node` at each probe.
std::vector<CrossingCheck> crossing_balance(const TrajectoryStats& stats,
                                            const StationaryMeasure& measure,
                                            const PolicyGrid& policy,
                                            const HarvestParams& params,
                                            const PacketDistribution& dist,
                                            std::size_t node = 0);

// Sup distance between the pooled empirical CDF and the measure's CDF.
double ks_distance(const NodeStats& stats, const StationaryMeasure& measure,
                   const PolicyGrid& policy);

void write_stats(std::ostream& out, const TrajectoryStats& stats);
void write_crossings(std::ostream& out, const std::vector<CrossingCheck>& checks);

}  // namespace damopt
