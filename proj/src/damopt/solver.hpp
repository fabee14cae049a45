#pragma once

#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "damopt/arrivals.hpp"
#include "damopt/measure.hpp"
#include "damopt/policy.hpp"
#include "damopt/rate.hpp"
#include "damopt/throughput.hpp"

namespace damopt {

enum class InitPolicy { kLinear, kConstant, kSqrt };

const char* init_policy_name(InitPolicy init);
InitPolicy parse_init_policy(const std::string& name);

struct SolverConfig {
  double K = 0.0;
  double p0plus = 0.001;
  std::size_t grid_n = 512;
  double theta_tol = 0.01;
  std::size_t max_outer = 100;
  std::size_t ode_substeps = 4;
  InitPolicy init = InitPolicy::kLinear;
  // Optional per-coordinate grid search over (p0plus, K) in Gauss-Seidel.
  bool search = false;
  std::vector<double> search_p0plus;
  std::vector<double> search_K;
  // Gauss-Seidel: reject coordinate updates that lower the utility.
  bool ascent_guard = false;
  // Throw instead of warning when the utility drops between iterations.
  bool strict_ascent = false;
  // Keep every iterate's policy in the report (symmetric solver).
  bool keep_iterates = false;

  void validate() const;
};

// Initial policy on a grid of config.grid_n intervals over (0, capacity].
PolicyGrid initial_policy(const SolverConfig& config, double capacity);

// Integrates p' = [(lambda - zeta p) phi'(p) + zeta phi(p) + K] / (-p phi''(p))
// from p(0+) = p0plus by fixed-step RK4. The state is p^2 while p < 1 and
// log p above, which keeps the sqrt start and the fast growth well resolved.
PolicyGrid el_ode_solve(PhiFunction& phi, const HarvestParams& params,
                        const SolverConfig& config);

struct IterationRecord {
  std::size_t sweep = 0;
  std::size_t node = 0;
  double K = 0.0;
  double p0plus = 0.0;
  double utility = 0.0;  // of the candidate, even when it was rejected
  bool accepted = true;
};

struct SolveReport {
  std::vector<HarvestParams> params;
  std::vector<PolicyGrid> policies;
  std::vector<StationaryMeasure> measures;
  std::vector<double> utility_trace;     // entry 0 is the initial policy
  std::vector<IterationRecord> history;  // one record per coordinate update
  std::vector<PolicyGrid> iterates;      // initial policy first, when kept
  std::vector<std::string> warnings;
  std::string termination;               // "converged" or "max_outer"
  std::size_t iterations = 0;
  double utility = 0.0;
  double upper_bound = 0.0;

  SystemState state(const RateFunction& rate) const;
};

// Symmetric fixed point: every node shares one policy; each iteration
// solves the ODE against the law of the other M-1 nodes.
SolveReport solve_symmetric_mac(std::size_t m, const HarvestParams& params,
                                const RateFunction& rate, const SolverConfig& config);

// Coordinate ascent over nodes. configs has one entry per node or a single
// entry used for all nodes; stopping rule and iteration cap come from configs[0].
SolveReport solve_mac_gauss_seidel(std::span<const HarvestParams> nodes,
                                   const RateFunction& rate,
                                   std::span<const SolverConfig> configs);

struct ConstantPolicyStats {
  double atom;
  double mean_power;
  double power_variance;
};

// Constant policy p = lambda/zeta + rho on an infinite battery.
ConstantPolicyStats constant_policy_stats(const HarvestParams& params, double rho);

// |N(p) + p p' phi''(p)| at interior nodes 2..n-2 of node j's policy, with phi
// evaluated exactly from the other nodes' laws and p p' from fourth-order
// differences. Entries 0, 1, n-1, n are zero.
std::vector<double> euler_lagrange_residual(const SolveReport& report,
                                            const RateFunction& rate,
                                            std::size_t j, double K);

void write_report(std::ostream& out, const SolveReport& report);

}  // namespace damopt
