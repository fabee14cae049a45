#ifndef DAMOPT_H
#define DAMOPT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DAMOPT_API __declspec(dllexport)
#else
#define DAMOPT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum damopt_status {
  DAMOPT_OK = 0,
  DAMOPT_E_DOMAIN = 1,
  DAMOPT_E_USAGE = 2,
  DAMOPT_E_OVERFLOW = 3,
  DAMOPT_E_NON_ADMISSIBLE = 4,
  DAMOPT_E_CAPACITY = 5,
  DAMOPT_E_DIVERGENCE = 6,
  DAMOPT_E_IO = 7,
  DAMOPT_E_INTERNAL = 99
} damopt_status;

/* Message of the last failed call on this thread ("" if none). */
DAMOPT_API const char* damopt_last_error(void);
/* "DOMAIN", "USAGE", ... */
DAMOPT_API const char* damopt_status_name(damopt_status status);

/* capacity = DAMOPT_INFINITE_CAPACITY for an unbounded battery */
#define DAMOPT_INFINITE_CAPACITY (__builtin_inf())

typedef struct damopt_params {
  double lambda;
  double zeta;
  double capacity;
} damopt_params;

typedef struct damopt_policy damopt_policy;
typedef struct damopt_measure damopt_measure;
typedef struct damopt_packets damopt_packets;
typedef struct damopt_report damopt_report;
typedef struct damopt_stats damopt_stats;

/* Shannon rate 1/2 log2(1 + x/n0) and its derivatives (order 1 or 2). */
DAMOPT_API damopt_status damopt_rate(double n0, double x, double* out);
DAMOPT_API damopt_status damopt_rate_deriv(double n0, double x, int order, double* out);

/* Upper bound on the sum throughput; picks the infinite-battery form when any
   capacity is infinite. */
DAMOPT_API damopt_status damopt_upper_bound(const damopt_params* nodes, size_t m, double n0,
                                            double* out);
DAMOPT_API damopt_status damopt_upper_bound_finite(const damopt_params* nodes, size_t m,
                                                   double n0, double* out);
DAMOPT_API damopt_status damopt_upper_bound_infinite(const damopt_params* nodes, size_t m,
                                                     double n0, double* out);
DAMOPT_API damopt_status damopt_lower_bound_infinite(const damopt_params* nodes, size_t m,
                                                     double rho, double n0, double* out);
DAMOPT_API damopt_status damopt_constant_policy_stats(const damopt_params* params, double rho,
                                                      double* atom, double* mean_power,
                                                      double* power_variance);

/* Policies on a uniform grid over (0, extent]; values[0] must be 0. */
DAMOPT_API damopt_status damopt_policy_create(double extent, const double* values, size_t count,
                                              double p0plus, damopt_policy** out);
DAMOPT_API damopt_status damopt_policy_constant(double extent, size_t intervals, double power,
                                                damopt_policy** out);
DAMOPT_API damopt_status damopt_policy_load(const char* path, damopt_policy** out);
DAMOPT_API damopt_status damopt_policy_save(const damopt_policy* policy, const char* path);
DAMOPT_API size_t damopt_policy_size(const damopt_policy* policy);
DAMOPT_API double damopt_policy_extent(const damopt_policy* policy);
DAMOPT_API double damopt_policy_p0plus(const damopt_policy* policy);
DAMOPT_API damopt_status damopt_policy_values(const damopt_policy* policy, double* out,
                                              size_t count);
DAMOPT_API void damopt_policy_free(damopt_policy* policy);

DAMOPT_API damopt_status damopt_packets_exponential(double zeta, damopt_packets** out);
/* two columns x, B(x); '#' comments */
DAMOPT_API damopt_status damopt_packets_load(const char* path, damopt_packets** out);
DAMOPT_API void damopt_packets_free(damopt_packets* packets);

DAMOPT_API damopt_status damopt_measure_closed_form(const damopt_policy* policy,
                                                    const damopt_params* params,
                                                    damopt_measure** out);
DAMOPT_API damopt_status damopt_measure_volterra(const damopt_policy* policy,
                                                 const damopt_params* params,
                                                 const damopt_packets* packets,
                                                 damopt_measure** out);
DAMOPT_API double damopt_measure_atom(const damopt_measure* measure);
DAMOPT_API size_t damopt_measure_size(const damopt_measure* measure);
DAMOPT_API damopt_status damopt_measure_density(const damopt_measure* measure, double* out,
                                                size_t count);
DAMOPT_API damopt_status damopt_measure_mean_power(const damopt_measure* measure,
                                                   const damopt_policy* policy, double* out);
DAMOPT_API damopt_status damopt_measure_save(const damopt_measure* measure, const char* path);
DAMOPT_API void damopt_measure_free(damopt_measure* measure);

enum { DAMOPT_INIT_LINEAR = 0, DAMOPT_INIT_CONSTANT = 1, DAMOPT_INIT_SQRT = 2 };

typedef struct damopt_solver_config {
  double K;
  double p0plus;
  size_t grid_n;
  double theta_tol;
  size_t max_outer;
  size_t ode_substeps;
  int init;
  int search;
  const double* search_p0plus;
  size_t search_p0plus_count;
  const double* search_K;
  size_t search_K_count;
  int ascent_guard;
  int strict_ascent;
  int keep_iterates;
} damopt_solver_config;

DAMOPT_API void damopt_solver_config_default(damopt_solver_config* config);

DAMOPT_API damopt_status damopt_solve_symmetric(size_t m, const damopt_params* params, double n0,
                                                const damopt_solver_config* config,
                                                damopt_report** out);
/* configs: one per node, or a single one shared by all nodes */
DAMOPT_API damopt_status damopt_solve_gauss_seidel(const damopt_params* nodes, size_t m,
                                                   double n0,
                                                   const damopt_solver_config* configs,
                                                   size_t config_count, damopt_report** out);

DAMOPT_API double damopt_report_utility(const damopt_report* report);
DAMOPT_API double damopt_report_upper_bound(const damopt_report* report);
DAMOPT_API size_t damopt_report_nodes(const damopt_report* report);
DAMOPT_API size_t damopt_report_iterations(const damopt_report* report);
DAMOPT_API const char* damopt_report_termination(const damopt_report* report);
/* Copies up to `capacity` entries; returns the full trace length. */
DAMOPT_API size_t damopt_report_trace(const damopt_report* report, double* out, size_t capacity);
DAMOPT_API size_t damopt_report_warning_count(const damopt_report* report);
DAMOPT_API const char* damopt_report_warning(const damopt_report* report, size_t i);
DAMOPT_API damopt_status damopt_report_policy(const damopt_report* report, size_t node,
                                              damopt_policy** out);
DAMOPT_API damopt_status damopt_report_measure(const damopt_report* report, size_t node,
                                               damopt_measure** out);
/* Iterate policies, available when keep_iterates was set. */
DAMOPT_API size_t damopt_report_iterate_count(const damopt_report* report);
DAMOPT_API damopt_status damopt_report_iterate(const damopt_report* report, size_t i,
                                               damopt_policy** out);
DAMOPT_API damopt_status damopt_report_save(const damopt_report* report, const char* path);
/* Largest pointwise Euler-Lagrange residual of node `node` with constant K. */
DAMOPT_API damopt_status damopt_report_el_residual(const damopt_report* report, double n0,
                                                   size_t node, double K, double* out);
DAMOPT_API void damopt_report_free(damopt_report* report);

typedef struct damopt_sim_config {
  double horizon;
  size_t replications;
  uint64_t seed;
  double burn_in;
  const double* probes;
  size_t probe_count;
  double initial_level;
  size_t cdf_points;
  double cdf_max;
  size_t workers;
  int event_log;
} damopt_sim_config;

typedef struct damopt_node_summary {
  double atom, atom_se;
  double mean_power, mean_power_se;
  double power_variance, power_variance_se;
  double overflow_rate;
  double time_positive;
} damopt_node_summary;

DAMOPT_API void damopt_sim_config_default(damopt_sim_config* config);
DAMOPT_API damopt_status damopt_simulate(const damopt_params* nodes,
                                         const damopt_policy* const* policies,
                                         const damopt_packets* const* packets, size_t m,
                                         double n0, const damopt_sim_config* config,
                                         damopt_stats** out);
DAMOPT_API damopt_status damopt_stats_throughput(const damopt_stats* stats, double* mean,
                                                 double* se);
DAMOPT_API damopt_status damopt_stats_node(const damopt_stats* stats, size_t node,
                                           damopt_node_summary* out);
DAMOPT_API damopt_status damopt_stats_ks(const damopt_stats* stats, size_t node,
                                         const damopt_measure* measure,
                                         const damopt_policy* policy, double* out);
/* Writes the per-probe comparison to `path` when non-null. */
DAMOPT_API damopt_status damopt_stats_crossing_balance(
    const damopt_stats* stats, size_t node, const damopt_measure* measure,
    const damopt_policy* policy, const damopt_params* params, const damopt_packets* packets,
    const char* path, int* all_within, double* max_abs_z);
DAMOPT_API damopt_status damopt_stats_save(const damopt_stats* stats, const char* path);
DAMOPT_API void damopt_stats_free(damopt_stats* stats);

#ifdef __cplusplus
}
#endif

#endif
