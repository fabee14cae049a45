#include "damopt.h"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <new>
#include <optional>
#include <string>
#include <vector>

#include "damopt/bounds.hpp"
#include "damopt/error.hpp"
#include "damopt/measure.hpp"
#include "damopt/simulator.hpp"
#include "damopt/solver.hpp"
#include "damopt/throughput.hpp"

struct damopt_policy {
  damopt::PolicyGrid grid;
};
struct damopt_measure {
  damopt::StationaryMeasure measure;
};
struct damopt_packets {
  damopt::PacketDistribution dist;
};
struct damopt_report {
  damopt::SolveReport report;
};
struct damopt_stats {
  damopt::TrajectoryStats stats;
};

namespace {

thread_local std::string g_last_error;

damopt_status to_status(damopt::ErrorCode code) {
  return static_cast<damopt_status>(static_cast<int>(code));
}

template <class F>
damopt_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DAMOPT_OK;
  } catch (const damopt::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DAMOPT_E_CAPACITY;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DAMOPT_E_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  damopt::require(p != nullptr, damopt::ErrorCode::kUsage, std::string("null ") + what);
}

damopt::HarvestParams params_of(const damopt_params& p) {
  return {p.lambda, p.zeta, p.capacity};
}

std::vector<damopt::HarvestParams> params_of(const damopt_params* nodes, size_t m) {
  need(nodes, "node parameters");
  damopt::require(m >= 1, damopt::ErrorCode::kUsage, "need at least one node");
  std::vector<damopt::HarvestParams> out;
  for (size_t k = 0; k < m; ++k) out.push_back(params_of(nodes[k]));
  return out;
}

damopt::SolverConfig config_of(const damopt_solver_config& c) {
  damopt::SolverConfig s;
  s.K = c.K;
  s.p0plus = c.p0plus;
  s.grid_n = c.grid_n;
  s.theta_tol = c.theta_tol;
  s.max_outer = c.max_outer;
  s.ode_substeps = c.ode_substeps;
  switch (c.init) {
    case DAMOPT_INIT_LINEAR: s.init = damopt::InitPolicy::kLinear; break;
    case DAMOPT_INIT_CONSTANT: s.init = damopt::InitPolicy::kConstant; break;
    case DAMOPT_INIT_SQRT: s.init = damopt::InitPolicy::kSqrt; break;
    default: damopt::fail(damopt::ErrorCode::kUsage, "unknown initial policy code");
  }
  s.search = c.search != 0;
  if (c.search_p0plus) s.search_p0plus.assign(c.search_p0plus, c.search_p0plus + c.search_p0plus_count);
  if (c.search_K) s.search_K.assign(c.search_K, c.search_K + c.search_K_count);
  s.ascent_guard = c.ascent_guard != 0;
  s.strict_ascent = c.strict_ascent != 0;
  s.keep_iterates = c.keep_iterates != 0;
  return s;
}

template <class Write>
void write_file(const char* path, Write&& w) {
  need(path, "path");
  std::ofstream out(path);
  damopt::require(out.good(), damopt::ErrorCode::kIo,
                  std::string("cannot open '") + path + "' for writing");
  w(out);
  damopt::require(out.good(), damopt::ErrorCode::kIo, std::string("write to '") + path + "' failed");
}

}  // namespace

extern "C" {

const char* damopt_last_error(void) { return g_last_error.c_str(); }

const char* damopt_status_name(damopt_status status) {
  if (status == DAMOPT_OK) return "OK";
  if (status == DAMOPT_E_INTERNAL) return "INTERNAL";
  return damopt::error_code_name(static_cast<damopt::ErrorCode>(status));
}

damopt_status damopt_rate(double n0, double x, double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::rate(damopt::RateFunction::shannon(n0), x);
  });
}

damopt_status damopt_rate_deriv(double n0, double x, int order, double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::rate_deriv(damopt::RateFunction::shannon(n0), x, order);
  });
}

damopt_status damopt_upper_bound(const damopt_params* nodes, size_t m, double n0, double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::upper_bound(params_of(nodes, m), damopt::RateFunction::shannon(n0));
  });
}

damopt_status damopt_upper_bound_finite(const damopt_params* nodes, size_t m, double n0,
                                        double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::upper_bound_finite(params_of(nodes, m), damopt::RateFunction::shannon(n0));
  });
}

damopt_status damopt_upper_bound_infinite(const damopt_params* nodes, size_t m, double n0,
                                          double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::upper_bound_infinite(params_of(nodes, m), damopt::RateFunction::shannon(n0));
  });
}

damopt_status damopt_lower_bound_infinite(const damopt_params* nodes, size_t m, double rho,
                                          double n0, double* out) {
  return guarded([&] {
    need(out, "output");
    *out = damopt::infinite_battery_lower_bound(params_of(nodes, m), rho,
                                                damopt::RateFunction::shannon(n0));
  });
}

damopt_status damopt_constant_policy_stats(const damopt_params* params, double rho,
                                           double* atom, double* mean_power,
                                           double* power_variance) {
  return guarded([&] {
    need(params, "parameters");
    const auto s = damopt::constant_policy_stats(params_of(*params), rho);
    if (atom) *atom = s.atom;
    if (mean_power) *mean_power = s.mean_power;
    if (power_variance) *power_variance = s.power_variance;
  });
}

damopt_status damopt_policy_create(double extent, const double* values, size_t count,
                                   double p0plus, damopt_policy** out) {
  return guarded([&] {
    need(values, "values");
    need(out, "output");
    *out = new damopt_policy{damopt::PolicyGrid(extent, std::vector<double>(values, values + count),
                                                p0plus)};
  });
}

damopt_status damopt_policy_constant(double extent, size_t intervals, double power,
                                     damopt_policy** out) {
  return guarded([&] {
    need(out, "output");
    *out = new damopt_policy{damopt::PolicyGrid::constant(extent, intervals, power)};
  });
}

damopt_status damopt_policy_load(const char* path, damopt_policy** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output");
    *out = new damopt_policy{damopt::load_policy(path)};
  });
}

damopt_status damopt_policy_save(const damopt_policy* policy, const char* path) {
  return guarded([&] {
    need(policy, "policy");
    write_file(path, [&](std::ostream& o) { damopt::write_policy(o, policy->grid); });
  });
}

size_t damopt_policy_size(const damopt_policy* policy) { return policy ? policy->grid.size() : 0; }
double damopt_policy_extent(const damopt_policy* policy) {
  return policy ? policy->grid.extent() : NAN;
}
double damopt_policy_p0plus(const damopt_policy* policy) {
  return policy ? policy->grid.p0plus() : NAN;
}

damopt_status damopt_policy_values(const damopt_policy* policy, double* out, size_t count) {
  return guarded([&] {
    need(policy, "policy");
    need(out, "output");
    damopt::require(count >= policy->grid.size(), damopt::ErrorCode::kUsage, "output buffer too small");
    for (size_t i = 0; i < policy->grid.size(); ++i) out[i] = policy->grid.value(i);
  });
}

void damopt_policy_free(damopt_policy* policy) { delete policy; }

damopt_status damopt_packets_exponential(double zeta, damopt_packets** out) {
  return guarded([&] {
    need(out, "output");
    *out = new damopt_packets{damopt::PacketDistribution::exponential(zeta)};
  });
}

damopt_status damopt_packets_load(const char* path, damopt_packets** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "output");
    *out = new damopt_packets{damopt::PacketDistribution::load(path)};
  });
}

void damopt_packets_free(damopt_packets* packets) { delete packets; }

damopt_status damopt_measure_closed_form(const damopt_policy* policy, const damopt_params* params,
                                         damopt_measure** out) {
  return guarded([&] {
    need(policy, "policy");
    need(params, "parameters");
    need(out, "output");
    *out = new damopt_measure{damopt::measure_closed_form(policy->grid, params_of(*params))};
  });
}

damopt_status damopt_measure_volterra(const damopt_policy* policy, const damopt_params* params,
                                      const damopt_packets* packets, damopt_measure** out) {
  return guarded([&] {
    need(policy, "policy");
    need(params, "parameters");
    need(packets, "packets");
    need(out, "output");
    *out = new damopt_measure{
        damopt::measure_volterra(policy->grid, params_of(*params), packets->dist)};
  });
}

double damopt_measure_atom(const damopt_measure* m) { return m ? m->measure.atom : NAN; }
size_t damopt_measure_size(const damopt_measure* m) { return m ? m->measure.density.size() : 0; }

damopt_status damopt_measure_density(const damopt_measure* m, double* out, size_t count) {
  return guarded([&] {
    need(m, "measure");
    need(out, "output");
    damopt::require(count >= m->measure.density.size(), damopt::ErrorCode::kUsage,
                    "output buffer too small");
    for (size_t i = 0; i < m->measure.density.size(); ++i) out[i] = m->measure.density[i];
  });
}

damopt_status damopt_measure_mean_power(const damopt_measure* m, const damopt_policy* policy,
                                        double* out) {
  return guarded([&] {
    need(m, "measure");
    need(policy, "policy");
    need(out, "output");
    *out = damopt::mean_power(m->measure, policy->grid);
  });
}

damopt_status damopt_measure_save(const damopt_measure* m, const char* path) {
  return guarded([&] {
    need(m, "measure");
    write_file(path, [&](std::ostream& o) { damopt::write_measure(o, m->measure); });
  });
}

void damopt_measure_free(damopt_measure* m) { delete m; }

void damopt_solver_config_default(damopt_solver_config* c) {
  if (!c) return;
  const damopt::SolverConfig d;
  *c = damopt_solver_config{};
  c->K = d.K;
  c->p0plus = d.p0plus;
  c->grid_n = d.grid_n;
  c->theta_tol = d.theta_tol;
  c->max_outer = d.max_outer;
  c->ode_substeps = d.ode_substeps;
  c->init = DAMOPT_INIT_LINEAR;
  c->ascent_guard = d.ascent_guard ? 1 : 0;
  c->strict_ascent = d.strict_ascent ? 1 : 0;
}

damopt_status damopt_solve_symmetric(size_t m, const damopt_params* params, double n0,
                                     const damopt_solver_config* config, damopt_report** out) {
  return guarded([&] {
    need(params, "parameters");
    need(config, "config");
    need(out, "output");
    *out = new damopt_report{damopt::solve_symmetric_mac(
        m, params_of(*params), damopt::RateFunction::shannon(n0), config_of(*config))};
  });
}

damopt_status damopt_solve_gauss_seidel(const damopt_params* nodes, size_t m, double n0,
                                        const damopt_solver_config* configs, size_t config_count,
                                        damopt_report** out) {
  return guarded([&] {
    need(configs, "configs");
    need(out, "output");
    std::vector<damopt::SolverConfig> cs;
    for (size_t i = 0; i < config_count; ++i) cs.push_back(config_of(configs[i]));
    *out = new damopt_report{damopt::solve_mac_gauss_seidel(
        params_of(nodes, m), damopt::RateFunction::shannon(n0), cs)};
  });
}

double damopt_report_utility(const damopt_report* r) { return r ? r->report.utility : NAN; }
double damopt_report_upper_bound(const damopt_report* r) { return r ? r->report.upper_bound : NAN; }
size_t damopt_report_nodes(const damopt_report* r) { return r ? r->report.policies.size() : 0; }
size_t damopt_report_iterations(const damopt_report* r) { return r ? r->report.iterations : 0; }
const char* damopt_report_termination(const damopt_report* r) {
  return r ? r->report.termination.c_str() : "";
}

size_t damopt_report_trace(const damopt_report* r, double* out, size_t capacity) {
  if (!r) return 0;
  const auto& t = r->report.utility_trace;
  for (size_t i = 0; out && i < t.size() && i < capacity; ++i) out[i] = t[i];
  return t.size();
}

size_t damopt_report_warning_count(const damopt_report* r) {
  return r ? r->report.warnings.size() : 0;
}

const char* damopt_report_warning(const damopt_report* r, size_t i) {
  if (!r || i >= r->report.warnings.size()) return "";
  return r->report.warnings[i].c_str();
}

damopt_status damopt_report_policy(const damopt_report* r, size_t node, damopt_policy** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "output");
    damopt::require(node < r->report.policies.size(), damopt::ErrorCode::kUsage,
                    "node index out of range");
    *out = new damopt_policy{r->report.policies[node]};
  });
}

damopt_status damopt_report_measure(const damopt_report* r, size_t node, damopt_measure** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "output");
    damopt::require(node < r->report.measures.size(), damopt::ErrorCode::kUsage,
                    "node index out of range");
    *out = new damopt_measure{r->report.measures[node]};
  });
}

size_t damopt_report_iterate_count(const damopt_report* r) {
  return r ? r->report.iterates.size() : 0;
}

damopt_status damopt_report_iterate(const damopt_report* r, size_t i, damopt_policy** out) {
  return guarded([&] {
    need(r, "report");
    need(out, "output");
    damopt::require(i < r->report.iterates.size(), damopt::ErrorCode::kUsage,
                    "iterate index out of range");
    *out = new damopt_policy{r->report.iterates[i]};
  });
}

damopt_status damopt_report_save(const damopt_report* r, const char* path) {
  return guarded([&] {
    need(r, "report");
    write_file(path, [&](std::ostream& o) { damopt::write_report(o, r->report); });
  });
}

damopt_status damopt_report_el_residual(const damopt_report* r, double n0, size_t node, double K,
                                        double* out) {
  return guarded([&] {
    need(r, "report");
    need(out, "output");
    const auto res = damopt::euler_lagrange_residual(r->report, damopt::RateFunction::shannon(n0),
                                                     node, K);
    double worst = 0.0;
    for (double v : res) worst = std::max(worst, v);
    *out = worst;
  });
}

void damopt_report_free(damopt_report* r) { delete r; }

void damopt_sim_config_default(damopt_sim_config* c) {
  if (!c) return;
  const damopt::SimConfig d;
  *c = damopt_sim_config{};
  c->horizon = d.horizon;
  c->replications = d.replications;
  c->seed = d.seed;
  c->burn_in = d.burn_in;
  c->initial_level = d.initial_level;
  c->cdf_points = d.cdf_points;
  c->cdf_max = d.cdf_max;
  c->workers = d.workers;
  c->event_log = d.event_log ? 1 : 0;
}

damopt_status damopt_simulate(const damopt_params* nodes, const damopt_policy* const* policies,
                              const damopt_packets* const* packets, size_t m, double n0,
                              const damopt_sim_config* config, damopt_stats** out) {
  return guarded([&] {
    need(policies, "policies");
    need(packets, "packets");
    need(config, "config");
    need(out, "output");
    const auto params = params_of(nodes, m);
    std::vector<damopt::SimNode> sim;
    for (size_t k = 0; k < m; ++k) {
      need(policies[k], "policy");
      need(packets[k], "packets");
      sim.push_back({params[k], policies[k]->grid, packets[k]->dist});
    }
    damopt::SimConfig c;
    c.horizon = config->horizon;
    c.replications = config->replications;
    c.seed = config->seed;
    c.burn_in = config->burn_in;
    if (config->probes) c.level_probes.assign(config->probes, config->probes + config->probe_count);
    c.initial_level = config->initial_level;
    c.cdf_points = config->cdf_points;
    c.cdf_max = config->cdf_max;
    c.workers = config->workers;
    c.event_log = config->event_log != 0;
    *out = new damopt_stats{damopt::simulate(sim, damopt::RateFunction::shannon(n0), c)};
  });
}

damopt_status damopt_stats_throughput(const damopt_stats* s, double* mean, double* se) {
  return guarded([&] {
    need(s, "stats");
    if (mean) *mean = s->stats.throughput.mean;
    if (se) *se = s->stats.throughput.se;
  });
}

damopt_status damopt_stats_node(const damopt_stats* s, size_t node, damopt_node_summary* out) {
  return guarded([&] {
    need(s, "stats");
    need(out, "output");
    damopt::require(node < s->stats.nodes.size(), damopt::ErrorCode::kUsage,
                    "node index out of range");
    const auto& n = s->stats.nodes[node];
    *out = {n.atom.mean,           n.atom.se,          n.mean_power.mean, n.mean_power.se,
            n.power_variance.mean, n.power_variance.se, n.overflow_rate.mean, n.time_positive};
  });
}

damopt_status damopt_stats_ks(const damopt_stats* s, size_t node, const damopt_measure* measure,
                              const damopt_policy* policy, double* out) {
  return guarded([&] {
    need(s, "stats");
    need(measure, "measure");
    need(policy, "policy");
    need(out, "output");
    damopt::require(node < s->stats.nodes.size(), damopt::ErrorCode::kUsage,
                    "node index out of range");
    *out = damopt::ks_distance(s->stats.nodes[node], measure->measure, policy->grid);
  });
}

damopt_status damopt_stats_crossing_balance(const damopt_stats* s, size_t node,
                                            const damopt_measure* measure,
                                            const damopt_policy* policy,
                                            const damopt_params* params,
                                            const damopt_packets* packets, const char* path,
                                            int* all_within, double* max_abs_z) {
  return guarded([&] {
    need(s, "stats");
    need(measure, "measure");
    need(policy, "policy");
    need(params, "parameters");
    need(packets, "packets");
    const auto checks = damopt::crossing_balance(s->stats, measure->measure, policy->grid,
                                                 params_of(*params), packets->dist, node);
    bool ok = true;
    double worst = 0.0;
    for (const auto& c : checks) {
      ok = ok && c.within_3se;
      worst = std::max({worst, std::abs(c.z_down), std::abs(c.z_up)});
    }
    if (all_within) *all_within = ok ? 1 : 0;
    if (max_abs_z) *max_abs_z = worst;
    if (path) write_file(path, [&](std::ostream& o) { damopt::write_crossings(o, checks); });
  });
}

damopt_status damopt_stats_save(const damopt_stats* s, const char* path) {
  return guarded([&] {
    need(s, "stats");
    write_file(path, [&](std::ostream& o) { damopt::write_stats(o, s->stats); });
  });
}

void damopt_stats_free(damopt_stats* s) { delete s; }

}  // extern "C"
