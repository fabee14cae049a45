#include "damopt/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "damopt/bounds.hpp"
#include "damopt/error.hpp"

namespace damopt {
namespace {

constexpr double kDecreaseSlack = 1e-6;
constexpr double kMaxLogPower = 340.0;
constexpr double kExtendedRange = 1e150;

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

double utility_of(const std::vector<HarvestParams>& params,
                  const std::vector<PolicyGrid>& policies,
                  const std::vector<StationaryMeasure>& measures,
                  const RateFunction& rate) {
  SystemState s{{}, rate};
  for (std::size_t k = 0; k < params.size(); ++k)
    s.nodes.push_back({params[k], policies[k], measures[k]});
  return sum_throughput(s);
}

PowerLaw others_law(const std::vector<PolicyGrid>& policies,
                    const std::vector<StationaryMeasure>& measures, std::size_t j) {
  std::vector<PowerLaw> laws;
  for (std::size_t k = 0; k < policies.size(); ++k)
    if (k != j) laws.push_back(power_law(policies[k], measures[k]));
  return convolve(laws);
}

bool is_increasing(const PolicyGrid& p) {
  for (std::size_t i = 0; i + 1 < p.size(); ++i)
    if (p.node_power(i + 1) < p.node_power(i)) return false;
  return true;
}

void require_finite_capacity(const HarvestParams& params) {
  params.validate();
  require(params.finite(), ErrorCode::kUsage,
          "policy solvers need a finite battery capacity");
}

double relative_change(double before, double after) {
  const double scale = std::max(std::abs(before), std::numeric_limits<double>::min());
  return std::abs(after - before) / scale;
}

}  // namespace

const char* init_policy_name(InitPolicy init) {
  switch (init) {
    case InitPolicy::kLinear: return "linear";
    case InitPolicy::kConstant: return "constant";
    case InitPolicy::kSqrt: return "sqrt";
  }
  return "?";
}

InitPolicy parse_init_policy(const std::string& name) {
  if (name == "linear") return InitPolicy::kLinear;
  if (name == "constant") return InitPolicy::kConstant;
  if (name == "sqrt") return InitPolicy::kSqrt;
  fail(ErrorCode::kUsage, "unknown initial policy '" + name + "' (linear, constant, sqrt)");
}

void SolverConfig::validate() const {
  require(p0plus > 0.0 && std::isfinite(p0plus), ErrorCode::kDomain, "p0plus must be > 0");
  require(theta_tol > 0.0, ErrorCode::kDomain, "theta_tol must be > 0");
  require(grid_n >= 64, ErrorCode::kDomain, "grid_n must be >= 64");
  require(max_outer >= 1, ErrorCode::kDomain, "max_outer must be >= 1");
  require(ode_substeps >= 1, ErrorCode::kDomain, "ode_substeps must be >= 1");
  require(std::isfinite(K), ErrorCode::kDomain, "K must be finite");
  for (double v : search_p0plus)
    require(v > 0.0, ErrorCode::kDomain, "search p0plus values must be > 0");
}

PolicyGrid initial_policy(const SolverConfig& config, double capacity) {
  const double p0 = config.p0plus;
  switch (config.init) {
    case InitPolicy::kLinear:
      return PolicyGrid::from_function(capacity, config.grid_n, p0,
                                       [p0](double x) { return x + p0; });
    case InitPolicy::kConstant:
      return PolicyGrid::constant(capacity, config.grid_n, p0);
    case InitPolicy::kSqrt:
      return PolicyGrid::from_function(capacity, config.grid_n, p0,
                                       [p0](double x) { return p0 + std::sqrt(x); });
  }
  fail(ErrorCode::kUsage, "bad initial policy");
}

PolicyGrid el_ode_solve(PhiFunction& phi, const HarvestParams& params,
                        const SolverConfig& config) {
  config.validate();
  require_finite_capacity(params);
  const double lambda = params.lambda, zeta = params.zeta, K = config.K;
  const std::size_t n = config.grid_n;
  const double h = params.capacity / static_cast<double>(n);
  const double dx = h / static_cast<double>(config.ode_substeps);
  bool extended = false;
  double x = 0.0;

  // numerator N and denominator D = -phi'' of the slope, p' = N / (p D)
  auto slope_terms = [&](double p, double& N, double& D) {
    if (!phi.covers(p)) {
      if (extended)
        fail(ErrorCode::kOverflow, "policy value " + fmt(p) + " at x = " + fmt(x) +
                                       " exceeds the extended phi table");
      phi.extend(std::max(kExtendedRange, 2.0 * p));
      extended = true;
    }
    const PhiJet j = phi(p);
    D = -j.d2;
    require(D > 0.0, ErrorCode::kDomain,
            "phi'' is not negative at p = " + fmt(p) + " (rate must be strictly concave)");
    N = (lambda - zeta * p) * j.d1 + zeta * j.phi + K;
  };
  auto fy = [&](double y) {
    if (!(y > 0.0))
      fail(ErrorCode::kNonAdmissible,
           "policy reaches zero at x = " + fmt(x) + " (non-admissible trajectory)");
    double N, D;
    slope_terms(std::sqrt(y), N, D);
    return 2.0 * N / D;
  };
  auto fs = [&](double s) {
    if (s > kMaxLogPower)
      fail(ErrorCode::kOverflow, "policy overflows near x = " + fmt(x) +
                                     " (log p = " + fmt(s) + ")");
    const double p = std::exp(s);
    double N, D;
    slope_terms(p, N, D);
    return N / (p * p * D);
  };

  std::vector<double> values(n + 1, 0.0);
  double p = config.p0plus;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t sub = 0; sub < config.ode_substeps; ++sub) {
      if (p < 1.0) {
        const double y = p * p;
        const double k1 = fy(y);
        const double k2 = fy(y + 0.5 * dx * k1);
        const double k3 = fy(y + 0.5 * dx * k2);
        const double k4 = fy(y + dx * k3);
        const double y1 = y + dx / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        x += dx;
        if (!(y1 > 0.0))
          fail(ErrorCode::kNonAdmissible,
               "policy reaches zero at x = " + fmt(x) + " (non-admissible trajectory)");
        p = std::sqrt(y1);
      } else {
        const double s = std::log(p);
        const double k1 = fs(s);
        const double k2 = fs(s + 0.5 * dx * k1);
        const double k3 = fs(s + 0.5 * dx * k2);
        const double k4 = fs(s + dx * k3);
        const double s1 = s + dx / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
        x += dx;
        if (s1 > kMaxLogPower)
          fail(ErrorCode::kOverflow, "policy overflows near x = " + fmt(x));
        p = std::exp(s1);
      }
    }
    values[i + 1] = p;
  }
  return PolicyGrid(params.capacity, std::move(values), config.p0plus);
}

SystemState SolveReport::state(const RateFunction& rate) const {
  SystemState s{{}, rate};
  for (std::size_t k = 0; k < params.size(); ++k)
    s.nodes.push_back({params[k], policies[k], measures[k]});
  return s;
}

SolveReport solve_symmetric_mac(std::size_t m, const HarvestParams& params,
                                const RateFunction& rate, const SolverConfig& config) {
  config.validate();
  require_finite_capacity(params);
  require(m >= 1, ErrorCode::kUsage, "node count must be >= 1");
  require(m <= kDefaultMaxNodes, ErrorCode::kCapacity,
          "symmetric solver supports at most " + std::to_string(kDefaultMaxNodes) + " nodes");

  SolveReport rep;
  rep.params.assign(m, params);
  rep.upper_bound = upper_bound_finite(rep.params, rate);

  PolicyGrid policy = initial_policy(config, params.capacity);
  StationaryMeasure measure = measure_closed_form(policy, params);
  auto utility = [&](const PolicyGrid& p, const StationaryMeasure& f) {
    return utility_of(rep.params, std::vector<PolicyGrid>(m, p),
                      std::vector<StationaryMeasure>(m, f), rate);
  };
  double u = utility(policy, measure);
  rep.utility_trace.push_back(u);
  if (config.keep_iterates) rep.iterates.push_back(policy);
  rep.termination = "max_outer";

  for (std::size_t it = 1; it <= config.max_outer; ++it) {
    const PowerLaw law = power_law(policy, measure);
    std::vector<PowerLaw> laws(m - 1, law);
    PhiFunction phi(rate, convolve(laws));
    PolicyGrid next = el_ode_solve(phi, params, config);
    StationaryMeasure next_measure = measure_closed_form(next, params);
    const double u_next = utility(next, next_measure);
    rep.utility_trace.push_back(u_next);
    rep.history.push_back({it, 0, config.K, config.p0plus, u_next, true});
    if (config.keep_iterates) rep.iterates.push_back(next);
    rep.iterations = it;
    if (u_next < u - kDecreaseSlack) {
      const std::string msg = "utility decreased from " + fmt(u) + " to " + fmt(u_next) +
                              " at iteration " + std::to_string(it);
      if (config.strict_ascent) fail(ErrorCode::kDivergence, msg);
      rep.warnings.push_back(msg);
    }
    const double change = relative_change(u, u_next);
    policy = std::move(next);
    measure = std::move(next_measure);
    u = u_next;
    if (change < config.theta_tol) {
      rep.termination = "converged";
      break;
    }
  }
  if (!is_increasing(policy))
    rep.warnings.push_back("final policy is not increasing (K = " + fmt(config.K) + ")");
  rep.policies.assign(m, policy);
  rep.measures.assign(m, measure);
  rep.utility = u;
  return rep;
}

SolveReport solve_mac_gauss_seidel(std::span<const HarvestParams> nodes,
                                   const RateFunction& rate,
                                   std::span<const SolverConfig> configs) {
  const std::size_t m = nodes.size();
  require(m >= 1, ErrorCode::kUsage, "node count must be >= 1");
  require(m <= kDefaultMaxNodes, ErrorCode::kCapacity,
          "Gauss-Seidel solver supports at most " + std::to_string(kDefaultMaxNodes) + " nodes");
  require(configs.size() == 1 || configs.size() == m, ErrorCode::kUsage,
          "need one solver config or one per node");
  auto cfg = [&](std::size_t k) -> const SolverConfig& {
    return configs.size() == 1 ? configs[0] : configs[k];
  };
  for (std::size_t k = 0; k < m; ++k) {
    cfg(k).validate();
    require_finite_capacity(nodes[k]);
  }
  const SolverConfig& master = configs[0];

  SolveReport rep;
  rep.params.assign(nodes.begin(), nodes.end());
  rep.upper_bound = upper_bound_finite(rep.params, rate);
  for (std::size_t k = 0; k < m; ++k) {
    rep.policies.push_back(initial_policy(cfg(k), nodes[k].capacity));
    rep.measures.push_back(measure_closed_form(rep.policies[k], nodes[k]));
  }
  double u = utility_of(rep.params, rep.policies, rep.measures, rate);
  rep.utility_trace.push_back(u);
  rep.termination = "max_outer";

  for (std::size_t sweep = 1; sweep <= master.max_outer; ++sweep) {
    const double u_start = u;
    for (std::size_t j = 0; j < m; ++j) {
      const SolverConfig& c = cfg(j);
      std::vector<double> p0s = c.search && !c.search_p0plus.empty()
                                    ? c.search_p0plus
                                    : std::vector<double>{c.p0plus};
      std::vector<double> ks = c.search && !c.search_K.empty() ? c.search_K
                                                               : std::vector<double>{c.K};
      PhiFunction phi(rate, others_law(rep.policies, rep.measures, j));
      bool found = false;
      double best_u = -std::numeric_limits<double>::infinity();
      IterationRecord best_rec;
      PolicyGrid best_policy = rep.policies[j];
      StationaryMeasure best_measure = rep.measures[j];
      std::string last_error;
      for (double p0 : p0s) {
        for (double K : ks) {
          SolverConfig trial = c;
          trial.p0plus = p0;
          trial.K = K;
          try {
            PolicyGrid p = el_ode_solve(phi, nodes[j], trial);
            StationaryMeasure f = measure_closed_form(p, nodes[j]);
            auto policies = rep.policies;
            auto measures = rep.measures;
            policies[j] = p;
            measures[j] = f;
            const double cand = utility_of(rep.params, policies, measures, rate);
            if (cand > best_u) {
              best_u = cand;
              best_policy = std::move(p);
              best_measure = std::move(f);
              best_rec = {sweep, j, K, p0, cand, true};
              found = true;
            }
          } catch (const Error& e) {
            const std::string where = "sweep " + std::to_string(sweep) + ", node " +
                                      std::to_string(j) + ": " + e.what();
            if (!c.search) throw Error(e.code(), where);
            last_error = where;
          }
        }
      }
      if (!found)
        fail(ErrorCode::kNonAdmissible,
             "no admissible (p0plus, K) candidate; last failure: " + last_error);
      if (c.ascent_guard && best_u < u) {
        best_rec.accepted = false;
        rep.history.push_back(best_rec);
        continue;
      }
      if (best_u < u - kDecreaseSlack) {
        const std::string msg = "utility decreased from " + fmt(u) + " to " + fmt(best_u) +
                                " at sweep " + std::to_string(sweep) + ", node " +
                                std::to_string(j);
        if (c.strict_ascent) fail(ErrorCode::kDivergence, msg);
        rep.warnings.push_back(msg);
      }
      rep.history.push_back(best_rec);
      rep.policies[j] = std::move(best_policy);
      rep.measures[j] = std::move(best_measure);
      u = best_u;
    }
    rep.utility_trace.push_back(u);
    rep.iterations = sweep;
    if (relative_change(u_start, u) < master.theta_tol) {
      rep.termination = "converged";
      break;
    }
  }
  for (std::size_t k = 0; k < m; ++k)
    if (!is_increasing(rep.policies[k]))
      rep.warnings.push_back("final policy of node " + std::to_string(k) + " is not increasing");
  rep.utility = u;
  return rep;
}

ConstantPolicyStats constant_policy_stats(const HarvestParams& params, double rho) {
  params.validate();
  require(!params.finite(), ErrorCode::kUsage,
          "constant-policy statistics assume an infinite battery");
  require(rho > 0.0, ErrorCode::kDomain, "excess power rho must be positive");
  const double m = params.mean_energy_rate();
  return {rho / (m + rho), m, m * rho};
}

std::vector<double> euler_lagrange_residual(const SolveReport& report,
                                            const RateFunction& rate,
                                            std::size_t j, double K) {
  require(j < report.policies.size(), ErrorCode::kUsage, "node index out of range");
  const PolicyGrid& policy = report.policies[j];
  const HarvestParams& params = report.params[j];
  const PhiFunction phi(rate, others_law(report.policies, report.measures, j),
                        kExtendedRange);
  const std::size_t n = policy.intervals();
  const double h = policy.step();
  std::vector<double> y(n + 1), s(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double p = policy.node_power(i);
    y[i] = p * p;
    s[i] = std::log(p);
  }
  auto d5 = [h](const std::vector<double>& v, std::size_t i) {
    return (-v[i + 2] + 8.0 * v[i + 1] - 8.0 * v[i - 1] + v[i - 2]) / (12.0 * h);
  };
  std::vector<double> out(n + 1, 0.0);
  for (std::size_t i = 2; i + 2 <= n; ++i) {
    const double p = policy.node_power(i);
    const double ppd = p < 1.0 ? 0.5 * d5(y, i) : p * p * d5(s, i);
    const PhiJet jet = phi.exact(p);
    const double N = (params.lambda - params.zeta * p) * jet.d1 + params.zeta * jet.phi + K;
    out[i] = std::abs(N + ppd * jet.d2);
  }
  return out;
}

void write_report(std::ostream& out, const SolveReport& report) {
  out << std::setprecision(12);
  out << "# power policy solve report\n";
  out << "schema = 1\n";
  out << "nodes = " << report.policies.size() << "\n";
  out << "termination = " << report.termination << "\n";
  out << "iterations = " << report.iterations << "\n";
  out << "utility = " << report.utility << "\n";
  out << "upper_bound = " << report.upper_bound << "\n";
  for (const auto& w : report.warnings) out << "warning = " << w << "\n";
  out << "\n[trace]\n# iteration utility\n";
  for (std::size_t i = 0; i < report.utility_trace.size(); ++i)
    out << i << ' ' << report.utility_trace[i] << "\n";
  out << "\n[history]\n# sweep node K p0plus utility accepted\n";
  for (const auto& r : report.history)
    out << r.sweep << ' ' << r.node << ' ' << r.K << ' ' << r.p0plus << ' ' << r.utility
        << ' ' << (r.accepted ? 1 : 0) << "\n";
  for (std::size_t k = 0; k < report.policies.size(); ++k) {
    const auto& p = report.policies[k];
    const auto& f = report.measures[k];
    const auto& hp = report.params[k];
    out << "\n[node " << k << "]\n";
    out << "lambda = " << hp.lambda << "\nzeta = " << hp.zeta << "\ncapacity = " << hp.capacity
        << "\np0plus = " << p.p0plus() << "\natom = " << f.atom << "\n";
    out << "# x p f\n";
    for (std::size_t i = 0; i < p.size(); ++i)
      out << p.x(i) << ' ' << p.value(i) << ' ' << f.density[i] << "\n";
  }
}

}  // namespace damopt
