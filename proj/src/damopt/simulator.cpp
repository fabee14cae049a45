#include "damopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <thread>

#include "damopt/error.hpp"

namespace damopt {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 5-point Gauss-Legendre on [0, 1]
constexpr double kGaussX[5] = {0.04691007703066800, 0.23076534494715845, 0.5,
                               0.76923465505284155, 0.95308992296933200};
constexpr double kGaussW[5] = {0.11846344252809454, 0.23931433524968324, 0.28444444444444444,
                               0.23931433524968324, 0.11846344252809454};

constexpr double kGauss2X[2] = {0.21132486540518712, 0.78867513459481288};

// int r dt while p moves linearly from pa to pb over time t
double rate_over_linear_power(const RateFunction& rf, double pa, double pb, double t) {
  double acc = 0.0;
  for (int g = 0; g < 5; ++g) acc += kGaussW[g] * rf.value_unchecked(pa + (pb - pa) * kGaussX[g]);
  return acc * t;
}

// int_0^x r(p(v)) / p(v) dv: the rate integral along a single-node drain.
class RateIntegral {
 public:
  RateIntegral(const PolicyGrid& policy, const RateFunction& rf) : policy_(policy), rf_(rf) {
    const std::size_t n = policy.intervals();
    c_.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      c_[i + 1] = c_[i] + rate_over_linear_power(rf, policy.node_power(i), policy.node_power(i + 1),
                                                 policy.cell_drain_time(i));
  }
  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    const std::size_t n = policy_.intervals();
    const double h = policy_.step();
    if (x >= policy_.extent()) {
      const double p = policy_.last_value();
      return c_[n] + rf_.value_unchecked(p) / p * (x - policy_.extent());
    }
    const std::size_t c = std::min(static_cast<std::size_t>(x / h), n - 1);
    const double pc = policy_.node_power(c), px = policy_(x);
    const double d = x - policy_.x(c);
    return c_[c] + rate_over_linear_power(rf_, pc, px, 2.0 * d / (pc + px));
  }

 private:
  const PolicyGrid& policy_;
  const RateFunction& rf_;
  std::vector<double> c_;
};

struct NodeAccum {
  double zero_time = 0.0;
  double energy = 0.0;     // int p dt
  double energy_sq = 0.0;  // int p^2 dt
  double overflow = 0.0;
  std::vector<double> a, b, c;  // difference arrays for the empirical CDF
  std::vector<std::uint64_t> down, up;
};

struct RepResult {
  double time = 0.0;
  double throughput = 0.0;
  std::vector<NodeAccum> nodes;
  std::vector<SimEvent> events;
};

struct NodeRuntime {
  const SimNode* spec;
  DepletionMap map;
  double capacity;
};

class Replication {
 public:
  Replication(const std::vector<NodeRuntime>& nodes, const RateFunction& rf,
              const std::vector<RateIntegral>& single, const SimConfig& cfg, std::size_t rep)
      : nodes_(nodes), rf_(rf), single_(single), cfg_(cfg), rep_(rep) {
    const std::size_t m = nodes.size();
    res_.nodes.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
      auto& a = res_.nodes[k];
      a.a.assign(cfg.cdf_points + 2, 0.0);
      a.b.assign(cfg.cdf_points + 2, 0.0);
      a.c.assign(cfg.cdf_points + 2, 0.0);
      a.down.assign(cfg.level_probes.size(), 0);
      a.up.assign(cfg.level_probes.size(), 0);
      dl_.push_back(cdf_max(k) / static_cast<double>(cfg.cdf_points));
    }
  }

  RepResult run() {
    const std::size_t m = nodes_.size();
    std::vector<ArrivalStream> streams;
    std::vector<Arrival> next;
    level_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      streams.emplace_back(nodes_[k].spec->params, nodes_[k].spec->packets, cfg_.seed, k, rep_);
      next.push_back(streams.back().next());
      level_[k] = std::min(cfg_.initial_level, nodes_[k].capacity);
    }
    double t = 0.0;
    while (t < cfg_.horizon) {
      std::size_t who = 0;
      for (std::size_t k = 1; k < m; ++k)
        if (next[k].time < next[who].time) who = k;
      const double t_next = std::min(next[who].time, cfg_.horizon);
      if (t < cfg_.burn_in && t_next > cfg_.burn_in) {
        advance(t, cfg_.burn_in, false);
        advance(cfg_.burn_in, t_next, true);
      } else {
        advance(t, t_next, t >= cfg_.burn_in);
      }
      t = t_next;
      if (next[who].time <= cfg_.horizon) {
        jump(who, next[who].energy, t, t >= cfg_.burn_in);
        next[who] = streams[who].next();
      }
    }
    res_.time = cfg_.horizon - cfg_.burn_in;
    return std::move(res_);
  }

 private:
  double cdf_max(std::size_t k) const {
    return cfg_.cdf_max > 0.0 ? cfg_.cdf_max : nodes_[k].map.policy().extent();
  }

  void log(double t, std::size_t k, const char* kind, double level) {
    if (!cfg_.event_log || rep_ != 0 || res_.events.size() >= cfg_.event_log_limit) return;
    res_.events.push_back({t, k, kind, level});
  }

  void jump(std::size_t k, double energy, double t, bool acc) {
    const double before = level_[k];
    const double after = std::min(before + energy, nodes_[k].capacity);
    level_[k] = after;
    if (!acc) return;
    auto& a = res_.nodes[k];
    a.overflow += before + energy - after;
    for (std::size_t i = 0; i < cfg_.level_probes.size(); ++i) {
      const double l = cfg_.level_probes[i];
      if (before <= l && l < after) ++a.up[i];
    }
    log(t, k, "arrival", after);
  }

  // Drain every node over [t0, t1] with no arrivals inside.
  void advance(double t0, double t1, bool acc) {
    const double dt = t1 - t0;
    if (dt <= 0.0) return;
    const std::size_t m = nodes_.size();
    start_.assign(level_.begin(), level_.end());
    empty_at_.assign(m, kInf);
    for (std::size_t k = 0; k < m; ++k) {
      const DepletionMap& map = nodes_[k].map;
      const double xa = level_[k];
      if (xa <= 0.0) {
        level_[k] = 0.0;
        continue;
      }
      const double ta = map.tau(xa);
      if (ta <= dt) {
        level_[k] = 0.0;
        empty_at_[k] = ta;
        if (acc) log(t0 + ta, k, "empty", 0.0);
      } else {
        level_[k] = map.level_after(xa, dt);
      }
    }
    if (!acc) return;

    for (std::size_t k = 0; k < m; ++k) {
      const DepletionMap& map = nodes_[k].map;
      auto& a = res_.nodes[k];
      const double xa = start_[k], xb = level_[k];
      const double drain_time = xa > 0.0 ? std::min(dt, empty_at_[k]) : 0.0;
      a.zero_time += dt - drain_time;
      if (xa <= 0.0) continue;
      a.energy += xa - xb;
      a.energy_sq += map.power_integral(xa) - map.power_integral(xb);
      for (std::size_t i = 0; i < cfg_.level_probes.size(); ++i) {
        const double l = cfg_.level_probes[i];
        if (xa > l && l >= xb) ++a.down[i];
      }
      record_cdf(k, xa, xb, drain_time);
    }

    if (m == 1) {
      if (start_[0] > 0.0) res_.throughput += single_[0](start_[0]) - single_[0](level_[0]);
      return;
    }
    // Several nodes: split at every cell crossing of every node. On each
    // piece all powers are linear in time, so Gauss-Legendre is exact up to
    // the curvature of r.
    integrate_pieces(dt);
  }

  void integrate_pieces(double dt) {
    const std::size_t m = nodes_.size();
    const double horizon_end = dt;
    cell_.assign(m, -1);
    total_tau_.assign(m, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      if (start_[k] <= 0.0) continue;
      total_tau_[k] = nodes_[k].map.tau(start_[k]);
      cell_[k] = nodes_[k].map.cell_of_time(total_tau_[k]);
    }
    double s = 0.0;
    while (s < horizon_end) {
      double s_next = horizon_end;
      for (std::size_t k = 0; k < m; ++k) {
        if (cell_[k] < 0) continue;
        const double b = total_tau_[k] - nodes_[k].map.node_time(static_cast<std::size_t>(cell_[k]));
        s_next = std::min(s_next, std::max(b, s));
      }
      if (s_next > s) {
        double acc = 0.0;
        for (int g = 0; g < 2; ++g) {
          const double t = s + (s_next - s) * kGauss2X[g];
          double total = 0.0;
          for (std::size_t k = 0; k < m; ++k)
            if (cell_[k] >= 0)
              total += nodes_[k].map.power_at_time(total_tau_[k] - t,
                                                   static_cast<std::size_t>(cell_[k]));
          acc += 0.5 * rf_.value_unchecked(total);
        }
        res_.throughput += acc * (s_next - s);
      }
      s = s_next;
      if (s >= horizon_end) break;
      for (std::size_t k = 0; k < m; ++k) {
        if (cell_[k] < 0) continue;
        const double b = total_tau_[k] - nodes_[k].map.node_time(static_cast<std::size_t>(cell_[k]));
        if (b <= s) --cell_[k];  // cell 0 exhausted means the node is empty
      }
    }
  }

  void record_cdf(std::size_t k, double xa, double xb, double drain_time) {
    auto& a = res_.nodes[k];
    const DepletionMap& map = nodes_[k].map;
    const double dl = dl_[k];
    const auto g = static_cast<std::ptrdiff_t>(cfg_.cdf_points);
    // levels strictly between xb and xa
    std::ptrdiff_t lo = static_cast<std::ptrdiff_t>(std::floor(xb / dl)) + 1;
    std::ptrdiff_t hi = static_cast<std::ptrdiff_t>(std::ceil(xa / dl)) - 1;
    hi = std::min(hi, g);
    if (lo <= hi) {
      a.a[lo] += 1.0;
      a.a[hi + 1] -= 1.0;
      const double tb = xb > 0.0 ? map.tau(xb) : 0.0;
      a.b[lo] -= tb;
      a.b[hi + 1] += tb;
    }
    // levels at or above xa see the whole drain
    const std::ptrdiff_t from = static_cast<std::ptrdiff_t>(std::ceil(xa / dl));
    if (from <= g) a.c[from] += drain_time;
  }

  const std::vector<NodeRuntime>& nodes_;
  const RateFunction& rf_;
  const std::vector<RateIntegral>& single_;
  const SimConfig& cfg_;
  std::size_t rep_;
  RepResult res_;
  std::vector<double> level_, start_, empty_at_, dl_, total_tau_;
  std::vector<std::ptrdiff_t> cell_;
};

Estimate estimate(const std::vector<double>& v) {
  Estimate e;
  for (double x : v) e.mean += x;
  e.mean /= static_cast<double>(v.size());
  if (v.size() < 2) {
    e.se = kInf;
    return e;
  }
  double ss = 0.0;
  for (double x : v) ss += (x - e.mean) * (x - e.mean);
  e.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return e;
}

double interp_cdf(const StationaryMeasure& measure, const std::vector<double>& cdf, double x) {
  if (x <= 0.0) return measure.atom;
  const double h = measure.step;
  const std::size_t n = cdf.size() - 1;
  if (x >= h * static_cast<double>(n)) return cdf.back();
  const auto c = std::min(static_cast<std::size_t>(x / h), n - 1);
  const double t = x / h - static_cast<double>(c);
  return (1.0 - t) * cdf[c] + t * cdf[c + 1];
}

}  // namespace

DepletionMap::DepletionMap(const PolicyGrid& policy) : policy_(policy) {
  const std::size_t n = policy.intervals();
  t_.assign(n + 1, 0.0);
  e_.assign(n + 1, 0.0);
  half_slope_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = policy.node_power(i), b = policy.node_power(i + 1);
    // dp/dt is constant on a cell: (p_{i+1}^2 - p_i^2) / (2h)
    half_slope_[i] = 0.5 * (b * b - a * a) / policy.step();
    t_[i + 1] = t_[i] + policy.cell_drain_time(i);
    e_[i + 1] = e_[i] + 2.0 / 3.0 * policy.step() * (a * a + a * b + b * b) / (a + b);
  }
}

double DepletionMap::tau(double x) const {
  if (x <= 0.0) return 0.0;
  const std::size_t n = policy_.intervals();
  if (x >= policy_.extent()) return t_[n] + (x - policy_.extent()) / policy_.last_value();
  const double h = policy_.step();
  const std::size_t c = std::min(static_cast<std::size_t>(x / h), n - 1);
  const double d = x - policy_.x(c);
  return t_[c] + 2.0 * d / (policy_.node_power(c) + policy_(x));
}

double DepletionMap::level_after(double x, double dt) const {
  const double target = tau(x) - dt;
  if (target <= 0.0) return 0.0;
  const std::size_t n = policy_.intervals();
  if (target >= t_[n]) return policy_.extent() + (target - t_[n]) * policy_.last_value();
  const auto it = std::upper_bound(t_.begin(), t_.end(), target);
  const auto c = static_cast<std::size_t>(it - t_.begin()) - 1;
  const double pc = policy_.node_power(c), pn = policy_.node_power(c + 1);
  const double h = policy_.step();
  const double slope = (pn * pn - pc * pc) / h;
  const double s = target - t_[c];
  const double d = s * pc + 0.25 * slope * s * s;
  return policy_.x(c) + std::clamp(d, 0.0, h);
}

std::ptrdiff_t DepletionMap::cell_of_time(double remaining) const {
  const std::size_t n = policy_.intervals();
  if (remaining <= 0.0) return -1;
  if (remaining >= t_[n]) return static_cast<std::ptrdiff_t>(n);
  const auto it = std::upper_bound(t_.begin(), t_.end(), remaining);
  return static_cast<std::ptrdiff_t>(it - t_.begin()) - 1;
}

double DepletionMap::power_at_time(double remaining, std::size_t cell) const {
  if (cell >= policy_.intervals()) return policy_.last_value();
  const double s = std::clamp(remaining - t_[cell], 0.0, t_[cell + 1] - t_[cell]);
  return policy_.node_power(cell) + half_slope_[cell] * s;
}

double DepletionMap::power_integral(double x) const {
  if (x <= 0.0) return 0.0;
  const std::size_t n = policy_.intervals();
  if (x >= policy_.extent()) return e_[n] + (x - policy_.extent()) * policy_.last_value();
  const double h = policy_.step();
  const std::size_t c = std::min(static_cast<std::size_t>(x / h), n - 1);
  const double a = policy_.node_power(c), b = policy_(x);
  const double d = x - policy_.x(c);
  return e_[c] + 2.0 / 3.0 * d * (a * a + a * b + b * b) / (a + b);
}

void SimConfig::validate() const {
  require(std::isfinite(horizon) && horizon > 0.0, ErrorCode::kDomain, "horizon must be > 0");
  require(burn_in >= 0.0 && horizon > burn_in, ErrorCode::kDomain,
          "horizon must exceed the burn-in period");
  require(replications >= 1, ErrorCode::kDomain, "need at least one replication");
  require(cdf_points >= 1, ErrorCode::kDomain, "cdf_points must be >= 1");
  require(initial_level >= 0.0, ErrorCode::kDomain, "initial level must be >= 0");
  for (double l : level_probes)
    require(l > 0.0, ErrorCode::kDomain, "probe levels must be > 0");
}

TrajectoryStats simulate(const std::vector<SimNode>& nodes, const RateFunction& rate,
                         const SimConfig& config) {
  config.validate();
  require(!nodes.empty(), ErrorCode::kUsage, "no nodes to simulate");
  std::vector<NodeRuntime> rt;
  std::vector<RateIntegral> single;
  for (const auto& n : nodes) {
    n.params.validate();
    if (n.params.finite())
      require(std::abs(n.policy.extent() - n.params.capacity) <= 1e-9 * std::max(1.0, n.params.capacity),
              ErrorCode::kUsage, "policy grid extent does not match battery capacity");
    rt.push_back({&n, DepletionMap(n.policy), n.params.capacity});
  }
  if (nodes.size() == 1) single.emplace_back(rt[0].map.policy(), rate);

  const std::size_t reps = config.replications;
  std::vector<RepResult> results(reps);
  auto run_one = [&](std::size_t r) {
    results[r] = Replication(rt, rate, single, config, r).run();
  };
  const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, reps));
  if (workers == 1) {
    for (std::size_t r = 0; r < reps; ++r) run_one(r);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = w; r < reps; r += workers) run_one(r);
      });
    for (auto& t : pool) t.join();
  }

  TrajectoryStats out;
  out.horizon = config.horizon;
  out.burn_in = config.burn_in;
  out.replications = reps;
  out.probes = config.level_probes;
  out.events = std::move(results[0].events);
  std::vector<double> tp;
  for (const auto& r : results) tp.push_back(r.throughput / r.time);
  out.throughput = estimate(tp);

  const std::size_t g = config.cdf_points;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    NodeStats ns;
    std::vector<double> atom, mean, var, over;
    const double cmax = config.cdf_max > 0.0 ? config.cdf_max : nodes[k].policy.extent();
    const double dl = cmax / static_cast<double>(g);
    ns.cdf_levels.resize(g + 1);
    ns.cdf.assign(g + 1, 0.0);
    for (std::size_t i = 0; i <= g; ++i) ns.cdf_levels[i] = dl * static_cast<double>(i);
    double pooled_time = 0.0, pooled_zero = 0.0;
    const std::size_t np = config.level_probes.size();
    ns.down_count.assign(np, 0);
    ns.up_count.assign(np, 0);
    std::vector<std::vector<double>> down(np), up(np);
    for (const auto& r : results) {
      const NodeAccum& a = r.nodes[k];
      const double T = r.time;
      atom.push_back(a.zero_time / T);
      const double m1 = a.energy / T, m2 = a.energy_sq / T;
      mean.push_back(m1);
      var.push_back(m2 - m1 * m1);
      over.push_back(a.overflow / T);
      pooled_time += T;
      pooled_zero += a.zero_time;
      double ca = 0.0, cb = 0.0, cc = 0.0;
      for (std::size_t i = 0; i <= g; ++i) {
        ca += a.a[i];
        cb += a.b[i];
        cc += a.c[i];
        const double below = a.zero_time + ca * rt[k].map.tau(ns.cdf_levels[i]) + cb + cc;
        ns.cdf[i] += below;
      }
      for (std::size_t i = 0; i < np; ++i) {
        ns.down_count[i] += a.down[i];
        ns.up_count[i] += a.up[i];
        down[i].push_back(static_cast<double>(a.down[i]) / T);
        up[i].push_back(static_cast<double>(a.up[i]) / T);
      }
    }
    for (double& c : ns.cdf) c /= pooled_time;
    ns.atom = estimate(atom);
    ns.mean_power = estimate(mean);
    ns.power_variance = estimate(var);
    ns.overflow_rate = estimate(over);
    ns.time_positive = 1.0 - pooled_zero / pooled_time;
    for (std::size_t i = 0; i < np; ++i) {
      ns.down_rate.push_back(estimate(down[i]));
      ns.up_rate.push_back(estimate(up[i]));
    }
    out.nodes.push_back(std::move(ns));
  }
  return out;
}

std::vector<CrossingCheck> crossing_balance(const TrajectoryStats& stats,
                                            const StationaryMeasure& measure,
                                            const PolicyGrid& policy,
                                            const HarvestParams& params,
                                            const PacketDistribution& dist,
                                            std::size_t node) {
  require(node < stats.nodes.size(), ErrorCode::kUsage, "node index out of range");
  const NodeStats& ns = stats.nodes[node];
  std::vector<CrossingCheck> out;
  for (std::size_t i = 0; i < stats.probes.size(); ++i) {
    const double l = stats.probes[i];
    const double top = params.finite() ? params.capacity : policy.extent();
    require(l > 0.0 && l < top, ErrorCode::kDomain,
            "probe level " + std::to_string(l) + " outside (0, L)");
    CrossingCheck c;
    c.level = l;
    c.empirical_down = ns.down_rate[i];
    c.empirical_up = ns.up_rate[i];
    c.analytic_down = downcrossing_rate(measure, policy, l);
    c.analytic_up = upcrossing_rate(measure, policy, params, dist, l);
    c.z_down = (c.empirical_down.mean - c.analytic_down) / c.empirical_down.se;
    c.z_up = (c.empirical_up.mean - c.analytic_up) / c.empirical_up.se;
    c.within_3se = std::abs(c.z_down) <= 3.0 && std::abs(c.z_up) <= 3.0;
    out.push_back(c);
  }
  return out;
}

double ks_distance(const NodeStats& stats, const StationaryMeasure& measure,
                   const PolicyGrid& policy) {
  const std::vector<double> cdf = measure.cdf();
  double d = 0.0;
  for (std::size_t i = 0; i < stats.cdf_levels.size(); ++i) {
    const double x = stats.cdf_levels[i];
    if (x > policy.extent()) break;
    d = std::max(d, std::abs(stats.cdf[i] - interp_cdf(measure, cdf, x)));
  }
  return d;
}

void write_stats(std::ostream& out, const TrajectoryStats& s) {
  out << std::setprecision(10);
  out << "# simulation statistics\nschema = 1\n";
  out << "horizon = " << s.horizon << "\nburn_in = " << s.burn_in
      << "\nreplications = " << s.replications << "\n";
  out << "throughput = " << s.throughput.mean << "\nthroughput_se = " << s.throughput.se << "\n";
  for (std::size_t k = 0; k < s.nodes.size(); ++k) {
    const NodeStats& n = s.nodes[k];
    out << "\n[node " << k << "]\n";
    out << "atom = " << n.atom.mean << "\natom_se = " << n.atom.se << "\n";
    out << "mean_power = " << n.mean_power.mean << "\nmean_power_se = " << n.mean_power.se << "\n";
    out << "power_variance = " << n.power_variance.mean
        << "\npower_variance_se = " << n.power_variance.se << "\n";
    out << "overflow_rate = " << n.overflow_rate.mean << "\n";
    out << "time_positive = " << n.time_positive << "\n";
    out << "# probe down_rate down_se up_rate up_se down_count up_count\n";
    for (std::size_t i = 0; i < s.probes.size(); ++i)
      out << "probe " << s.probes[i] << ' ' << n.down_rate[i].mean << ' ' << n.down_rate[i].se
          << ' ' << n.up_rate[i].mean << ' ' << n.up_rate[i].se << ' ' << n.down_count[i]
          << ' ' << n.up_count[i] << "\n";
    out << "# level cdf\n";
    for (std::size_t i = 0; i < n.cdf.size(); ++i)
      out << "cdf " << n.cdf_levels[i] << ' ' << n.cdf[i] << "\n";
  }
  if (!s.events.empty()) {
    out << "\n[events]\n# time node kind level\n";
    for (const auto& e : s.events)
      out << e.time << ' ' << e.node << ' ' << e.kind << ' ' << e.level << "\n";
  }
}

void write_crossings(std::ostream& out, const std::vector<CrossingCheck>& checks) {
  out << std::setprecision(8);
  out << "# level down_emp down_se down_analytic z_down up_emp up_se up_analytic z_up ok\n";
  for (const auto& c : checks)
    out << c.level << ' ' << c.empirical_down.mean << ' ' << c.empirical_down.se << ' '
        << c.analytic_down << ' ' << c.z_down << ' ' << c.empirical_up.mean << ' '
        << c.empirical_up.se << ' ' << c.analytic_up << ' ' << c.z_up << ' '
        << (c.within_3se ? 1 : 0) << "\n";
}

}  // namespace damopt
