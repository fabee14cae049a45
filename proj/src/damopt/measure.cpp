#include "damopt/measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iomanip>
#include <string>

#include "damopt/error.hpp"

namespace damopt {
namespace {

// Cumulant increments ds_c = lambda * int_cell dv / p.
std::vector<double> cumulant_steps(const PolicyGrid& policy, double lambda) {
  std::vector<double> ds(policy.intervals());
  for (std::size_t c = 0; c < ds.size(); ++c)
    ds[c] = lambda * policy.cell_drain_time(c);
  return ds;
}

void check_capacity(const PolicyGrid& policy, const HarvestParams& params) {
  params.validate();
  if (params.finite()) {
    require(std::abs(params.capacity - policy.extent()) <=
                1e-9 * std::max(1.0, params.capacity),
            ErrorCode::kUsage,
            "policy grid extent " + std::to_string(policy.extent()) +
                " does not match battery capacity " +
                std::to_string(params.capacity));
  }
}

// Fills weights, cell masses, density and flux from node values w_i of the
// bounded s-density (unnormalized), then normalizes with the atom.
// split[c] = {left, right} node shares of cell c; trapezoid when empty.
StationaryMeasure assemble(const PolicyGrid& policy, double lambda,
                           const std::vector<double>& ds,
                           const std::vector<double>& w, double atom,
                           double tail,
                           const std::vector<std::array<double, 2>>& split = {}) {
  const std::size_t n = policy.intervals();
  StationaryMeasure m;
  m.step = policy.step();
  m.weights.assign(n + 1, 0.0);
  m.cell_mass.assign(n, 0.0);
  double total = atom + tail;
  for (std::size_t c = 0; c < n; ++c) {
    const double a = split.empty() ? 0.5 * ds[c] * w[c] : split[c][0];
    const double b = split.empty() ? 0.5 * ds[c] * w[c + 1] : split[c][1];
    m.weights[c] += a;
    m.weights[c + 1] += b;
    m.cell_mass[c] = a + b;
    total += a + b;
  }
  m.atom = atom / total;
  m.tail_mass = tail / total;
  for (auto& v : m.weights) v /= total;
  for (auto& v : m.cell_mass) v /= total;
  m.flux.resize(n + 1);
  m.density.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    m.flux[i] = lambda * w[i] / total;
    m.density[i] = m.flux[i] / policy.node_power(i);
  }
  return m;
}

}  // namespace

double StationaryMeasure::total_mass() const {
  double t = atom + tail_mass;
  for (double c : cell_mass) t += c;
  return t;
}

std::vector<double> StationaryMeasure::cdf() const {
  std::vector<double> out(cell_mass.size() + 1);
  out[0] = atom;
  for (std::size_t c = 0; c < cell_mass.size(); ++c) out[c + 1] = out[c] + cell_mass[c];
  return out;
}

void StationaryMeasure::require_normalized(double tol) const {
  const double t = total_mass();
  require(std::abs(t - 1.0) <= tol, ErrorCode::kDomain,
          "measure is not normalized (total mass " + std::to_string(t) + ")");
}

StationaryMeasure measure_closed_form(const PolicyGrid& policy,
                                      const HarvestParams& params) {
  check_capacity(policy, params);
  const std::size_t n = policy.intervals();
  const double lambda = params.lambda, zeta = params.zeta;
  const auto ds = cumulant_steps(policy, lambda);

  // log of the s-density e^{s(x) - zeta x}, relative to the atom.
  std::vector<double> a(n + 1);
  a[0] = 0.0;
  double s = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    s += ds[i - 1];
    a[i] = s - zeta * policy.x(i);
  }
  std::size_t peak = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (a[i] > a[peak]) peak = i;
  const double shift = std::max(0.0, a[peak]);

  double tail = 0.0;
  if (!params.finite() && lambda > 0.0) {
    const double decay = zeta - lambda / policy.last_value();
    require(decay > 0.0, ErrorCode::kDomain,
            "policy tail p = " + std::to_string(policy.last_value()) +
                " is not positive recurrent (needs p > lambda/zeta)");
    tail = std::exp(a[n] - shift) * (lambda / policy.last_value()) / decay;
  }

  std::vector<double> w(n + 1);
  for (std::size_t i = 0; i <= n; ++i) w[i] = std::exp(a[i] - shift);
  const double atom = std::exp(-shift);

  // Exact cell masses. With t in [0, 1] across cell c, s = s_c + t ds_c and p
  // is linear in t, so x - x_c = h t (2 p_c + t dp) / (p_c + p_{c+1}).
  static constexpr double kNode[5] = {0.04691007703066800, 0.23076534494715845, 0.5,
                                      0.76923465505284155, 0.95308992296933200};
  static constexpr double kWeight[5] = {0.11846344252809454, 0.23931433524968324,
                                        0.28444444444444444, 0.23931433524968324,
                                        0.11846344252809454};
  const double h = policy.step();
  std::vector<std::array<double, 2>> split(n);
  for (std::size_t c = 0; c < n; ++c) {
    const double pc = policy.node_power(c), pn = policy.node_power(c + 1);
    const double dp = pn - pc, sum = pc + pn;
    double left = 0.0, right = 0.0;
    for (int g = 0; g < 5; ++g) {
      const double t = kNode[g];
      const double dx = h * t * (2.0 * pc + t * dp) / sum;
      const double e = kWeight[g] * std::exp(a[c] - shift + t * ds[c] - zeta * dx);
      left += (1.0 - t) * e;
      right += t * e;
    }
    split[c] = {ds[c] * left, ds[c] * right};
  }
  StationaryMeasure m = assemble(policy, lambda, ds, w, atom, tail, split);
  if (!(m.atom > 0.0) || !std::isfinite(m.atom)) {
    fail(ErrorCode::kOverflow,
         "stationary measure overflow: exp(int lambda/p - zeta x) peaks at x = " +
             std::to_string(policy.x(peak)) + " (log-excess " +
             std::to_string(a[peak]) + ")");
  }
  return m;
}

StationaryMeasure measure_volterra(const PolicyGrid& policy,
                                   const HarvestParams& params,
                                   const PacketDistribution& dist) {
  check_capacity(policy, params);
  require(params.finite(), ErrorCode::kUsage,
          "Volterra marching needs a finite battery capacity");
  const std::size_t n = policy.intervals();
  const double lambda = params.lambda;
  const auto ds = cumulant_steps(policy, lambda);
  const double h = policy.step();

  std::vector<double> surv(n + 1);
  for (std::size_t k = 0; k <= n; ++k) surv[k] = dist.survival(h * static_cast<double>(k));

  // Cells with a long s-step (small p, near the empty battery) dominate the
  // trapezoid error, which is about ds^3 per cell. They are split into equal
  // s-pieces; p is linear in s inside a cell, so the sub-nodes lie exactly on
  // the square-linear interpolant. At most n extra nodes are added.
  double ds_max = 1e-3;
  std::vector<std::size_t> pieces(n);
  while (true) {
    std::size_t extra = 0;
    for (std::size_t c = 0; c < n; ++c) {
      pieces[c] = static_cast<std::size_t>(std::max(1.0, std::ceil(ds[c] / ds_max)));
      extra += pieces[c] - 1;
    }
    if (extra <= n) break;
    ds_max *= 2.0;
  }
  std::vector<double> X{0.0}, DS, T{0.0};
  std::vector<std::ptrdiff_t> orig{0};  // grid index, or -1 for a sub-node
  for (std::size_t c = 0; c < n; ++c) {
    const double pc = policy.node_power(c), pn = policy.node_power(c + 1);
    const double m = static_cast<double>(pieces[c]);
    for (std::size_t k = 1; k <= pieces[c]; ++k) {
      const double t = static_cast<double>(k) / m;
      const bool last = k == pieces[c];
      X.push_back(last ? policy.x(c + 1)
                       : policy.x(c) + h * t * (2.0 * pc + t * (pn - pc)) / (pc + pn));
      DS.push_back(ds[c] / m);
      T.push_back(t);
      orig.push_back(last ? static_cast<std::ptrdiff_t>(c + 1) : -1);
    }
  }
  const std::size_t N = X.size() - 1;
  auto kernel = [&](std::size_t i, std::size_t j) {
    if (orig[i] >= 0 && orig[j] >= 0) return surv[static_cast<std::size_t>(orig[i] - orig[j])];
    return dist.survival(std::max(0.0, X[i] - X[j]));
  };

  // Trapezoid node weights in s.
  std::vector<double> q(N + 1, 0.0);
  for (std::size_t c = 0; c < N; ++c) {
    q[c] += 0.5 * DS[c];
    q[c + 1] += 0.5 * DS[c];
  }

  // Marching on w = f p / lambda with trial atom 1; rescaled on the fly.
  std::vector<double> W(N + 1, 0.0);
  double atom = 1.0;
  W[0] = surv[0];
  for (std::size_t i = 1; i <= N; ++i) {
    const double diag = 1.0 - 0.5 * DS[i - 1] * surv[0];
    require(diag > 0.0, ErrorCode::kDomain,
            "grid too coarse for Volterra marching near x = " +
                std::to_string(X[i]) + " (refine the grid)");
    // every piece touching node j < i lies below node i, so q[j] is complete
    double acc = atom * kernel(i, 0);
    for (std::size_t j = 0; j < i; ++j) acc += q[j] * kernel(i, j) * W[j];
    W[i] = acc / diag;
    if (W[i] > 1e250) {
      for (std::size_t j = 0; j <= i; ++j) W[j] *= 1e-250;
      atom *= 1e-250;
    }
  }

  // Node values and hat-function shares of each grid cell.
  std::vector<double> w(n + 1, 0.0);
  std::vector<std::array<double, 2>> split(n, {0.0, 0.0});
  std::size_t cell = 0;
  for (std::size_t k = 0; k <= N; ++k)
    if (orig[k] >= 0) w[static_cast<std::size_t>(orig[k])] = W[k];
  for (std::size_t k = 0; k < N; ++k) {
    const double t0 = orig[k] >= 0 ? 0.0 : T[k], t1 = T[k + 1];
    const double a = 0.5 * DS[k] * W[k], b = 0.5 * DS[k] * W[k + 1];
    split[cell][0] += a * (1.0 - t0) + b * (1.0 - t1);
    split[cell][1] += a * t0 + b * t1;
    if (orig[k + 1] >= 0) ++cell;
  }
  StationaryMeasure m = assemble(policy, lambda, ds, w, atom, 0.0, split);
  require(m.atom > 0.0 && std::isfinite(m.atom), ErrorCode::kOverflow,
          "Volterra marching underflowed the atom");
  return m;
}

double mean_power(const StationaryMeasure& measure, const PolicyGrid& policy) {
  measure.require_normalized();
  require(measure.weights.size() == policy.size(), ErrorCode::kUsage,
          "measure and policy grids differ");
  double e = measure.tail_mass * policy.last_value();
  for (std::size_t i = 0; i < measure.weights.size(); ++i)
    e += measure.weights[i] * policy.node_power(i);
  return e;
}

std::vector<double> level_crossing_residual(const StationaryMeasure& measure,
                                            const PolicyGrid& policy,
                                            const HarvestParams& params,
                                            const PacketDistribution& dist) {
  const std::size_t n = policy.intervals();
  const double lambda = params.lambda;
  const double h = policy.step();
  std::vector<double> surv(n + 1);
  for (std::size_t k = 0; k <= n; ++k) surv[k] = dist.survival(h * static_cast<double>(k));
  // Cell masses split onto their end nodes as in the quadrature.
  std::vector<double> out(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    double integral = 0.0;
    for (std::size_t c = 0; c < i; ++c) {
      const double wl = measure.flux[c], wr = measure.flux[c + 1];
      const double tot = wl + wr;
      if (tot <= 0.0) continue;
      integral += measure.cell_mass[c] *
                  (wl * surv[i - c] + wr * surv[i - c - 1]) / tot;
    }
    const double up = lambda * (measure.atom * surv[i] + integral);
    out[i] = std::abs(measure.flux[i] - up);
  }
  return out;
}

double downcrossing_rate(const StationaryMeasure& measure,
                         const PolicyGrid& policy, double level) {
  require(level > 0.0 && level < policy.extent(), ErrorCode::kDomain,
          "probe level must lie in (0, L)");
  const double h = policy.step();
  const std::size_t c = std::min(static_cast<std::size_t>(level / h), policy.intervals() - 1);
  const double t = (level - h * static_cast<double>(c)) / h;
  return (1.0 - t) * measure.flux[c] + t * measure.flux[c + 1];
}

double upcrossing_rate(const StationaryMeasure& measure, const PolicyGrid& policy,
                       const HarvestParams& params,
                       const PacketDistribution& dist, double level) {
  require(level > 0.0 && level < policy.extent(), ErrorCode::kDomain,
          "probe level must lie in (0, L)");
  const double h = policy.step();
  const std::size_t last = std::min(static_cast<std::size_t>(level / h), policy.intervals() - 1);
  double integral = 0.0;
  for (std::size_t c = 0; c < last; ++c) {
    const double wl = measure.flux[c], wr = measure.flux[c + 1];
    if (wl + wr <= 0.0) continue;
    integral += measure.cell_mass[c] *
                (wl * dist.survival(level - policy.x(c)) +
                 wr * dist.survival(level - policy.x(c + 1))) /
                (wl + wr);
  }
  // Partial cell [x_last, level]: trapezoid in s with the exact partial cumulant.
  const double xl = policy.x(last);
  const double pl = policy.node_power(last), pr = policy(level);
  const double ds = params.lambda * 2.0 * (level - xl) / (pl + pr);
  const double ul = measure.flux[last];
  const double ur = downcrossing_rate(measure, policy, level);
  integral += 0.5 * ds / params.lambda *
              (ul * dist.survival(level - xl) + ur * dist.survival(0.0));
  return params.lambda * (measure.atom * dist.survival(level) + integral);
}

PolicyGrid grid_for_infinite_battery(const std::function<double(double)>& p,
                                     double p0plus, const HarvestParams& params,
                                     double step, double tail_tol) {
  require(!params.finite(), ErrorCode::kUsage, "battery capacity is finite");
  require(step > 0.0, ErrorCode::kDomain, "grid step must be positive");
  double extent = 8.0 / params.zeta;
  for (int attempt = 0; attempt < 24; ++attempt) {
    const auto n = static_cast<std::size_t>(std::ceil(extent / step));
    PolicyGrid grid = PolicyGrid::from_function(extent, n, p0plus, p);
    const StationaryMeasure m = measure_closed_form(grid, params);
    if (m.tail_mass < tail_tol) return grid;
    extent *= 2.0;
  }
  fail(ErrorCode::kDomain, "tail mass did not fall below tolerance; policy too close to null recurrence");
}

void write_measure(std::ostream& out, const StationaryMeasure& measure) {
  out << std::setprecision(12);
  out << "# atom = " << measure.atom << "\n";
  out << "# x f\n";
  for (std::size_t i = 1; i < measure.density.size(); ++i)
    out << measure.step * static_cast<double>(i) << ' ' << measure.density[i] << "\n";
}

}  // namespace damopt
