#include "damopt/throughput.hpp"

#include <cmath>
#include <string>

#include "damopt/error.hpp"

namespace damopt {
namespace {

constexpr std::size_t kExactSupport = 64;

double hermite(double y0, double y1, double m0, double m1, double h, double u) {
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * h * m0 +
         (-2 * u3 + 3 * u2) * y1 + (u3 - u2) * h * m1;
}

// Density part of a node's law (atom excluded).
struct DensityNodes {
  std::vector<double> power;
  std::vector<double> mass;
};

DensityNodes density_nodes(const NodeState& node) {
  node.measure.require_normalized();
  require(node.measure.weights.size() == node.policy.size(), ErrorCode::kUsage,
          "measure and policy grids differ");
  DensityNodes d;
  const std::size_t n = node.policy.size();
  d.power.resize(n);
  d.mass.assign(node.measure.weights.begin(), node.measure.weights.end());
  d.mass.back() += node.measure.tail_mass;
  for (std::size_t i = 0; i < n; ++i) d.power[i] = node.policy.node_power(i);
  return d;
}

double tensor_sum(const RateFunction& rf, const std::vector<const DensityNodes*>& members,
                  std::size_t depth, double offset) {
  const DensityNodes& d = *members[depth];
  double acc = 0.0;
  if (depth + 1 == members.size()) {
    for (std::size_t i = 0; i < d.power.size(); ++i)
      acc += d.mass[i] * rf.value_unchecked(offset + d.power[i]);
  } else {
    for (std::size_t i = 0; i < d.power.size(); ++i)
      if (d.mass[i] != 0.0)
        acc += d.mass[i] * tensor_sum(rf, members, depth + 1, offset + d.power[i]);
  }
  return acc;
}

void check_node_count(std::size_t m, std::size_t max_nodes) {
  require(m >= 1, ErrorCode::kUsage, "system has no nodes");
  require(m <= max_nodes, ErrorCode::kCapacity,
          "subset expansion over " + std::to_string(m) + " nodes exceeds the cap of " +
              std::to_string(max_nodes));
}

}  // namespace

double PowerLaw::mean() const {
  double e = 0.0;
  for (std::size_t i = 0; i < power.size(); ++i) e += power[i] * mass[i];
  return e;
}

PowerLaw power_law(const PolicyGrid& policy, const StationaryMeasure& measure) {
  measure.require_normalized();
  require(measure.weights.size() == policy.size(), ErrorCode::kUsage,
          "measure and policy grids differ");
  PowerLaw law;
  law.power.reserve(policy.size() + 1);
  law.mass.reserve(policy.size() + 1);
  law.power.push_back(0.0);
  law.mass.push_back(measure.atom);
  for (std::size_t i = 0; i < policy.size(); ++i) {
    law.power.push_back(policy.node_power(i));
    law.mass.push_back(measure.weights[i]);
  }
  law.mass.back() += measure.tail_mass;
  return law;
}

PowerLaw convolve(std::span<const PowerLaw> laws, std::size_t max_support) {
  PowerLaw out;
  out.power = {0.0};
  out.mass = {1.0};
  for (const PowerLaw& law : laws) {
    require(out.size() * law.size() <= max_support, ErrorCode::kCapacity,
            "support of the summed power law exceeds " + std::to_string(max_support));
    PowerLaw next;
    next.power.reserve(out.size() * law.size());
    next.mass.reserve(out.size() * law.size());
    for (std::size_t a = 0; a < out.size(); ++a)
      for (std::size_t b = 0; b < law.size(); ++b) {
        const double m = out.mass[a] * law.mass[b];
        if (m == 0.0) continue;
        next.power.push_back(out.power[a] + law.power[b]);
        next.mass.push_back(m);
      }
    out = std::move(next);
  }
  return out;
}

double sum_throughput(const SystemState& state, std::size_t max_nodes) {
  const std::size_t m = state.nodes.size();
  check_node_count(m, max_nodes);
  std::vector<DensityNodes> dens;
  dens.reserve(m);
  for (const auto& node : state.nodes) dens.push_back(density_nodes(node));

  double total = 0.0;
  for (std::size_t mask = 1; mask < (std::size_t{1} << m); ++mask) {
    double empty = 1.0;
    std::vector<const DensityNodes*> members;
    for (std::size_t k = 0; k < m; ++k) {
      if (mask & (std::size_t{1} << k))
        members.push_back(&dens[k]);
      else
        empty *= state.nodes[k].measure.atom;
    }
    if (empty == 0.0) continue;
    total += empty * tensor_sum(state.rate, members, 0, 0.0);
  }
  return total;
}

PhiMoments phi_moments(const SystemState& state, std::size_t j,
                       std::span<const double> q_grid, std::size_t max_nodes) {
  const std::size_t m = state.nodes.size();
  check_node_count(m, max_nodes);
  require(j < m, ErrorCode::kUsage,
          "node index " + std::to_string(j) + " out of range (M = " + std::to_string(m) + ")");
  std::vector<PowerLaw> laws;
  for (std::size_t k = 0; k < m; ++k)
    if (k != j) laws.push_back(power_law(state.nodes[k].policy, state.nodes[k].measure));
  const PowerLaw others = convolve(laws);

  PhiMoments out;
  out.q.assign(q_grid.begin(), q_grid.end());
  out.phi.resize(q_grid.size());
  out.d1.resize(q_grid.size());
  out.d2.resize(q_grid.size());
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    require(q_grid[i] >= 0.0, ErrorCode::kDomain, "power argument must be >= 0");
    double a = 0, b = 0, c = 0, jet[4];
    for (std::size_t s = 0; s < others.size(); ++s) {
      state.rate.jet_unchecked(q_grid[i] + others.power[s], jet);
      a += others.mass[s] * jet[0];
      b += others.mass[s] * jet[1];
      c += others.mass[s] * jet[2];
    }
    out.phi[i] = a;
    out.d1[i] = b;
    out.d2[i] = c;
  }
  return out;
}

PhiFunction::PhiFunction(RateFunction rate, PowerLaw others, double q_max)
    : rate_(std::move(rate)), others_(std::move(others)), q_max_(q_max),
      table_(others_.size() > kExactSupport) {
  require(q_max > 0.0, ErrorCode::kDomain, "tabulation range must be positive");
  if (table_) build();
}

void PhiFunction::build() {
  const double t_max = std::log1p(q_max_ / q_scale_);
  const auto nt = static_cast<std::size_t>(std::ceil(t_max / dt_)) + 1;
  f0_.resize(nt + 1);
  f1_.resize(nt + 1);
  f2_.resize(nt + 1);
  f3_.resize(nt + 1);
  for (std::size_t i = 0; i <= nt; ++i) {
    const double q = q_scale_ * std::expm1(dt_ * static_cast<double>(i));
    double acc[4] = {0, 0, 0, 0}, jet[4];
    for (std::size_t s = 0; s < others_.size(); ++s) {
      rate_.jet_unchecked(q + others_.power[s], jet);
      for (int k = 0; k < 4; ++k) acc[k] += others_.mass[s] * jet[k];
    }
    f0_[i] = acc[0];
    f1_[i] = acc[1];
    f2_[i] = acc[2];
    f3_[i] = acc[3];
  }
  q_max_ = q_scale_ * std::expm1(dt_ * static_cast<double>(nt));
}

void PhiFunction::extend(double q_max) {
  if (!table_ || q_max <= q_max_) return;
  q_max_ = q_max;
  build();
}

PhiJet PhiFunction::exact(double q) const {
  double acc[3] = {0, 0, 0}, jet[4];
  for (std::size_t s = 0; s < others_.size(); ++s) {
    rate_.jet_unchecked(q + others_.power[s], jet);
    for (int k = 0; k < 3; ++k) acc[k] += others_.mass[s] * jet[k];
  }
  return {acc[0], acc[1], acc[2]};
}

PhiJet PhiFunction::operator()(double q) const {
  if (!table_) return exact(q);
  if (!(q <= q_max_) || q < 0.0)
    fail(ErrorCode::kOverflow, "power " + std::to_string(q) +
                                   " outside the tabulated range [0, " +
                                   std::to_string(q_max_) + "]");
  const double t = std::log1p(q / q_scale_);
  auto i = static_cast<std::size_t>(t / dt_);
  if (i + 1 >= f0_.size()) i = f0_.size() - 2;
  const double t0 = dt_ * static_cast<double>(i);
  const double u = (t - t0) / dt_;
  // dq/dt = q + q_scale
  const double j0 = q_scale_ * std::exp(t0);
  const double j1 = q_scale_ * std::exp(t0 + dt_);
  return {hermite(f0_[i], f0_[i + 1], f1_[i] * j0, f1_[i + 1] * j1, dt_, u),
          hermite(f1_[i], f1_[i + 1], f2_[i] * j0, f2_[i + 1] * j1, dt_, u),
          hermite(f2_[i], f2_[i + 1], f3_[i] * j0, f3_[i + 1] * j1, dt_, u)};
}

double infinite_battery_lower_bound(std::span<const HarvestParams> params,
                                    double rho, const RateFunction& rate) {
  require(rho > 0.0, ErrorCode::kDomain, "excess power rho must be positive");
  require(!params.empty(), ErrorCode::kUsage, "no nodes given");
  if (std::isinf(rho)) return 0.0;
  double total = 0.0, product = 1.0;
  for (const auto& p : params) {
    p.validate();
    const double m = p.mean_energy_rate();
    total += m + rho;
    product *= m / (m + rho);
  }
  return rate(total) * product;
}

}  // namespace damopt
