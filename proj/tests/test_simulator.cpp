#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "damopt/simulator.hpp"
#include "damopt/throughput.hpp"
#include "test_support.hpp"

using namespace damopt;

namespace {

const RateFunction kRate = RateFunction::shannon(1.0);

SimNode constant_node(double c, double lambda = 1.0, double extent = 40.0) {
  return {{lambda, 1.0, kInfiniteCapacity}, PolicyGrid::constant(extent, 4000, c),
          PacketDistribution::exponential(1.0)};
}

bool within(const Estimate& e, double target, double k = 3.0) {
  return std::abs(e.mean - target) <= k * e.se;
}

}  // namespace

TEST_CASE("depletion map for a constant policy") {
  const DepletionMap d(PolicyGrid::constant(5.0, 500, 2.0));
  for (double x : {0.3, 1.7, 4.9, 7.5}) {
    CHECK(d.tau(x) == doctest::Approx(x / 2).epsilon(1e-12));
    for (double t : {0.01, 0.5, 1.0, 3.0, 10.0})
      CHECK(std::abs(d.level_after(x, t) - std::max(x - 2 * t, 0.0)) < 1e-8);
  }
}

TEST_CASE("depletion map for a shaped policy") {
  const auto p = PolicyGrid::from_function(3.0, 300, 0.05, [](double x) { return 0.05 + x + x * x; });
  const DepletionMap d(p);
  // Simpson cell by cell: the interpolant has kinks at the nodes.
  auto piecewise = [&](const std::function<double(double)>& f, double x) {
    double acc = 0;
    for (double a = 0; a < x; a += p.step()) acc += oracle::simpson(f, std::max(a, 1e-14), std::min(a + p.step(), x), 200);
    return acc;
  };
  for (double x : {0.01, 0.5, 2.0, 2.999}) {
    const double t = piecewise([&](double v) { return 1.0 / p(v); }, x);
    CHECK(d.tau(x) == doctest::Approx(t).epsilon(1e-8));
    const double e = piecewise([&](double v) { return p(v); }, x);
    CHECK(d.power_integral(x) == doctest::Approx(e).epsilon(1e-8));
    // flowing for part of the drain time lands where tau says
    const double half = d.level_after(x, 0.5 * d.tau(x));
    CHECK(d.tau(half) == doctest::Approx(0.5 * d.tau(x)).epsilon(1e-9));
  }
  CHECK(d.level_after(1.0, 1e9) == 0.0);
}

TEST_CASE("constant policy on an unbounded battery") {
  SimConfig c;
  c.horizon = 1e5;
  c.replications = 6;
  c.seed = 11;
  c.burn_in = 50;
  c.level_probes = {1.0};
  const auto node = constant_node(2.0);
  const auto s = simulate({node}, kRate, c);
  const auto& n = s.nodes[0];
  CHECK(within(n.atom, 0.5));
  CHECK(within(n.mean_power, 1.0));
  CHECK(within(n.power_variance, 1.0));
  CHECK(within(s.throughput, 0.5 * oracle::shannon(2.0)));
  CHECK(n.atom.mean + n.time_positive == doctest::Approx(1.0).epsilon(1e-12));
  // downcrossings of x = 1 at rate f(1) p(1)
  CHECK(within(n.down_rate[0], 0.5 * std::exp(-0.5)));
  const auto diff = static_cast<long long>(n.down_count[0]) - static_cast<long long>(n.up_count[0]);
  CHECK(std::llabs(diff) <= static_cast<long long>(c.replications));
  const auto m = measure_closed_form(node.policy, node.params);
  CHECK(ks_distance(n, m, node.policy) < 0.02);
  const auto checks = crossing_balance(s, m, node.policy, node.params, node.packets);
  REQUIRE(checks.size() == 1);
  CHECK(checks[0].analytic_down == doctest::Approx(0.5 * std::exp(-0.5)).epsilon(1e-4));
  CHECK(checks[0].within_3se);
}

TEST_CASE("two constant nodes against the subset expansion") {
  SimConfig c;
  c.horizon = 5e4;
  c.replications = 6;
  c.burn_in = 50;
  const auto a = constant_node(2.0);
  const auto s = simulate({a, a}, kRate, c);
  const double expected = 2 * 0.25 * oracle::shannon(2) + 0.25 * oracle::shannon(4);
  CHECK(within(s.throughput, expected));
}

TEST_CASE("no arrivals drains the battery once") {
  SimConfig c;
  c.horizon = 1000;
  c.initial_level = 2.0;
  c.event_log = true;
  const SimNode n{{0.0, 1.0, 5.0}, PolicyGrid::constant(5.0, 50, 1.0), PacketDistribution::exponential(1.0)};
  const auto s = simulate({n}, kRate, c);
  CHECK(s.nodes[0].atom.mean == doctest::Approx(1.0 - 2.0 / 1000).epsilon(1e-12));
  CHECK(s.throughput.mean == doctest::Approx(2.0 * oracle::shannon(1.0) / 1000).epsilon(1e-10));
  REQUIRE(s.events.size() == 1);
  CHECK(s.events[0].kind == "empty");
  CHECK(s.events[0].time == doctest::Approx(2.0));
  c.horizon = 1e6;
  c.event_log = false;
  CHECK(simulate({n}, kRate, c).throughput.mean < 1e-5);
}

TEST_CASE("finite battery clips arrivals and has no atom at L") {
  SimConfig c;
  c.horizon = 2e4;
  c.replications = 4;
  c.cdf_points = 1000;
  const SimNode n{{1.0, 1.0, 1.0}, PolicyGrid::constant(1.0, 100, 0.5), PacketDistribution::exponential(1.0)};
  const auto s = simulate({n}, kRate, c);
  CHECK(s.nodes[0].overflow_rate.mean > 0.0);
  // occupation of (L - eps, L] shrinks with eps
  const auto& cdf = s.nodes[0].cdf;
  const double top10 = 1.0 - cdf[990], top1 = 1.0 - cdf[999];
  CHECK(top1 < top10);
  CHECK(top1 < 0.01);
  // energy balance: harvested = consumed + clipped (per unit time)
  CHECK(s.nodes[0].mean_power.mean + s.nodes[0].overflow_rate.mean == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("runs are reproducible and independent of worker count") {
  SimConfig c;
  c.horizon = 2e4;
  c.replications = 4;
  c.seed = 99;
  c.level_probes = {0.5, 2.0};
  const SimNode n{{1, 1, 3}, PolicyGrid::from_function(3.0, 256, 0.01, [](double x) { return 0.5 + x; }),
                  PacketDistribution::exponential(1.0)};
  const auto a = simulate({n, n}, kRate, c);
  c.workers = 4;
  const auto b = simulate({n, n}, kRate, c);
  CHECK(a.throughput.mean == b.throughput.mean);
  CHECK(a.throughput.se == b.throughput.se);
  CHECK(a.nodes[1].atom.mean == b.nodes[1].atom.mean);
  CHECK(a.nodes[0].cdf == b.nodes[0].cdf);
  CHECK(a.nodes[0].down_count == b.nodes[0].down_count);
  std::ostringstream sa, sb;
  write_stats(sa, a);
  write_stats(sb, b);
  CHECK(sa.str() == sb.str());
  c.seed = 100;
  CHECK(simulate({n, n}, kRate, c).throughput.mean != a.throughput.mean);
}

TEST_CASE("simulation errors") {
  SimConfig c;
  c.horizon = 10;
  c.burn_in = 20;
  const auto n = constant_node(2.0);
  CHECK_ERROR_CODE(simulate({n}, kRate, c), ErrorCode::kDomain);
  c = SimConfig{};
  CHECK_ERROR_CODE(simulate({}, kRate, c), ErrorCode::kUsage);
  const SimNode wrong{{1, 1, 2}, PolicyGrid::constant(3.0, 30, 1.0), PacketDistribution::exponential(1.0)};
  CHECK_ERROR_CODE(simulate({wrong}, kRate, c), ErrorCode::kUsage);
  c.horizon = 100;
  c.level_probes = {50.0};
  const auto s = simulate({n}, kRate, c);
  const auto m = measure_closed_form(n.policy, n.params);
  CHECK_ERROR_CODE(crossing_balance(s, m, n.policy, n.params, n.packets), ErrorCode::kDomain);
}
