#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <sstream>

#include "damopt/bounds.hpp"
#include "damopt/solver.hpp"
#include "test_support.hpp"

using namespace damopt;

namespace {

const RateFunction kRate = RateFunction::shannon(1.0);

SolveReport gauss_seidel(const std::vector<HarvestParams>& nodes, const SolverConfig& c) {
  return solve_mac_gauss_seidel(nodes, kRate, std::span<const SolverConfig>(&c, 1));
}

PhiFunction single_node_phi() { return PhiFunction(kRate, PowerLaw{{0.0}, {1.0}}); }

}  // namespace

TEST_CASE("initial policies") {
  SolverConfig c;
  c.grid_n = 64;
  c.p0plus = 0.1;
  const auto lin = initial_policy(c, 2.0);
  CHECK(lin.extent() == doctest::Approx(2.0));
  CHECK(lin.intervals() == 64);
  c.init = InitPolicy::kConstant;
  const auto con = initial_policy(c, 2.0);
  CHECK(con.value(10) == doctest::Approx(con.value(60)));
  CHECK(parse_init_policy("sqrt") == InitPolicy::kSqrt);
  CHECK(std::string(init_policy_name(InitPolicy::kLinear)) == "linear");
  CHECK_ERROR_CODE(parse_init_policy("cubic"), ErrorCode::kUsage);
}

TEST_CASE("solver config validation") {
  SolverConfig c;
  c.p0plus = 0;
  CHECK_ERROR_CODE(c.validate(), ErrorCode::kDomain);
  c = SolverConfig{};
  c.grid_n = 8;
  CHECK_ERROR_CODE(c.validate(), ErrorCode::kDomain);
  c = SolverConfig{};
  c.theta_tol = -1;
  CHECK_ERROR_CODE(c.validate(), ErrorCode::kDomain);
  CHECK_ERROR_CODE(solve_symmetric_mac(2, {1, 1, kInfiniteCapacity}, kRate, SolverConfig{}),
                   ErrorCode::kUsage);
  CHECK_ERROR_CODE(solve_symmetric_mac(5, {1, 1, 3}, kRate, SolverConfig{}), ErrorCode::kCapacity);
}

TEST_CASE("single-node ODE is increasing for K above the threshold") {
  auto phi = single_node_phi();
  const double threshold = -kRate(1.0);
  for (double K : {0.0, 0.5, threshold + 0.05}) {
    SolverConfig c;
    c.K = K;
    c.p0plus = 0.001;
    c.grid_n = 512;
    const auto p = el_ode_solve(phi, {1, 1, 2}, c);
    bool increasing = p.node_power(1) > p.p0plus();
    for (std::size_t i = 1; i < p.intervals(); ++i) increasing = increasing && p.value(i + 1) > p.value(i);
    CHECK_MESSAGE(increasing, "K = " << K);
  }
}

TEST_CASE("single-node ODE has the constant fixed point") {
  auto phi = single_node_phi();
  SolverConfig c;
  c.K = -kRate(1.0);
  c.p0plus = 1.0;
  c.grid_n = 256;
  const auto p = el_ode_solve(phi, {1, 1, 3}, c);
  for (std::size_t i = 1; i <= p.intervals(); ++i) CHECK(p.value(i) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("single-node ODE against an independent integration") {
  // p' = [(1 - p) r'(p) + r(p)] / (-p r''(p)) for lambda = zeta = 1, K = 0,
  // integrated here in y = p^2 with classical RK4 on a finer step.
  auto rhs = [](double y) {
    const double p = std::sqrt(y);
    const double c = 1.0 / (2.0 * std::log(2.0));
    const double r1 = c / (1 + p), r2 = -c / ((1 + p) * (1 + p));
    return 2.0 * ((1 - p) * r1 + oracle::shannon(p)) / -r2;
  };
  const double p0 = 0.01, L = 0.5;
  double y = p0 * p0;
  const int steps = 20000;
  const double h = L / steps;
  for (int k = 0; k < steps; ++k) {
    const double k1 = rhs(y), k2 = rhs(y + 0.5 * h * k1), k3 = rhs(y + 0.5 * h * k2), k4 = rhs(y + h * k3);
    y += h * (k1 + 2 * k2 + 2 * k3 + k4) / 6;
  }
  auto phi = single_node_phi();
  SolverConfig c;
  c.p0plus = p0;
  c.grid_n = 512;
  const auto p = el_ode_solve(phi, {1, 1, L}, c);
  CHECK(p.last_value() == doctest::Approx(std::sqrt(y)).epsilon(1e-6));
}

TEST_CASE("doubly exponential growth for a single node") {
  SolverConfig c;
  c.K = 0;
  c.p0plus = 0.001;
  c.grid_n = 2048;
  const auto rep = gauss_seidel({{1, 1, 6}}, c);
  const auto& p = rep.policies[0];
  const std::size_t n = p.intervals(), i0 = n - n / 10;
  double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
  for (std::size_t i = i0; i <= n; ++i) {
    const double x = p.x(i), yv = std::log(std::log(p.value(i)));
    sx += x;
    sy += yv;
    sxx += x * x;
    sxy += x * yv;
    ++k;
  }
  const double slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  CHECK(slope == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("ODE overflow and non-admissible paths") {
  auto phi = single_node_phi();
  SolverConfig c;
  c.K = 0;
  c.p0plus = 0.001;
  c.grid_n = 512;
  CHECK_ERROR_CODE(el_ode_solve(phi, {1, 1, 12}, c), ErrorCode::kOverflow);
  c.K = -3.0;
  CHECK_ERROR_CODE(el_ode_solve(phi, {1, 1, 3}, c), ErrorCode::kNonAdmissible);
}

TEST_CASE("symmetric solver reproduces the K = 0 utilities") {
  SolverConfig c;
  c.grid_n = 512;
  c.p0plus = 0.001;
  const auto l1 = solve_symmetric_mac(2, {1, 1, 1}, kRate, c);
  CHECK(l1.utility == doctest::Approx(0.4217).epsilon(0.02 / 0.4217));
  c.p0plus = 0.1;
  const auto l3 = solve_symmetric_mac(2, {1, 1, 3}, kRate, c);
  CHECK(l3.utility == doctest::Approx(0.4510).epsilon(0.02 / 0.4510));
  CHECK(l3.termination == "converged");
  CHECK(l3.iterations <= 15);
  for (double u : l3.utility_trace) CHECK(u <= l3.upper_bound);
  CHECK(mean_power(l3.measures[0], l3.policies[0]) <= 1 - std::exp(-3.0));
}

TEST_CASE("symmetric solver keeps iterates and reports") {
  SolverConfig c;
  c.grid_n = 128;
  c.keep_iterates = true;
  const auto rep = solve_symmetric_mac(2, {1, 1, 2}, kRate, c);
  CHECK(rep.iterates.size() == rep.utility_trace.size());
  CHECK(rep.policies.size() == 2);
  std::ostringstream s;
  write_report(s, rep);
  for (const char* section : {"[trace]", "[history]", "[node 0]", "[node 1]"})
    CHECK(s.str().find(section) != std::string::npos);
}

TEST_CASE("utility drops are warnings unless strict") {
  // Starting from the linear policy the K = 0 fixed point has lower utility.
  SolverConfig c;
  c.grid_n = 256;
  const auto rep = solve_symmetric_mac(2, {1, 1, 3}, kRate, c);
  CHECK_FALSE(rep.warnings.empty());
  c.strict_ascent = true;
  CHECK_ERROR_CODE(solve_symmetric_mac(2, {1, 1, 3}, kRate, c), ErrorCode::kDivergence);
}

TEST_CASE("Gauss-Seidel matches the symmetric solver on symmetric input") {
  SolverConfig c;
  c.grid_n = 512;
  c.theta_tol = 1e-6;
  const auto sym = solve_symmetric_mac(2, {1, 1, 3}, kRate, c);
  const auto gs = gauss_seidel({{1, 1, 3}, {1, 1, 3}}, c);
  CHECK(gs.utility == doctest::Approx(sym.utility).epsilon(1e-3));
}

TEST_CASE("Gauss-Seidel with one node is the point-to-point solution") {
  SolverConfig c;
  c.grid_n = 512;
  const auto rep = gauss_seidel({{1, 1, 2}}, c);
  auto phi = single_node_phi();
  const auto p = el_ode_solve(phi, {1, 1, 2}, c);
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(rep.policies[0].value(i) == doctest::Approx(p.value(i)));
  const auto m = measure_closed_form(p, {1, 1, 2});
  SystemState s{{{{1, 1, 2}, p, m}}, kRate};
  CHECK(rep.utility == doctest::Approx(sum_throughput(s)).epsilon(1e-12));
}

TEST_CASE("Gauss-Seidel with coordinate search ascends") {
  // The incumbent competes with the candidates, so each update maximizes
  // over a set containing the current policy.
  SolverConfig c;
  c.grid_n = 512;
  c.search = true;
  c.ascent_guard = true;
  c.search_p0plus = {0.001, 0.01, 0.1};
  for (int k = 0; k <= 20; ++k) c.search_K.push_back(-1.0 + 0.05 * k);
  const auto rep = gauss_seidel({{1, 1, 3}, {1, 1, 3}}, c);
  for (std::size_t i = 1; i < rep.utility_trace.size(); ++i)
    CHECK(rep.utility_trace[i] >= rep.utility_trace[i - 1] - 1e-6);
  for (std::size_t i = 1; i < rep.history.size(); ++i)
    CHECK(rep.history[i].utility >= rep.history[i - 1].utility - 1e-6);
  CHECK(rep.utility > 0.6);
  CHECK(rep.utility <= rep.upper_bound);
  CHECK(std::any_of(rep.history.begin(), rep.history.end(), [](const IterationRecord& r) { return r.accepted; }));
}

TEST_CASE("ascent guard rejects decreasing coordinate updates") {
  SolverConfig c;
  c.grid_n = 256;
  c.ascent_guard = true;
  const auto rep = gauss_seidel({{1, 1, 3}, {1, 1, 3}}, c);
  for (std::size_t i = 1; i < rep.utility_trace.size(); ++i)
    CHECK(rep.utility_trace[i] >= rep.utility_trace[i - 1] - 1e-6);
}

TEST_CASE("asymmetric regression") {
  SolverConfig c;
  c.grid_n = 512;
  const std::vector<HarvestParams> nodes{{1, 1, 2}, {2, 1, 2}};
  const auto rep = gauss_seidel(nodes, c);
  const double bound = oracle::shannon(3 * (1 - std::exp(-2.0)));
  CHECK(rep.upper_bound == doctest::Approx(bound));
  CHECK(rep.utility <= bound);
  CHECK(rep.utility == doctest::Approx(0.57404427).epsilon(1e-6));
}

TEST_CASE("constant policy statistics") {
  auto s = constant_policy_stats({1, 1, kInfiniteCapacity}, 1.0);
  CHECK(s.atom == doctest::Approx(0.5));
  CHECK(s.mean_power == doctest::Approx(1.0));
  CHECK(s.power_variance == doctest::Approx(1.0));
  s = constant_policy_stats({2, 1, kInfiniteCapacity}, 0.5);
  CHECK(s.atom == doctest::Approx(0.2));
  CHECK(s.mean_power == doctest::Approx(2.0));
  CHECK(s.power_variance == doctest::Approx(1.0));
  s = constant_policy_stats({1, 1, kInfiniteCapacity}, 1e-9);
  CHECK(s.atom == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(s.power_variance == doctest::Approx(0.0).epsilon(1e-8));
  CHECK_ERROR_CODE(constant_policy_stats({1, 1, 3}, 1.0), ErrorCode::kUsage);
}

TEST_CASE("Euler-Lagrange residual of a converged policy") {
  SolverConfig c;
  c.grid_n = 512;
  c.theta_tol = 1e-7;
  c.max_outer = 200;
  const auto rep = solve_symmetric_mac(2, {1, 1, 3}, kRate, c);
  const auto res = euler_lagrange_residual(rep, kRate, 0, 0.0);
  CHECK(*std::max_element(res.begin(), res.end()) < 1e-3);
}
