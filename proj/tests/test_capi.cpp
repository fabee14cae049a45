#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "damopt.h"
#include "doctest.h"

TEST_CASE("status names and last error") {
  CHECK(std::string(damopt_status_name(DAMOPT_OK)) == "OK");
  CHECK(std::string(damopt_status_name(DAMOPT_E_NON_ADMISSIBLE)) == "NON_ADMISSIBLE");
  double out = 0;
  CHECK(damopt_rate(1.0, -1.0, &out) == DAMOPT_E_DOMAIN);
  CHECK(std::string(damopt_last_error()).size() > 0);
  CHECK(damopt_rate(1.0, 2.0, &out) == DAMOPT_OK);
  CHECK(out == doctest::Approx(0.5 * std::log2(3.0)));
  CHECK(damopt_rate(1.0, 2.0, nullptr) == DAMOPT_E_USAGE);
}

TEST_CASE("bounds through the C interface") {
  const damopt_params two[2] = {{1, 1, 3}, {1, 1, 3}};
  double b = 0;
  REQUIRE(damopt_upper_bound(two, 2, 1.0, &b) == DAMOPT_OK);
  CHECK(b == doctest::Approx(0.5 * std::log2(1 + 2 * (1 - std::exp(-3.0)))));
  const damopt_params inf[2] = {{1, 1, DAMOPT_INFINITE_CAPACITY}, {1, 1, DAMOPT_INFINITE_CAPACITY}};
  REQUIRE(damopt_upper_bound(inf, 2, 1.0, &b) == DAMOPT_OK);
  CHECK(b == doctest::Approx(0.5 * std::log2(3.0)));
  CHECK(damopt_upper_bound_finite(inf, 2, 1.0, &b) == DAMOPT_E_USAGE);
  REQUIRE(damopt_lower_bound_infinite(inf, 1, 1.0, 1.0, &b) == DAMOPT_OK);
  CHECK(b == doctest::Approx(0.25 * std::log2(3.0)));
  double atom, mean, var;
  REQUIRE(damopt_constant_policy_stats(&inf[0], 1.0, &atom, &mean, &var) == DAMOPT_OK);
  CHECK(atom == doctest::Approx(0.5));
}

TEST_CASE("policy and measure handles") {
  const std::vector<double> v{0.0, 1.0, 2.0, 3.0};
  damopt_policy* p = nullptr;
  CHECK(damopt_policy_create(3.0, v.data(), v.size(), 0.0, &p) == DAMOPT_E_NON_ADMISSIBLE);
  REQUIRE(damopt_policy_create(3.0, v.data(), v.size(), 0.5, &p) == DAMOPT_OK);
  CHECK(damopt_policy_size(p) == 4);
  CHECK(damopt_policy_extent(p) == doctest::Approx(3.0));
  const damopt_params hp{1, 1, 3};
  damopt_measure* m = nullptr;
  REQUIRE(damopt_measure_closed_form(p, &hp, &m) == DAMOPT_OK);
  std::vector<double> f(damopt_measure_size(m));
  CHECK(damopt_measure_density(m, f.data(), f.size()) == DAMOPT_OK);
  CHECK(damopt_measure_density(m, f.data(), 1) == DAMOPT_E_USAGE);
  CHECK(f[0] == doctest::Approx(damopt_measure_atom(m) / 0.5));
  double mp = 0;
  REQUIRE(damopt_measure_mean_power(m, p, &mp) == DAMOPT_OK);
  CHECK(mp <= 1 - std::exp(-3.0));

  const auto path = (std::filesystem::temp_directory_path() / "damopt_capi_policy.txt").string();
  REQUIRE(damopt_policy_save(p, path.c_str()) == DAMOPT_OK);
  damopt_policy* q = nullptr;
  REQUIRE(damopt_policy_load(path.c_str(), &q) == DAMOPT_OK);
  std::vector<double> back(4);
  REQUIRE(damopt_policy_values(q, back.data(), back.size()) == DAMOPT_OK);
  CHECK(back[3] == doctest::Approx(3.0));
  std::remove(path.c_str());
  CHECK(damopt_policy_load("/nonexistent/policy.txt", &q) == DAMOPT_E_IO);

  damopt_packets* e = nullptr;
  REQUIRE(damopt_packets_exponential(1.0, &e) == DAMOPT_OK);
  damopt_measure* mv = nullptr;
  damopt_policy* fine = nullptr;
  REQUIRE(damopt_policy_constant(3.0, 300, 2.0, &fine) == DAMOPT_OK);
  REQUIRE(damopt_measure_volterra(fine, &hp, e, &mv) == DAMOPT_OK);
  damopt_measure* mc = nullptr;
  REQUIRE(damopt_measure_closed_form(fine, &hp, &mc) == DAMOPT_OK);
  CHECK(damopt_measure_atom(mv) == doctest::Approx(damopt_measure_atom(mc)).epsilon(1e-6));

  damopt_measure_free(mv);
  damopt_measure_free(mc);
  damopt_policy_free(fine);
  damopt_packets_free(e);
  damopt_measure_free(m);
  damopt_policy_free(p);
  damopt_policy_free(q);
  damopt_policy_free(nullptr);
}

TEST_CASE("solvers through the C interface") {
  damopt_solver_config c;
  damopt_solver_config_default(&c);
  CHECK(c.grid_n == 512);
  CHECK(c.p0plus == doctest::Approx(0.001));
  c.keep_iterates = 1;
  const damopt_params hp{1, 1, 3};
  damopt_report* r = nullptr;
  REQUIRE(damopt_solve_symmetric(2, &hp, 1.0, &c, &r) == DAMOPT_OK);
  CHECK(damopt_report_utility(r) == doctest::Approx(0.4652).epsilon(0.02 / 0.4652));
  CHECK(damopt_report_nodes(r) == 2);
  CHECK(std::string(damopt_report_termination(r)) == "converged");
  const std::size_t len = damopt_report_trace(r, nullptr, 0);
  std::vector<double> trace(len);
  CHECK(damopt_report_trace(r, trace.data(), len) == len);
  CHECK(damopt_report_iterate_count(r) == len);
  damopt_policy* p = nullptr;
  REQUIRE(damopt_report_policy(r, 1, &p) == DAMOPT_OK);
  CHECK(damopt_report_policy(r, 2, &p) == DAMOPT_E_USAGE);
  double res = 0;
  CHECK(damopt_report_el_residual(r, 1.0, 0, 0.0, &res) == DAMOPT_OK);
  damopt_policy_free(p);
  damopt_report_free(r);

  const damopt_params nodes[2] = {{1, 1, 2}, {2, 1, 2}};
  REQUIRE(damopt_solve_gauss_seidel(nodes, 2, 1.0, &c, 1, &r) == DAMOPT_OK);
  CHECK(damopt_report_utility(r) <= damopt_report_upper_bound(r));
  damopt_report_free(r);
  const damopt_solver_config three[3] = {c, c, c};
  CHECK(damopt_solve_gauss_seidel(nodes, 2, 1.0, three, 3, &r) == DAMOPT_E_USAGE);
  c.p0plus = -1;
  CHECK(damopt_solve_symmetric(2, &hp, 1.0, &c, &r) == DAMOPT_E_DOMAIN);
}

TEST_CASE("simulation through the C interface") {
  damopt_policy* p = nullptr;
  REQUIRE(damopt_policy_constant(40.0, 4000, 2.0, &p) == DAMOPT_OK);
  damopt_packets* e = nullptr;
  REQUIRE(damopt_packets_exponential(1.0, &e) == DAMOPT_OK);
  const damopt_params hp{1, 1, DAMOPT_INFINITE_CAPACITY};
  damopt_sim_config c;
  damopt_sim_config_default(&c);
  c.horizon = 2e4;
  c.replications = 4;
  const double probes[] = {1.0, 2.0};
  c.probes = probes;
  c.probe_count = 2;
  const damopt_policy* ps[] = {p};
  const damopt_packets* es[] = {e};
  damopt_stats* s = nullptr;
  REQUIRE(damopt_simulate(&hp, ps, es, 1, 1.0, &c, &s) == DAMOPT_OK);
  double mean = 0, se = 0;
  REQUIRE(damopt_stats_throughput(s, &mean, &se) == DAMOPT_OK);
  CHECK(std::abs(mean - 0.25 * std::log2(3.0)) < 4 * se);
  damopt_node_summary n;
  REQUIRE(damopt_stats_node(s, 0, &n) == DAMOPT_OK);
  CHECK(std::abs(n.atom - 0.5) < 4 * n.atom_se);
  damopt_measure* m = nullptr;
  REQUIRE(damopt_measure_closed_form(p, &hp, &m) == DAMOPT_OK);
  double ks = 1;
  REQUIRE(damopt_stats_ks(s, 0, m, p, &ks) == DAMOPT_OK);
  CHECK(ks < 0.03);
  int ok = 0;
  double z = 0;
  REQUIRE(damopt_stats_crossing_balance(s, 0, m, p, &hp, e, nullptr, &ok, &z) == DAMOPT_OK);
  CHECK(z < 5.0);
  CHECK(damopt_stats_node(s, 3, &n) == DAMOPT_E_USAGE);
  c.burn_in = 1e5;
  damopt_stats* bad = nullptr;
  CHECK(damopt_simulate(&hp, ps, es, 1, 1.0, &c, &bad) == DAMOPT_E_DOMAIN);
  damopt_measure_free(m);
  damopt_stats_free(s);
  damopt_packets_free(e);
  damopt_policy_free(p);
}
