#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sstream>

#include "damopt/policy.hpp"
#include "test_support.hpp"

using namespace damopt;

TEST_CASE("grid layout and node access") {
  const auto p = PolicyGrid::from_function(2.0, 4, 0.1, [](double x) { return 1 + x; });
  CHECK(p.intervals() == 4);
  CHECK(p.size() == 5);
  CHECK(p.step() == doctest::Approx(0.5));
  CHECK(p.value(0) == 0.0);
  CHECK(p.node_power(0) == doctest::Approx(0.1));
  CHECK(p.value(2) == doctest::Approx(2.0));
  CHECK(p.max_value() == doctest::Approx(3.0));
  CHECK(p(0.0) == 0.0);
}

TEST_CASE("square-linear interpolation") {
  const auto p = PolicyGrid::from_function(1.0, 2, 0.5, [](double x) { return 1 + 2 * x; });
  // nodes: p0+ = 0.5, p(0.5) = 2, p(1) = 3
  const double mid = std::sqrt(0.5 * (4.0 + 9.0));
  CHECK(p(0.75) == doctest::Approx(mid));
  CHECK(p(0.25) == doctest::Approx(std::sqrt(0.5 * (0.25 + 4.0))));
  // constant tail above the extent
  CHECK(p(5.0) == doctest::Approx(3.0));
  // drain time through a cell is int dx / p with p^2 linear
  const double h = 0.5;
  const double oracle_time = oracle::simpson([&](double x) { return 1.0 / p(x); }, 0.5, 1.0, 20000);
  CHECK(p.cell_drain_time(1) == doctest::Approx(oracle_time).epsilon(1e-8));
  CHECK(p.cell_drain_time(1) == doctest::Approx(2 * h / 5.0));
}

TEST_CASE("constant policy") {
  const auto p = PolicyGrid::constant(10.0, 100, 2.0);
  CHECK(p.node_power(0) == 2.0);
  CHECK(p(3.3) == doctest::Approx(2.0));
  CHECK(p.cell_drain_time(7) == doctest::Approx(0.05));
}

TEST_CASE("admissibility is enforced") {
  CHECK_ERROR_CODE(PolicyGrid(1.0, {0.0, 1.0}, 0.0), ErrorCode::kNonAdmissible);
  CHECK_ERROR_CODE(PolicyGrid(1.0, {0.0, -1.0}, 0.1), ErrorCode::kNonAdmissible);
  CHECK_ERROR_CODE(PolicyGrid(1.0, {0.5, 1.0}, 0.1), ErrorCode::kNonAdmissible);
  CHECK_ERROR_CODE(PolicyGrid(0.0, {0.0, 1.0}, 0.1), ErrorCode::kDomain);
  CHECK_ERROR_CODE(PolicyGrid(1.0, {0.0}, 0.1), ErrorCode::kDomain);
}

TEST_CASE("text round trip") {
  const auto p = PolicyGrid::from_function(3.0, 30, 0.001, [](double x) { return std::exp(x); });
  std::stringstream s;
  write_policy(s, p);
  const auto q = read_policy(s);
  CHECK(q.size() == p.size());
  CHECK(q.extent() == doctest::Approx(3.0));
  CHECK(q.p0plus() == doctest::Approx(0.001));
  for (std::size_t i = 0; i < p.size(); ++i) CHECK(q.value(i) == doctest::Approx(p.value(i)));
}

TEST_CASE("malformed policy files") {
  std::istringstream no_header("0 0\n1 1\n");
  CHECK_ERROR_CODE(read_policy(no_header), ErrorCode::kIo);
  std::istringstream uneven("# p0plus = 0.1\n0 0\n1 1\n3 2\n");
  CHECK_ERROR_CODE(read_policy(uneven), ErrorCode::kIo);
  CHECK_ERROR_CODE(load_policy("/nonexistent/policy.txt"), ErrorCode::kIo);
}
