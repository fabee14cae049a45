#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <vector>

#include "damopt/bounds.hpp"
#include "test_support.hpp"

using namespace damopt;

namespace {
const RateFunction kRate = RateFunction::shannon(1.0);

std::vector<HarvestParams> nodes(std::size_t m, double lambda, double L) {
  return std::vector<HarvestParams>(m, HarvestParams{lambda, 1.0, L});
}
}  // namespace

TEST_CASE("finite-battery bound values") {
  const double expected[] = {0.4187, 0.5895, 0.7243, 0.7681};
  const double caps[] = {0.5, 1, 2, 3};
  for (int i = 0; i < 4; ++i) {
    const double b = upper_bound_finite(nodes(2, 1, caps[i]), kRate);
    CHECK(b == doctest::Approx(expected[i]).epsilon(6e-5 / expected[i]));
    CHECK(b == doctest::Approx(oracle::shannon(2 * (1 - std::exp(-caps[i])))));
  }
  CHECK(upper_bound_finite(nodes(3, 1, 0.0), kRate) == 0.0);
}

TEST_CASE("infinite-battery bound values") {
  CHECK(upper_bound_infinite(nodes(2, 1, kInfiniteCapacity), kRate) == doctest::Approx(0.792).epsilon(1e-3));
  CHECK(upper_bound_infinite(nodes(1, 0, kInfiniteCapacity), kRate) == 0.0);
  CHECK(upper_bound_infinite(nodes(3, 1, kInfiniteCapacity), kRate) == doctest::Approx(1.0));
}

TEST_CASE("bound dispatch and monotonicity") {
  CHECK(upper_bound(nodes(2, 1, kInfiniteCapacity), kRate) == doctest::Approx(std::log2(3.0) / 2));
  CHECK(upper_bound(nodes(2, 1, 3), kRate) == doctest::Approx(0.7681).epsilon(1e-4));
  double prev = 0;
  for (double L = 0.25; L < 20; L *= 1.5) {
    const double b = upper_bound(nodes(2, 1, L), kRate);
    CHECK(b > prev);
    CHECK(b < upper_bound(nodes(2, 1, kInfiniteCapacity), kRate));
    prev = b;
  }
  const std::vector<HarvestParams> mixed{{1, 1, 2}, {2, 1, 2}};
  CHECK(upper_bound(mixed, kRate) == doctest::Approx(oracle::shannon(3 * (1 - std::exp(-2.0)))));
}

TEST_CASE("bound errors") {
  CHECK_ERROR_CODE(upper_bound_finite(nodes(2, 1, kInfiniteCapacity), kRate), ErrorCode::kUsage);
  CHECK_ERROR_CODE(upper_bound_finite(nodes(2, -1, 1), kRate), ErrorCode::kDomain);
}
