#pragma once
// Shared helpers for the unit tests: error-code assertions and small
// independent quadratures used as oracles.
#include <cmath>
#include <functional>

#include "damopt/error.hpp"
#include "doctest.h"

#define CHECK_ERROR_CODE(expr, expected_code)                       \
  do {                                                              \
    bool thrown_ = false;                                           \
    try {                                                           \
      (void)(expr);                                                 \
    } catch (const damopt::Error& e_) {                             \
      thrown_ = true;                                               \
      CHECK_MESSAGE(e_.code() == (expected_code), e_.what());       \
    }                                                               \
    CHECK_MESSAGE(thrown_, "expected a damopt::Error");             \
  } while (0)

namespace oracle {

// Composite Simpson on [a, b] with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + h * i);
  return s * h / 3.0;
}

// Gauss-Laguerre-free tail: integrate f on [a, inf) by mapping x = a + t/(1-t).
inline double simpson_to_inf(const std::function<double(double)>& f, double a,
                             int n = 20000) {
  auto g = [&](double t) {
    if (t >= 1.0) return 0.0;
    const double u = 1.0 - t;
    return f(a + t / u) / (u * u);
  };
  return simpson(g, 0.0, 1.0 - 1e-9, n);
}

inline double shannon(double x, double n0 = 1.0) { return 0.5 * std::log2(1.0 + x / n0); }

}  // namespace oracle
