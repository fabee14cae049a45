#include "damopt/rate.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "damopt/error.hpp"

namespace damopt {
namespace {

class ShannonRate final : public RateModel {
 public:
  explicit ShannonRate(double n0) : n0_(n0) {}

  double value(double x) const override {
    return 0.5 * std::log1p(x / n0_) / std::numbers::ln2;
  }

  double derivative(double x, int order) const override {
    const double c = 0.5 / std::numbers::ln2;
    const double u = n0_ + x;
    switch (order) {
      case 1: return c / u;
      case 2: return -c / (u * u);
      case 3: return 2.0 * c / (u * u * u);
      default: break;
    }
    fail(ErrorCode::kUsage, "rate derivative order must be 1, 2 or 3, got " +
                                std::to_string(order));
  }

  void jet(double x, double out[4]) const override {
    const double c = 0.5 / std::numbers::ln2;
    const double inv = 1.0 / (n0_ + x);
    out[0] = c * std::log1p(x / n0_);
    out[1] = c * inv;
    out[2] = -out[1] * inv;
    out[3] = -2.0 * out[2] * inv;
  }

 private:
  double n0_;
};

}  // namespace

RateFunction RateFunction::shannon(double n0) {
  require(n0 > 0.0 && std::isfinite(n0), ErrorCode::kDomain,
          "noise density n0 must be positive and finite");
  return RateFunction(std::make_shared<ShannonRate>(n0), n0, true);
}

RateFunction RateFunction::custom(std::shared_ptr<const RateModel> model) {
  require(model != nullptr, ErrorCode::kUsage, "null rate model");
  return RateFunction(std::move(model), 0.0, false);
}

double RateFunction::operator()(double x) const {
  require(x >= 0.0, ErrorCode::kDomain,
          "rate argument must be >= 0, got " + std::to_string(x));
  return model_->value(x);
}

double RateFunction::derivative(double x, int order) const {
  require(order >= 1 && order <= 3, ErrorCode::kUsage,
          "rate derivative order must be 1, 2 or 3");
  require(x >= 0.0, ErrorCode::kDomain,
          "rate argument must be >= 0, got " + std::to_string(x));
  return model_->derivative(x, order);
}

double rate(const RateFunction& rf, double x) { return rf(x); }

double rate_deriv(const RateFunction& rf, double x, int order) {
  require(order == 1 || order == 2, ErrorCode::kUsage,
          "rate_deriv supports order 1 or 2");
  return rf.derivative(x, order);
}

bool mixture_rate_inequality_check(const RateFunction& rf, double gamma,
                                   double beta, std::span<const double> a,
                                   std::span<const double> b) {
  require(!a.empty() && a.size() == b.size(), ErrorCode::kDomain,
          "mixture check needs two non-empty sequences of equal length");
  require(gamma > 0.0 && beta > 0.0, ErrorCode::kDomain,
          "gamma and beta must be positive");
  double lhs = 0.0, sa = 0.0, sb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    require(a[k] > 0.0 && b[k] > 0.0, ErrorCode::kDomain,
            "mixture entries must be positive");
    lhs += a[k] * rf(gamma * b[k] / a[k] + beta);
    sa += a[k];
    sb += b[k];
  }
  const double rhs = sa * rf(gamma * sb / sa + beta);
  return lhs <= rhs + 1e-12 * std::abs(rhs);
}

}  // namespace damopt
