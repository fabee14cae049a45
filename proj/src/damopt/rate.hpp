#pragma once

#include <memory>
#include <span>

namespace damopt {

// A concave, increasing rate law r(x) with r(0) = 0 and three continuous
// derivatives. Only the Shannon form ships; other forms plug in through
// RateModel.
class RateModel {
 public:
  virtual ~RateModel() = default;
  virtual double value(double x) const = 0;
  // order in {1, 2, 3}
  virtual double derivative(double x, int order) const = 0;
  // r, r', r'', r''' at x in one call.
  virtual void jet(double x, double out[4]) const {
    out[0] = value(x);
    for (int k = 1; k <= 3; ++k) out[k] = derivative(x, k);
  }
};

class RateFunction {
 public:
  // r(x) = 1/2 log2(1 + x / n0)
  static RateFunction shannon(double n0);
  static RateFunction custom(std::shared_ptr<const RateModel> model);

  double operator()(double x) const;
  double derivative(double x, int order) const;

  // Unchecked evaluation for inner loops; x must be >= 0.
  double value_unchecked(double x) const { return model_->value(x); }
  double derivative_unchecked(double x, int order) const {
    return model_->derivative(x, order);
  }

  void jet_unchecked(double x, double out[4]) const { model_->jet(x, out); }

  double n0() const { return n0_; }
  bool is_shannon() const { return shannon_; }

 private:
  RateFunction(std::shared_ptr<const RateModel> model, double n0, bool shannon)
      : model_(std::move(model)), n0_(n0), shannon_(shannon) {}

  std::shared_ptr<const RateModel> model_;
  double n0_ = 0.0;
  bool shannon_ = false;
};

double rate(const RateFunction& rf, double x);
double rate_deriv(const RateFunction& rf, double x, int order);

// Checks sum_k a_k r(gamma b_k / a_k + beta) <= (sum a) r(gamma (sum b) / (sum a) + beta).
// Equality is accepted up to a relative 1e-12 slack.
bool mixture_rate_inequality_check(const RateFunction& rf, double gamma,
                                   double beta, std::span<const double> a,
                                   std::span<const double> b);

}  // namespace damopt
