#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace damopt {

// A transmission power policy sampled on the uniform grid x_i = i h,
// i = 0..n, h = extent / n. The stored value at x_0 is p(0) = 0; solvers and
// quadratures use the right limit p(0+) instead.
//
// Between nodes the policy is the square-linear interpolant: p(x)^2 is
// linear on each cell. It reproduces the p ~ sqrt(x) behaviour of
// optimized policies near an empty battery and makes the depletion time
// integral of 1/p exact: 2h / (p_i + p_{i+1}) per cell.
//
// Levels above the grid extent use the last node value (constant tail).
class PolicyGrid {
 public:
  PolicyGrid(double extent, std::vector<double> values, double p0plus);

  static PolicyGrid from_function(double extent, std::size_t intervals,
                                  double p0plus,
                                  const std::function<double(double)>& p);
  static PolicyGrid constant(double extent, std::size_t intervals, double power);

  std::size_t intervals() const { return values_.size() - 1; }
  std::size_t size() const { return values_.size(); }
  double extent() const { return extent_; }
  double step() const { return extent_ / static_cast<double>(intervals()); }
  double x(std::size_t i) const { return step() * static_cast<double>(i); }
  double p0plus() const { return p0plus_; }

  // p(x_i), with p(x_0) = 0.
  double value(std::size_t i) const { return values_[i]; }
  // p(x_i) with the right limit at x_0.
  double node_power(std::size_t i) const { return i == 0 ? p0plus_ : values_[i]; }
  std::span<const double> values() const { return values_; }
  double max_value() const;
  double last_value() const { return values_.back(); }

  // Square-linear interpolant; p(0) = 0.
  double operator()(double x) const;

  // Drain time through cell i, from x_{i+1} down to x_i.
  double cell_drain_time(std::size_t i) const {
    return 2.0 * step() / (node_power(i) + node_power(i + 1));
  }

 private:
  double extent_;
  std::vector<double> values_;
  double p0plus_;
};

// Text form: "# p0plus = <v>" header, then "x p(x)" rows from x = 0.
void write_policy(std::ostream& out, const PolicyGrid& policy);
PolicyGrid read_policy(std::istream& in);
PolicyGrid load_policy(const std::string& path);

}  // namespace damopt
