#include "damopt/policy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>

#include "damopt/error.hpp"

namespace damopt {

PolicyGrid::PolicyGrid(double extent, std::vector<double> values, double p0plus)
    : extent_(extent), values_(std::move(values)), p0plus_(p0plus) {
  require(extent_ > 0.0 && std::isfinite(extent_), ErrorCode::kDomain,
          "policy grid extent must be positive and finite");
  require(values_.size() >= 2, ErrorCode::kDomain,
          "policy grid needs at least one interval");
  require(p0plus_ > 0.0 && std::isfinite(p0plus_), ErrorCode::kNonAdmissible,
          "policy right limit p(0+) must be positive");
  require(values_[0] == 0.0, ErrorCode::kNonAdmissible,
          "admissible policies have p(0) = 0");
  for (std::size_t i = 1; i < values_.size(); ++i) {
    require(values_[i] > 0.0 && std::isfinite(values_[i]),
            ErrorCode::kNonAdmissible,
            "admissible policies are positive and bounded on (0, L]; bad value at x = " +
                std::to_string(step() * static_cast<double>(i)));
  }
}

PolicyGrid PolicyGrid::from_function(double extent, std::size_t intervals,
                                     double p0plus,
                                     const std::function<double(double)>& p) {
  require(intervals >= 1, ErrorCode::kDomain, "need at least one interval");
  std::vector<double> v(intervals + 1, 0.0);
  const double h = extent / static_cast<double>(intervals);
  for (std::size_t i = 1; i <= intervals; ++i) v[i] = p(h * static_cast<double>(i));
  return PolicyGrid(extent, std::move(v), p0plus);
}

PolicyGrid PolicyGrid::constant(double extent, std::size_t intervals, double power) {
  return from_function(extent, intervals, power, [power](double) { return power; });
}

double PolicyGrid::max_value() const {
  return std::max(p0plus_, *std::max_element(values_.begin(), values_.end()));
}

double PolicyGrid::operator()(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= extent_) return values_.back();
  const double h = step();
  const std::size_t i =
      std::min(static_cast<std::size_t>(x / h), intervals() - 1);
  const double t = (x - h * static_cast<double>(i)) / h;
  const double a = node_power(i), b = node_power(i + 1);
  return std::sqrt(a * a + (b * b - a * a) * t);
}

void write_policy(std::ostream& out, const PolicyGrid& policy) {
  out << std::setprecision(17);
  out << "# p0plus = " << policy.p0plus() << "\n# x p\n";
  for (std::size_t i = 0; i < policy.size(); ++i)
    out << policy.x(i) << ' ' << policy.value(i) << "\n";
}

PolicyGrid read_policy(std::istream& in) {
  double p0plus = -1.0;
  std::vector<double> xs, ps;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      const auto key = line.find("p0plus", hash);
      const auto eq = line.find('=', hash);
      if (key != std::string::npos && eq != std::string::npos)
        p0plus = std::stod(line.substr(eq + 1));
      line.resize(hash);
    }
    std::istringstream row(line);
    double x, p;
    if (!(row >> x)) continue;
    require(static_cast<bool>(row >> p), ErrorCode::kIo, "policy row needs two columns: " + line);
    xs.push_back(x);
    ps.push_back(p);
  }
  require(p0plus > 0.0, ErrorCode::kIo, "policy file lacks a '# p0plus = ' header");
  require(xs.size() >= 2 && xs.front() == 0.0, ErrorCode::kIo,
          "policy file must start at x = 0 and have at least two rows");
  const double h = xs.back() / static_cast<double>(xs.size() - 1);
  for (std::size_t i = 0; i < xs.size(); ++i)
    require(std::abs(xs[i] - h * static_cast<double>(i)) <= 1e-9 * std::max(1.0, xs.back()),
            ErrorCode::kIo, "policy grid must be uniform");
  return PolicyGrid(xs.back(), std::move(ps), p0plus);
}

PolicyGrid load_policy(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open policy file '" + path + "'");
  return read_policy(in);
}

}  // namespace damopt
