#include "damopt/arrivals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <sstream>

#include "damopt/error.hpp"

namespace damopt {

void HarvestParams::validate() const {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kDomain,
          "lambda must be finite and >= 0");
  require(zeta > 0.0 && std::isfinite(zeta), ErrorCode::kDomain,
          "zeta must be finite and > 0");
  require(capacity > 0.0, ErrorCode::kDomain,
          "capacity must be > 0 (or infinite)");
}

PacketDistribution PacketDistribution::exponential(double zeta) {
  require(zeta > 0.0 && std::isfinite(zeta), ErrorCode::kDomain,
          "exponential packet rate must be > 0");
  return PacketDistribution(ExponentialPackets{zeta});
}

PacketDistribution PacketDistribution::tabulated(std::vector<double> x,
                                                 std::vector<double> cdf) {
  require(x.size() >= 2 && x.size() == cdf.size(), ErrorCode::kDomain,
          "tabulated CDF needs at least two (x, B) knots");
  require(x.front() >= 0.0, ErrorCode::kDomain, "CDF knots must be >= 0");
  require(cdf.front() == 0.0, ErrorCode::kDomain, "CDF must start at B = 0");
  require(std::abs(cdf.back() - 1.0) < 1e-12, ErrorCode::kDomain,
          "CDF must end at B = 1");
  for (std::size_t i = 1; i < x.size(); ++i) {
    require(x[i] > x[i - 1], ErrorCode::kDomain,
            "CDF knots must be strictly increasing in x");
    require(cdf[i] >= cdf[i - 1], ErrorCode::kDomain, "CDF must be nondecreasing");
  }
  cdf.back() = 1.0;
  return PacketDistribution(TabulatedPackets{std::move(x), std::move(cdf)});
}

PacketDistribution PacketDistribution::parse(std::istream& in) {
  std::vector<double> xs, bs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    double x, b;
    if (!(ls >> x)) continue;
    require(static_cast<bool>(ls >> b), ErrorCode::kDomain,
            "CDF line " + std::to_string(lineno) + ": expected two columns");
    xs.push_back(x);
    bs.push_back(b);
  }
  return tabulated(std::move(xs), std::move(bs));
}

PacketDistribution PacketDistribution::load(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot open packet CDF file: " + path);
  return parse(in);
}

double PacketDistribution::exponential_rate() const {
  require(is_exponential(), ErrorCode::kUsage,
          "packet distribution is not exponential");
  return std::get<ExponentialPackets>(form_).zeta;
}

double PacketDistribution::mean() const {
  if (const auto* e = std::get_if<ExponentialPackets>(&form_)) return 1.0 / e->zeta;
  const auto& t = std::get<TabulatedPackets>(form_);
  // E[X] = integral of the survival function; exact for linear pieces.
  double m = t.x.front();
  for (std::size_t i = 1; i < t.x.size(); ++i)
    m += (t.x[i] - t.x[i - 1]) * (1.0 - 0.5 * (t.cdf[i] + t.cdf[i - 1]));
  return m;
}

double PacketDistribution::survival(double x) const {
  require(x >= 0.0, ErrorCode::kDomain, "survival argument must be >= 0");
  if (const auto* e = std::get_if<ExponentialPackets>(&form_))
    return std::exp(-e->zeta * x);
  const auto& t = std::get<TabulatedPackets>(form_);
  if (x <= t.x.front()) return 1.0;
  if (x >= t.x.back()) return 0.0;
  const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - t.x.begin());
  const double w = (x - t.x[i - 1]) / (t.x[i] - t.x[i - 1]);
  return 1.0 - (t.cdf[i - 1] + w * (t.cdf[i] - t.cdf[i - 1]));
}

double PacketDistribution::sample(RandomStream& rng) const {
  if (const auto* e = std::get_if<ExponentialPackets>(&form_))
    return rng.exponential(e->zeta);
  const auto& t = std::get<TabulatedPackets>(form_);
  const double u = rng.uniform();
  // First knot with B >= u; flat pieces have zero probability.
  const auto it = std::lower_bound(t.cdf.begin(), t.cdf.end(), u);
  const std::size_t i = std::max<std::size_t>(1, it - t.cdf.begin());
  const double db = t.cdf[i] - t.cdf[i - 1];
  const double w = db > 0.0 ? (u - t.cdf[i - 1]) / db : 0.0;
  return t.x[i - 1] + w * (t.x[i] - t.x[i - 1]);
}

double survival(const PacketDistribution& dist, double x) { return dist.survival(x); }

std::vector<Arrival> sample_arrivals(const HarvestParams& params,
                                     const PacketDistribution& dist,
                                     double horizon, std::uint64_t seed,
                                     std::uint64_t node,
                                     std::uint64_t replication) {
  params.validate();
  require(horizon > 0.0 && std::isfinite(horizon), ErrorCode::kDomain,
          "horizon must be positive and finite");
  std::vector<Arrival> out;
  if (params.lambda == 0.0) return out;
  ArrivalStream stream(params, dist, seed, node, replication);
  out.reserve(static_cast<std::size_t>(params.lambda * horizon * 1.1) + 16);
  while (true) {
    const Arrival a = stream.next();
    if (a.time > horizon) break;
    out.push_back(a);
  }
  return out;
}

ArrivalStream::ArrivalStream(const HarvestParams& params, const PacketDistribution& dist,
                             std::uint64_t seed, std::uint64_t node,
                             std::uint64_t replication)
    : lambda_(params.lambda), dist_(&dist), rng_(seed, node, replication) {
  params.validate();
}

Arrival ArrivalStream::next() {
  if (lambda_ == 0.0) return {std::numeric_limits<double>::infinity(), 0.0};
  t_ += rng_.exponential(lambda_);
  return {t_, dist_->sample(rng_)};
}

}  // namespace damopt
