#include "ullgm/likelihoods.hpp"

#include <boost/math/distributions/normal.hpp>

#include <limits>
#include <numeric>

namespace ullgm {

namespace {

double log_choose(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("beta and x differ in length");
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

double log_pmf(const PointLik& pl, double z) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (pl.y < 0) return kNegInf;
  switch (pl.family.kind) {
    case Family::PLN: return log_kernel(pl, z) - std::lgamma(pl.y + 1.0);
    case Family::BiL:
      if (pl.y > pl.trials) return kNegInf;
      return log_choose(pl.trials, pl.y) + log_kernel(pl, z);
    case Family::NBL:
      return log_choose(pl.family.r + pl.y - 1.0, pl.y) + log_kernel(pl, z);
  }
  return kNegInf;
}

PlnMoments pln_moments(double linear_predictor, double sigma2) {
  const double mean = std::exp(linear_predictor + 0.5 * sigma2);
  const double excess = std::expm1(sigma2);
  return {mean, mean + mean * mean * excess, 1.0 + mean * excess};
}

PlnMoments pln_moments(double alpha, std::span<const double> beta, std::span<const double> x,
                       double sigma2) {
  return pln_moments(alpha + dot(beta, x), sigma2);
}

double bil_mean_approx(double linear_predictor, double sigma2, int trials) {
  const boost::math::normal std_normal;
  const double b = kLogisticProbitScale;
  return trials * boost::math::cdf(std_normal,
                                   b * linear_predictor / std::sqrt(1.0 + b * b * sigma2));
}

double bil_mean_approx(double alpha, std::span<const double> beta, std::span<const double> x,
                       double sigma2, int trials) {
  return bil_mean_approx(alpha + dot(beta, x), sigma2, trials);
}

}  // namespace ullgm
