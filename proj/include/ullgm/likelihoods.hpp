#pragma once

#include "ullgm/core.hpp"

#include <cmath>
#include <span>

namespace ullgm {

/// Logistic-to-probit matching constant sqrt(pi/8): logistic(x) ~ Phi(b x).
inline constexpr double kLogisticProbitScale = 0.6266570686577501;

/// log(1 + exp(x)) without overflow.
inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// One observation's outcome model: family, count, trials (BiL) and r (NBL).
struct PointLik {
  FamilyTag family;
  int y = 0;
  int trials = 0;

  static PointLik of(const Dataset& d, int i) { return {d.family, d.y[i], d.trials_at(i)}; }
};

/// Full log pmf of y given the latent z, including the normalizing
/// combinatorial term. Returns -inf for impossible counts.
double log_pmf(const PointLik& pl, double z);

/// log pmf without the z-free combinatorial term; what the samplers use.
inline double log_kernel(const PointLik& pl, double z) {
  switch (pl.family.kind) {
    case Family::PLN: return pl.y * z - std::exp(z);
    case Family::BiL: return pl.y * z - pl.trials * softplus(z);
    case Family::NBL: return pl.family.r * z - (pl.family.r + pl.y) * softplus(z);
  }
  return 0.0;
}

/// d/dz of log_pmf.
inline double grad_log_pmf(const PointLik& pl, double z) {
  switch (pl.family.kind) {
    case Family::PLN: return pl.y - std::exp(z);
    // (y - (N - y) e^z) / (1 + e^z) rewritten as y - N * logistic(z)
    case Family::BiL: return pl.y - pl.trials * logistic(z);
    case Family::NBL: return pl.family.r - (pl.family.r + pl.y) * logistic(z);
  }
  return 0.0;
}

struct PlnMoments {
  double mean = 0.0;
  double variance = 0.0;
  double dispersion = 0.0;
};

/// Marginal mean, variance and variance-to-mean ratio of a PLN count with
/// latent mean `linear_predictor` and latent variance sigma2.
PlnMoments pln_moments(double linear_predictor, double sigma2);
PlnMoments pln_moments(double alpha, std::span<const double> beta, std::span<const double> x,
                       double sigma2);

/// Probit-matched approximation to the BiL marginal mean,
/// N * Phi(b * eta / sqrt(1 + b^2 sigma2)).
double bil_mean_approx(double linear_predictor, double sigma2, int trials);
double bil_mean_approx(double alpha, std::span<const double> beta, std::span<const double> x,
                       double sigma2, int trials);

}  // namespace ullgm
