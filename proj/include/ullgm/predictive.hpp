#pragma once

#include "ullgm/chain.hpp"
#include "ullgm/core.hpp"
#include "ullgm/likelihoods.hpp"

#include <vector>

namespace ullgm {

/// Gaussian approximation to the posterior of one latent z_i, used only to
/// place the quadrature window.
struct ZApproxMoments {
  double mean = 0.0;
  double var = 1.0;
};

/// PLN: combines log(y) ~ N(z, 1/y) with the N(eta, sigma2) prior; y = 0 is
/// replaced by 0.5. BiL: logit(p_hat) ~ N(z, 1/(N p_hat (1 - p_hat))) with
/// p_hat clamped to [0.5/(N+1), 1 - 0.5/(N+1)]. NBL reuses the BiL form with
/// N' = y + r, p_hat = r / (y + r).
ZApproxMoments approx_z_moments(const PointLik& pl, double linear_predictor, double sigma2);

inline constexpr int kQuadratureOrder = 64;
inline constexpr double kWindowHalfWidth = 6.0;
inline constexpr double kPmfFloor = 1e-300;

/// log of the integral of F(y | h(z)) N(z | eta, sigma2) over
/// mean +- half_width * sd of the approximate z posterior, by 64-point
/// Gauss-Legendre in log space. Not floored.
double log_predictive_pmf_raw(const PointLik& pl, double linear_predictor, double sigma2,
                              double half_width = kWindowHalfWidth);

/// Predictive probability of y, floored at 1e-300.
double predictive_pmf(const PointLik& pl, double linear_predictor, double sigma2);

/// Same, from a raw covariate row: centers (and scales) x_new with the
/// training transform before forming alpha + x'beta.
double predictive_pmf(const PointLik& pl, const Eigen::VectorXd& x_new, double alpha,
                      const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& col_means,
                      const Eigen::VectorXd& col_scales);

struct LpsResult {
  double lps = 0.0;
  std::vector<double> log_pred;  // per holdout point
  std::vector<bool> floored;     // averaged pmf hit the floor
};

/// Log predictive score over a holdout set: pmf values are averaged over
/// the kept draws before taking logs. `X_holdout` holds raw covariates;
/// `col_means`/`col_scales` are the training transform.
LpsResult lps(const Dataset& holdout, const DrawStore& draws, const Eigen::VectorXd& col_means,
              const Eigen::VectorXd& col_scales);

/// Convenience overload using the transform recorded in a chain output.
LpsResult lps(const Dataset& holdout, const ChainOutput& fit);

}  // namespace ullgm
