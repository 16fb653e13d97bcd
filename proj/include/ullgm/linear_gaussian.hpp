#pragma once

#include "ullgm/core.hpp"

namespace ullgm {

/// Model-free statistics of the latent vector: X'z over all candidate
/// columns, the mean and the total sum of squares about the mean.
struct LatentMoments {
  Eigen::VectorXd xtz;
  double zbar = 0.0;
  double tss = 0.0;
};

LatentMoments latent_moments(const Eigen::VectorXd& z, const CenteredDesign& design);

/// Sufficient statistics of z regressed on an intercept and X_k.
///
/// `chol` is the lower Cholesky factor of X_k'X_k (columns in the order of
/// ModelIndicator::included()), `whitened` is chol^{-1} X_k'z so that the
/// regression sum of squares is |whitened|^2.
struct ModelSuffStats {
  int p_k = 0;
  Eigen::MatrixXd chol;
  Eigen::VectorXd xtz;
  Eigen::VectorXd whitened;
  double zbar = 0.0;
  double tss = 0.0;
  double r2 = 0.0;
};

/// Largest admissible R^2; keeps the log marginal finite for perfect fits.
inline constexpr double kMaxR2 = 1.0 - 1e-12;

/// nullopt when the model fails the rank check. Throws DegenerateZ when
/// z is (numerically) constant.
std::optional<ModelSuffStats> suff_stats(const LatentMoments& moments, const CenteredDesign& design,
                                         const ModelIndicator& model);

/// Direct form; the model must pass rank_ok (throws std::invalid_argument
/// otherwise).
ModelSuffStats suff_stats(const Eigen::VectorXd& z, const ModelIndicator& model,
                          const CenteredDesign& design);

/// log p(z | M_k, g) up to the constant shared by all models:
/// ((n-1-p_k)/2) log(1+g) - ((n-1)/2) log((1 + g(1-R^2)) tss).
double log_marginal_given_g(const ModelSuffStats& s, int n, double g);

/// log p(z | M_k, g, sigma2) up to a model-free constant, for chains that
/// hold sigma2 fixed: -(p_k/2) log(1+g) - (tss - delta * R^2 tss) / (2 sigma2).
double log_marginal_fixed_sigma2(const ModelSuffStats& s, double g, double sigma2);

/// Rate C_n of the gamma conditional of 1/sigma2 (shape (n-1)/2).
double sigma2_posterior_rate(const ModelSuffStats& s, double g);

/// Draws sigma2 via 1/sigma2 ~ Gamma((n-1)/2, rate C_n).
double sample_sigma2(const ModelSuffStats& s, double g, int n, Rng& rng);

/// alpha ~ N(zbar, sigma2 / n).
double sample_alpha(double zbar, double sigma2, int n, Rng& rng);

/// Conditional mean delta (X_k'X_k)^{-1} X_k'z, delta = g/(1+g).
Eigen::VectorXd beta_posterior_mean(const ModelSuffStats& s, double g);

/// beta_k ~ N(delta (X_k'X_k)^{-1} X_k'z, delta sigma2 (X_k'X_k)^{-1}), ordered
/// like ModelIndicator::included().
Eigen::VectorXd sample_beta(const ModelSuffStats& s, double sigma2, double g, Rng& rng);

}  // namespace ullgm
