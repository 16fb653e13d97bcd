#pragma once

#include "ullgm/chain.hpp"
#include "ullgm/core.hpp"

#include <string>

namespace ullgm {

enum class NoiseKind { Ullgm, GlmNoiseless, LogGamma };

std::string to_string(NoiseKind k);
NoiseKind parse_noise(const std::string& name);

/// Settings of the simulation study: AR(1)-correlated covariates, a fixed
/// intercept, latent noise regime and outcome family.
struct SimConfig {
  int n = 1000;
  int p = 50;
  double rho = 0.6;
  FamilyTag family = FamilyTag::pln();
  NoiseKind noise = NoiseKind::Ullgm;
  double sigma2 = 0.2;
  double intercept = 1.5;
  int trials = 30;
  double loggamma_shape = 5.5;

  void validate() const;
  /// Variance of the latent noise actually used (0 for the noiseless case).
  double noise_sigma2() const;
};

struct SimTruth {
  Eigen::VectorXd beta_star;
  ModelIndicator true_model;
};

/// Rows ~ N(0, Sigma) with Sigma_jk = rho^|j-k|, via the AR(1) recursion
/// x_j = rho x_{j-1} + sqrt(1 - rho^2) e_j.
Eigen::MatrixXd gen_design(int n, int p, double rho, Rng& rng);

/// (log p / sqrt n) (2,-3,2,2,-3,3,-2,3,-2,3,0,...,0).
SimTruth gen_beta_star(int n, int p);

/// Truth with arbitrary coefficients; nonzero entries define the true model.
SimTruth truth_from_beta(const Eigen::VectorXd& beta);

/// One draw of the latent-scale noise term for the configured process.
double sample_noise(const SimConfig& config, Rng& rng);

/// Latent z = intercept + x'beta* + e, then y from the family at h(z).

Dataset gen_outcomes(const Eigen::MatrixXd& X, const SimTruth& truth, const SimConfig& config,
                     Rng& rng);

struct MetricsReport {
  double model_size = 0.0;
  double frac_true = 0.0;
  double brier = 0.0;
  double fnr = 0.0;
  double fpr = 0.0;
  double ln_g = 0.0;  // log of the posterior mean of g
  double sigma2 = 0.0;
  double seconds = 0.0;
};

/// Brier score of the PIPs against the true inclusion pattern, per-draw
/// false negative / false positive fractions averaged over kept draws,
/// posterior mean model size and share of draws at the true model.
MetricsReport metrics(const ChainOutput& output, const SimTruth& truth);

MetricsReport average(const std::vector<MetricsReport>& reports);

}  // namespace ullgm
