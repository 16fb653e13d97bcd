#pragma once

#include "ullgm/core.hpp"
#include "ullgm/likelihoods.hpp"

#include <cmath>
#include <span>
#include <vector>

namespace ullgm {

/// Per-observation Robbins-Monro state for the latent updates. Each
/// observation keeps its own log step size; after `freeze()` the kernel
/// is fixed.
struct LatentAdaptState {
  std::vector<double> log_step;
  long iter = 0;
  double target_acc = 0.57;
  double kappa = 0.6;
  bool frozen = false;

  LatentAdaptState() = default;
  LatentAdaptState(int n, double initial_step = 1.0, double kappa = 0.6);

  /// iter^{-kappa} for the current sweep.
  double rate() const { return std::pow(static_cast<double>(std::max(iter, 1L)), -kappa); }
  void freeze() { frozen = true; }
};

struct TargetEval {
  double value = 0.0;
  double gradient = 0.0;
};

/// Log conditional density of z_i (up to a constant) and its derivative:
/// log_kernel(y | z) - (z - mean)^2 / (2 sigma2).
inline TargetEval log_target_z(const PointLik& pl, double z, double mean, double sigma2) {
  const double resid = z - mean;
  return {log_kernel(pl, z) - 0.5 * resid * resid / sigma2, grad_log_pmf(pl, z) - resid / sigma2};
}

struct BarkerResult {
  double z = 0.0;
  bool accepted = false;
};

/// One Barker step on a scalar target.
///
/// Draws xi ~ N(0, step^2), keeps its sign with probability
/// 1 / (1 + exp(-xi * grad(z))) and corrects with the Barker MH ratio. If
/// the gradient at the current point is not finite the step falls back to
/// a symmetric random walk.
template <class Target>
BarkerResult barker_step(double z, double step, Target&& target, Rng& rng) {
  std::normal_distribution<double> normal(0.0, step);
  std::uniform_real_distribution<double> unif;

  const TargetEval cur = target(z);
  const double xi = normal(rng);
  const bool gradient_ok = std::isfinite(cur.gradient);

  double proposal = z + xi;
  if (gradient_ok && unif(rng) >= logistic(xi * cur.gradient)) proposal = z - xi;

  const TargetEval next = target(proposal);
  if (!std::isfinite(next.value)) return {z, false};

  double log_ratio = next.value - cur.value;
  if (gradient_ok) {
    if (!std::isfinite(next.gradient)) return {z, false};
    const double d = proposal - z;
    log_ratio += softplus(-d * cur.gradient) - softplus(d * next.gradient);
  }
  if (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio) return {proposal, true};
  return {z, false};
}

/// Barker update of z_i given its linear predictor mean and sigma2.
inline BarkerResult barker_update(const PointLik& pl, double z, double mean, double sigma2,
                                  double step, Rng& rng) {
  return barker_step(
      z, step, [&](double v) { return log_target_z(pl, v, mean, sigma2); }, rng);
}

/// Updates every z_i once using stream i of `streams`, then adapts the
/// per-observation step sizes unless the state is frozen. Returns the
/// number of accepted proposals.
int update_all_latents(Eigen::VectorXd& z, const Dataset& data, const Eigen::VectorXd& mean,
                       double sigma2, LatentAdaptState& adapt, std::span<Rng> streams);

/// Same update with an explicit visiting order (a permutation of 0..n-1).
int update_all_latents(Eigen::VectorXd& z, const Dataset& data, const Eigen::VectorXd& mean,
                       double sigma2, LatentAdaptState& adapt, std::span<Rng> streams,
                       std::span<const int> order);

/// One independent stream per observation, derived from (seed, index).
std::vector<Rng> make_observation_streams(std::uint64_t seed, int n);

}  // namespace ullgm
