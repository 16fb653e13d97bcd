#pragma once

#include "ullgm/core.hpp"
#include "ullgm/linear_gaussian.hpp"

#include <cmath>

namespace ullgm {

/// log of the hyper-g/n density ((a-2)/(2n)) (1 + g/n)^{-a/2}.
double log_hyper_g_over_n(double g, double a, int n);

/// Closed-form cdf 1 - (1 + g/n)^{-(a-2)/2} and its inverse.
double hyper_g_over_n_cdf(double g, double a, int n);
double hyper_g_over_n_quantile(double u, double a, int n);

/// Adaptive state of the log-scale random walk on g. `log_tau` is the log
/// of the proposal variance tau_g.
struct GAdaptState {
  double log_tau = 0.0;
  long iter = 0;
  double target_acc = 0.234;
  double kappa = 0.6;
  bool frozen = false;

  double proposal_sd() const { return std::exp(0.5 * log_tau); }
  void freeze() { frozen = true; }
};

struct GUpdate {
  double g = 0.0;
  bool accepted = false;
};

/// log acceptance ratio for moving g -> g_star: prior ratio, marginal
/// likelihood ratio and the g*/g Jacobian of the log-scale proposal.
template <class LogLik>
double g_log_acceptance(double g, double g_star, LogLik&& log_lik, double a, int n) {
  return log_hyper_g_over_n(g_star, a, n) - log_hyper_g_over_n(g, a, n) + log_lik(g_star) -
         log_lik(g) + std::log(g_star) - std::log(g);
}

/// One adaptive MH update of g against an arbitrary log-likelihood in g.
template <class LogLik>
GUpdate mh_update_g(double g, LogLik&& log_lik, double a, int n, GAdaptState& adapt, Rng& rng) {
  std::normal_distribution<double> normal(0.0, adapt.proposal_sd());
  std::uniform_real_distribution<double> unif;
  const double g_star = g * std::exp(normal(rng));
  const double log_ratio = g_log_acceptance(g, g_star, log_lik, a, n);
  const bool accept = std::isfinite(log_ratio) && (log_ratio >= 0.0 || std::log(unif(rng)) < log_ratio);
  if (!adapt.frozen) {
    ++adapt.iter;
    adapt.log_tau += std::pow(static_cast<double>(adapt.iter), -adapt.kappa) *
                     ((accept ? 1.0 : 0.0) - adapt.target_acc);
  }
  return {accept ? g_star : g, accept};
}

/// g update given the current model's sufficient statistics.
GUpdate mh_update_g(double g, const ModelSuffStats& s, int n, double a, GAdaptState& adapt,
                    Rng& rng);

}  // namespace ullgm
