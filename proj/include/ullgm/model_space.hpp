#pragma once

#include "ullgm/core.hpp"
#include "ullgm/linear_gaussian.hpp"

#include <cmath>
#include <limits>

namespace ullgm {

/// Beta-binomial model prior with a = 1 and b = (p - m) / m.
struct ModelPriorParams {
  double a = 1.0;
  double b = 1.0;
  int p = 0;

  static ModelPriorParams from_expected_size(int p, double m);
};

/// log P(M_k); -inf when the model fails the rank check.
double log_model_prior(int p_k, const ModelPriorParams& params, bool rank_ok);
double log_model_prior(const ModelIndicator& model, const ModelPriorParams& params, bool rank_ok);

enum class Move { Add, Delete, Swap };

/// Probability of choosing `move` from a model of size p_k out of p.
double move_probability(Move move, int p_k, int p);

struct AdsProposal {
  ModelIndicator proposed;
  Move move = Move::Add;
  /// log q(M | M*) - log q(M* | M)
  double log_correction = 0.0;
};

/// Add-delete-swap proposal: forced Add from the null model, forced Delete
/// from the full model, otherwise each move with probability 1/3; the
/// covariate(s) involved are chosen uniformly.
AdsProposal propose_ads(const ModelIndicator& current, Rng& rng);

/// log q(M|M*) - log q(M*|M) for a move of the given type from size p_k.
double ads_log_correction(Move move, int p_k, int p);

/// One Metropolis-Hastings step over models.
///
/// `log_evidence(model)` returns the log marginal likelihood of a model or
/// nullopt if the model is rank deficient; `current_log_evidence` must hold
/// the value for `current` and is updated on acceptance. Returns whether
/// the proposal was accepted.
template <class Evidence>
bool model_mh_step(ModelIndicator& current, double& current_log_evidence, Evidence&& log_evidence,
                   const ModelPriorParams& params, Rng& rng) {
  AdsProposal prop = propose_ads(current, rng);
  const std::optional<double> evidence = log_evidence(prop.proposed);
  if (!evidence) return false;
  const double log_ratio = log_model_prior(prop.proposed.size(), params, true) -
                           log_model_prior(current.size(), params, true) + *evidence -
                           current_log_evidence + prop.log_correction;
  if (log_ratio < 0.0) {
    std::uniform_real_distribution<double> unif;
    if (!(std::log(unif(rng)) < log_ratio)) return false;
  }
  current = std::move(prop.proposed);
  current_log_evidence = *evidence;
  return true;
}

struct ModelStepResult {
  ModelIndicator model;
  bool accepted = false;
};

/// Model step against the fixed-g marginal likelihood of z.
ModelStepResult model_mh_step(const ModelIndicator& current, const Eigen::VectorXd& z,
                              const CenteredDesign& design, double g,
                              const ModelPriorParams& params, Rng& rng);

}  // namespace ullgm
