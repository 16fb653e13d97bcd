#include "ullgm/model_space.hpp"

namespace ullgm {

ModelPriorParams ModelPriorParams::from_expected_size(int p, double m) {
  if (!(m > 0.0 && m < p)) throw std::invalid_argument("expected model size must lie in (0, p)");
  return {1.0, (p - m) / m, p};
}

double log_model_prior(int p_k, const ModelPriorParams& params, bool rank_ok) {
  if (!rank_ok) return -std::numeric_limits<double>::infinity();
  const double a = params.a;
  const double b = params.b;
  return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + std::lgamma(a + p_k) +
         std::lgamma(b + params.p - p_k) - std::lgamma(a + b + params.p);
}

double log_model_prior(const ModelIndicator& model, const ModelPriorParams& params, bool rank_ok) {
  return log_model_prior(model.size(), params, rank_ok);
}

double move_probability(Move move, int p_k, int p) {
  const bool interior = p_k > 0 && p_k < p;
  switch (move) {
    case Move::Add: return p_k == 0 ? 1.0 : (interior ? 1.0 / 3.0 : 0.0);
    case Move::Delete: return p_k == p ? 1.0 : (interior ? 1.0 / 3.0 : 0.0);
    case Move::Swap: return interior ? 1.0 / 3.0 : 0.0;
  }
  return 0.0;
}

double ads_log_correction(Move move, int p_k, int p) {
  switch (move) {
    case Move::Add:
      return std::log(move_probability(Move::Delete, p_k + 1, p) / (p_k + 1)) -
             std::log(move_probability(Move::Add, p_k, p) / (p - p_k));
    case Move::Delete:
      return std::log(move_probability(Move::Add, p_k - 1, p) / (p - p_k + 1)) -
             std::log(move_probability(Move::Delete, p_k, p) / p_k);
    case Move::Swap: return 0.0;
  }
  return 0.0;
}

AdsProposal propose_ads(const ModelIndicator& current, Rng& rng) {
  const int p = current.p();
  const int pk = current.size();
  const auto pick = [&rng](const std::vector<int>& from) {
    std::uniform_int_distribution<std::size_t> u(0, from.size() - 1);
    return from[u(rng)];
  };

  AdsProposal prop{current, Move::Add, 0.0};
  if (pk == 0) {
    prop.move = Move::Add;
  } else if (pk == p) {
    prop.move = Move::Delete;
  } else {
    std::uniform_int_distribution<int> u(0, 2);
    prop.move = static_cast<Move>(u(rng));
  }

  switch (prop.move) {
    case Move::Add: prop.proposed.add(pick(current.excluded())); break;
    case Move::Delete: prop.proposed.remove(pick(current.included())); break;
    case Move::Swap: {
      const int out = pick(current.included());
      const int in = pick(current.excluded());
      prop.proposed.remove(out);
      prop.proposed.add(in);
      break;
    }
  }
  prop.log_correction = ads_log_correction(prop.move, pk, p);
  return prop;
}

ModelStepResult model_mh_step(const ModelIndicator& current, const Eigen::VectorXd& z,
                              const CenteredDesign& design, double g,
                              const ModelPriorParams& params, Rng& rng) {
  const LatentMoments moments = latent_moments(z, design);
  const int n = design.n();
  const auto evidence = [&](const ModelIndicator& m) -> std::optional<double> {
    auto s = suff_stats(moments, design, m);
    if (!s) return std::nullopt;
    return log_marginal_given_g(*s, n, g);
  };
  ModelStepResult result{current, false};
  const auto current_evidence = evidence(current);
  if (!current_evidence) throw std::invalid_argument("current model is rank deficient");
  double log_ev = *current_evidence;
  result.accepted = model_mh_step(result.model, log_ev, evidence, params, rng);
  return result;
}

}  // namespace ullgm
