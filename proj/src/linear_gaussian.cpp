#include "ullgm/linear_gaussian.hpp"

#include <algorithm>
#include <cmath>

namespace ullgm {

LatentMoments latent_moments(const Eigen::VectorXd& z, const CenteredDesign& design) {
  LatentMoments m;
  m.zbar = z.mean();
  m.tss = (z.array() - m.zbar).square().sum();
  m.xtz.noalias() = design.Xc.transpose() * z;
  return m;
}

std::optional<ModelSuffStats> suff_stats(const LatentMoments& moments, const CenteredDesign& design,
                                         const ModelIndicator& model) {
  if (!(moments.tss >= 1e-300)) throw DegenerateZ("latent vector has no variation");

  auto chol = factorize_model(design, model);
  if (!chol) return std::nullopt;

  ModelSuffStats s;
  s.p_k = model.size();
  s.zbar = moments.zbar;
  s.tss = moments.tss;
  s.chol = std::move(*chol);
  s.xtz.resize(s.p_k);
  const auto& idx = model.included();
  for (int a = 0; a < s.p_k; ++a) s.xtz(a) = moments.xtz(idx[a]);
  if (s.p_k > 0) {
    s.whitened = s.chol.triangularView<Eigen::Lower>().solve(s.xtz);
    s.r2 = std::clamp(s.whitened.squaredNorm() / s.tss, 0.0, kMaxR2);
  } else {
    s.whitened.resize(0);
    s.r2 = 0.0;
  }
  return s;
}

ModelSuffStats suff_stats(const Eigen::VectorXd& z, const ModelIndicator& model,
                          const CenteredDesign& design) {
  auto s = suff_stats(latent_moments(z, design), design, model);
  if (!s) throw std::invalid_argument("model is rank deficient");
  return std::move(*s);
}

double log_marginal_given_g(const ModelSuffStats& s, int n, double g) {
  const double nm1 = n - 1.0;
  return 0.5 * (nm1 - s.p_k) * std::log1p(g) -
         0.5 * nm1 * (std::log1p(g * (1.0 - s.r2)) + std::log(s.tss));
}

double log_marginal_fixed_sigma2(const ModelSuffStats& s, double g, double sigma2) {
  const double delta = g / (1.0 + g);
  return -0.5 * s.p_k * std::log1p(g) - s.tss * (1.0 - delta * s.r2) / (2.0 * sigma2);
}

double sigma2_posterior_rate(const ModelSuffStats& s, double g) {
  const double delta = g / (1.0 + g);
  const double resid = s.tss * (1.0 - s.r2);  // z'Q z
  return 0.5 * (delta * resid + (1.0 - delta) * s.tss);
}

double sample_sigma2(const ModelSuffStats& s, double g, int n, Rng& rng) {
  const double shape = 0.5 * (n - 1.0);
  const double rate = sigma2_posterior_rate(s, g);
  std::gamma_distribution<double> gamma(shape, 1.0 / rate);
  return 1.0 / gamma(rng);
}

double sample_alpha(double zbar, double sigma2, int n, Rng& rng) {
  std::normal_distribution<double> normal(zbar, std::sqrt(sigma2 / n));
  return normal(rng);
}

Eigen::VectorXd beta_posterior_mean(const ModelSuffStats& s, double g) {
  if (s.p_k == 0) return Eigen::VectorXd(0);
  const double delta = g / (1.0 + g);
  return delta * s.chol.transpose().triangularView<Eigen::Upper>().solve(s.whitened);
}

Eigen::VectorXd sample_beta(const ModelSuffStats& s, double sigma2, double g, Rng& rng) {
  if (s.p_k == 0) return Eigen::VectorXd(0);
  const double delta = g / (1.0 + g);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(s.p_k);
  for (int a = 0; a < s.p_k; ++a) v(a) = normal(rng);
  // beta = L^{-T} (delta * L^{-1} X'z + sqrt(delta sigma2) * e)
  v = delta * s.whitened + std::sqrt(delta * sigma2) * v;
  return s.chol.transpose().triangularView<Eigen::Upper>().solve(v);
}

}  // namespace ullgm
