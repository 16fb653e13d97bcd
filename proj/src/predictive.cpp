#include "ullgm/predictive.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace ullgm {

namespace {

struct Rule {
  std::array<double, kQuadratureOrder> nodes{};
  std::array<double, kQuadratureOrder> log_weights{};
};

const Rule& gauss_legendre() {
  static const Rule rule = [] {
    using GL = boost::math::quadrature::gauss<double, kQuadratureOrder>;
    const auto& x = GL::abscissa();
    const auto& w = GL::weights();
    Rule r;
    std::size_t k = 0;
    for (std::size_t a = 0; a < x.size(); ++a) {
      r.nodes[k] = x[a];
      r.log_weights[k++] = std::log(w[a]);
      if (x[a] != 0.0) {
        r.nodes[k] = -x[a];
        r.log_weights[k++] = std::log(w[a]);
      }
    }
    return r;
  }();
  return rule;
}

double log_sum_exp(const double* v, std::size_t count) {
  const double mx = *std::max_element(v, v + count);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (std::size_t k = 0; k < count; ++k) s += std::exp(v[k] - mx);
  return mx + std::log(s);
}

ZApproxMoments combine(double obs, double obs_precision, double linear_predictor, double sigma2) {
  const double prior_precision = 1.0 / sigma2;
  const double var = 1.0 / (obs_precision + prior_precision);
  return {var * (obs * obs_precision + linear_predictor * prior_precision), var};
}

ZApproxMoments logit_form(double successes, double trials, double linear_predictor,
                          double sigma2) {
  const double edge = 0.5 / (trials + 1.0);
  const double p_hat = std::clamp(successes / trials, edge, 1.0 - edge);
  const double info = trials * p_hat * (1.0 - p_hat);
  return combine(std::log(p_hat) - std::log1p(-p_hat), info, linear_predictor, sigma2);
}

}  // namespace

ZApproxMoments approx_z_moments(const PointLik& pl, double linear_predictor, double sigma2) {
  switch (pl.family.kind) {
    case Family::PLN: {
      const double y = pl.y == 0 ? 0.5 : static_cast<double>(pl.y);
      return combine(std::log(y), y, linear_predictor, sigma2);
    }
    case Family::BiL: return logit_form(pl.y, pl.trials, linear_predictor, sigma2);
    case Family::NBL: {
      const double r = pl.family.r;
      return logit_form(r, r + pl.y, linear_predictor, sigma2);
    }
  }
  return {linear_predictor, sigma2};
}

double log_predictive_pmf_raw(const PointLik& pl, double linear_predictor, double sigma2,
                              double half_width) {
  const ZApproxMoments mom = approx_z_moments(pl, linear_predictor, sigma2);
  const double h = half_width * std::sqrt(mom.var);
  const Rule& rule = gauss_legendre();
  const double log_norm = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
  std::array<double, kQuadratureOrder> terms{};
  for (int k = 0; k < kQuadratureOrder; ++k) {
    const double z = mom.mean + h * rule.nodes[k];
    const double r = z - linear_predictor;
    terms[k] = rule.log_weights[k] + log_pmf(pl, z) + log_norm - 0.5 * r * r / sigma2;
  }
  return std::log(h) + log_sum_exp(terms.data(), terms.size());
}

double predictive_pmf(const PointLik& pl, double linear_predictor, double sigma2) {
  const double v = std::exp(log_predictive_pmf_raw(pl, linear_predictor, sigma2));
  return std::clamp(std::isfinite(v) ? v : 0.0, kPmfFloor, 1.0);
}

double predictive_pmf(const PointLik& pl, const Eigen::VectorXd& x_new, double alpha,
                      const Eigen::VectorXd& beta, double sigma2, const Eigen::VectorXd& col_means,
                      const Eigen::VectorXd& col_scales) {
  const Eigen::VectorXd xc = (x_new - col_means).cwiseQuotient(col_scales);
  return predictive_pmf(pl, alpha + xc.dot(beta), sigma2);
}

LpsResult lps(const Dataset& holdout, const DrawStore& draws, const Eigen::VectorXd& col_means,
              const Eigen::VectorXd& col_scales) {
  const long S = draws.size();
  if (S == 0) throw std::invalid_argument("LPS needs at least one kept draw");
  if (holdout.n() == 0) throw std::invalid_argument("LPS needs at least one holdout point");
  if (holdout.p() != draws.p || col_means.size() != draws.p) {
    throw std::invalid_argument("holdout covariates do not match the training columns");
  }
  if (static_cast<long>(draws.beta.size()) != S * draws.p) {
    throw std::invalid_argument("LPS needs stored beta draws");
  }

  Eigen::MatrixXd Xc = holdout.X.rowwise() - col_means.transpose();
  Xc = Xc.array().rowwise() / col_scales.transpose().array();
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      B(draws.beta.data(), S, draws.p);
  // eta(s, i) = alpha_s + beta_s' x_i
  Eigen::MatrixXd eta = B * Xc.transpose();
  for (long s = 0; s < S; ++s) eta.row(s).array() += draws.alpha[s];

  const double log_floor = std::log(kPmfFloor);
  LpsResult out;
  out.log_pred.resize(holdout.n());
  out.floored.resize(holdout.n());
  std::vector<double> per_draw(S);
  double total = 0.0;
  for (int i = 0; i < holdout.n(); ++i) {
    const PointLik pl = PointLik::of(holdout, i);
    for (long s = 0; s < S; ++s) {
      const double raw = log_predictive_pmf_raw(pl, eta(s, i), draws.sigma2[s]);
      per_draw[s] = std::isnan(raw) ? log_floor : std::clamp(raw, log_floor, 0.0);
    }
    const double lp = log_sum_exp(per_draw.data(), per_draw.size()) - std::log(static_cast<double>(S));
    out.log_pred[i] = lp;
    out.floored[i] = lp <= log_floor + 1e-9;
    total += lp;
  }
  out.lps = -total / holdout.n();
  return out;
}

LpsResult lps(const Dataset& holdout, const ChainOutput& fit) {
  return lps(holdout, fit.draws, fit.col_means, fit.col_scales);
}

}  // namespace ullgm
