#include "ullgm/simulation.hpp"

#include "ullgm/likelihoods.hpp"

#include <cmath>

namespace ullgm {

std::string to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::Ullgm: return "ullgm";
    case NoiseKind::GlmNoiseless: return "glm";
    case NoiseKind::LogGamma: return "loggamma";
  }
  return "unknown";
}

NoiseKind parse_noise(const std::string& name) {
  if (name == "ullgm") return NoiseKind::Ullgm;
  if (name == "glm") return NoiseKind::GlmNoiseless;
  if (name == "loggamma") return NoiseKind::LogGamma;
  throw std::invalid_argument("unknown data generating process '" + name +
                              "' (expected ullgm, glm or loggamma)");
}

void SimConfig::validate() const {
  if (n < 2) throw std::invalid_argument("simulation needs n >= 2");
  if (p < 1) throw std::invalid_argument("simulation needs p >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sigma2 must be non-negative");
  if (family.kind == Family::BiL && trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (family.kind == Family::NBL && family.r < 1) throw std::invalid_argument("NBL needs r >= 1");
  if (noise == NoiseKind::LogGamma && !(loggamma_shape > 0.0)) {
    throw std::invalid_argument("log-gamma shape must be positive");
  }
}

double SimConfig::noise_sigma2() const {
  return noise == NoiseKind::Ullgm ? sigma2 : 0.0;
}

Eigen::MatrixXd gen_design(int n, int p, double rho, Rng& rng) {
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  std::normal_distribution<double> normal;
  const double innovation = std::sqrt(1.0 - rho * rho);
  Eigen::MatrixXd X(n, p);
  for (int i = 0; i < n; ++i) {
    double prev = normal(rng);
    X(i, 0) = prev;
    for (int j = 1; j < p; ++j) {
      prev = rho * prev + innovation * normal(rng);
      X(i, j) = prev;
    }
  }
  return X;
}

SimTruth gen_beta_star(int n, int p) {
  if (p < 10) throw std::invalid_argument("the coefficient pattern needs p >= 10");
  static constexpr double kPattern[10] = {2, -3, 2, 2, -3, 3, -2, 3, -2, 3};
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  const double scale = std::log(static_cast<double>(p)) / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < 10; ++j) beta(j) = scale * kPattern[j];
  return truth_from_beta(beta);
}

SimTruth truth_from_beta(const Eigen::VectorXd& beta) {
  SimTruth t{beta, ModelIndicator(static_cast<int>(beta.size()))};
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (beta(j) != 0.0) t.true_model.add(static_cast<int>(j));
  }
  return t;
}

double sample_noise(const SimConfig& config, Rng& rng) {
  switch (config.noise) {
    case NoiseKind::Ullgm: {
      if (config.sigma2 == 0.0) return 0.0;
      std::normal_distribution<double> normal(0.0, std::sqrt(config.sigma2));
      return normal(rng);
    }
    case NoiseKind::GlmNoiseless: return 0.0;
    case NoiseKind::LogGamma: {
      std::gamma_distribution<double> gamma(config.loggamma_shape, 1.0 / config.loggamma_shape);
      return std::log(gamma(rng));
    }
  }
  return 0.0;
}

Dataset gen_outcomes(const Eigen::MatrixXd& X, const SimTruth& truth, const SimConfig& config,
                     Rng& rng) {
  config.validate();
  if (X.cols() != truth.beta_star.size()) {
    throw std::invalid_argument("design and coefficient vector disagree on p");
  }
  const int n = static_cast<int>(X.rows());
  Dataset d;
  d.X = X;
  d.family = config.family;
  d.y.resize(n);
  if (config.family.kind == Family::BiL) d.trials = std::vector<int>(n, config.trials);

  const Eigen::VectorXd eta = (X * truth.beta_star).array() + config.intercept;
  for (int i = 0; i < n; ++i) {
    const double z = eta(i) + sample_noise(config, rng);
    switch (config.family.kind) {
      case Family::PLN: {
        std::poisson_distribution<int> pois(std::exp(z));
        d.y[i] = pois(rng);
        break;
      }
      case Family::BiL: {
        std::binomial_distribution<int> bin(config.trials, logistic(z));
        d.y[i] = bin(rng);
        break;
      }
      case Family::NBL: {
        std::negative_binomial_distribution<int> nb(config.family.r, logistic(z));
        d.y[i] = nb(rng);
        break;
      }
    }
  }
  return d;
}

MetricsReport metrics(const ChainOutput& output, const SimTruth& truth) {
  const int p = static_cast<int>(truth.beta_star.size());
  if (output.pip.size() != p) throw std::invalid_argument("output and truth disagree on p");
  MetricsReport r;
  for (int j = 0; j < p; ++j) {
    const double a = truth.true_model.includes(j) ? 1.0 : 0.0;
    r.brier += (output.pip(j) - a) * (output.pip(j) - a);
  }
  r.brier /= p;

  const int n_true = truth.true_model.size();
  const int n_false = p - n_true;
  const DrawStore& draws = output.draws;
  const long kept = draws.size();
  long at_truth = 0;
  double fnr = 0.0;
  double fpr = 0.0;
  for (long d = 0; d < kept; ++d) {
    int missed = 0;
    int spurious = 0;
    for (int j = 0; j < p; ++j) {
      const bool inc = draws.includes(d, j);
      const bool tru = truth.true_model.includes(j);
      missed += tru && !inc;
      spurious += inc && !tru;
    }
    if (n_true > 0) fnr += static_cast<double>(missed) / n_true;
    if (n_false > 0) fpr += static_cast<double>(spurious) / n_false;
    at_truth += (missed == 0 && spurious == 0);
  }
  if (kept > 0) {
    r.fnr = fnr / kept;
    r.fpr = fpr / kept;
    r.frac_true = static_cast<double>(at_truth) / kept;
  }
  r.model_size = output.mean_model_size;
  r.ln_g = std::log(output.g.mean);
  r.sigma2 = output.sigma2.mean;
  r.seconds = output.seconds;
  return r;
}

MetricsReport average(const std::vector<MetricsReport>& reports) {
  MetricsReport a;
  if (reports.empty()) return a;
  for (const auto& r : reports) {
    a.model_size += r.model_size;
    a.frac_true += r.frac_true;
    a.brier += r.brier;
    a.fnr += r.fnr;
    a.fpr += r.fpr;
    a.ln_g += r.ln_g;
    a.sigma2 += r.sigma2;
    a.seconds += r.seconds;
  }
  const double k = static_cast<double>(reports.size());
  a.model_size /= k;
  a.frac_true /= k;
  a.brier /= k;
  a.fnr /= k;
  a.fpr /= k;
  a.ln_g /= k;
  a.sigma2 /= k;
  a.seconds /= k;
  return a;
}

}  // namespace ullgm
