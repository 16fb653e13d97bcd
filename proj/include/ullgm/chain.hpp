#pragma once

#include "ullgm/core.hpp"
#include "ullgm/g_sampler.hpp"
#include "ullgm/latent_sampler.hpp"
#include "ullgm/linear_gaussian.hpp"
#include "ullgm/model_space.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ullgm {

struct ChainConfig {
  /// Total iterations, burn-in included.
  long n_iter = 20000;
  /// Negative means n_iter / 2.
  long burn_in = -1;
  int thin = 1;
  std::uint64_t seed = 1;
  bool store_z = false;
  bool store_beta = true;
  Standardization standardize = Standardization::Center;
  double kappa = 0.6;
  double initial_step = 1.0;
  /// Holds sigma2 fixed at this value instead of sampling it. The model
  /// step then uses the fixed-sigma2 marginal of z, and an extra joint
  /// shift of (alpha, z) keeps the intercept mixing.
  std::optional<double> pinned_sigma2;

  long resolved_burn_in() const { return burn_in < 0 ? n_iter / 2 : burn_in; }
  void validate() const;
};

/// Kept draws. Model indicators are bit-packed; beta and z rows are only
/// filled when the corresponding ChainConfig flag is set.
struct DrawStore {
  int p = 0;
  int n = 0;
  int words_per_draw = 0;
  std::vector<std::uint64_t> model_words;
  std::vector<int> model_size;
  std::vector<double> alpha;
  std::vector<double> sigma2;
  std::vector<double> g;
  std::vector<double> beta;  // kept x p, row-major
  std::vector<double> z;     // kept x n, row-major
  Eigen::VectorXd beta_sum;
  Eigen::VectorXd beta_sumsq;

  DrawStore() = default;
  DrawStore(int p, int n);

  long size() const { return static_cast<long>(alpha.size()); }
  bool has_beta() const { return !beta.empty() || (size() == 0 && p == 0); }
  bool includes(long draw, int j) const {
    return (model_words[draw * words_per_draw + j / 64] >> (j % 64)) & 1u;
  }
  ModelIndicator model(long draw) const;
  std::string model_bits(long draw) const;
  Eigen::Map<const Eigen::VectorXd> beta_row(long draw) const {
    return {beta.data() + draw * p, p};
  }

  void push(const ModelIndicator& m, const GaussianLayerState& s, bool store_beta, bool store_z);
  void append(const DrawStore& other);
};

struct ScalarSummary {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q50 = 0.0;
  double q975 = 0.0;
};

ScalarSummary summarize_scalar(std::vector<double> values);

struct TopModel {
  std::string bits;
  int size = 0;
  long count = 0;
  double frequency = 0.0;
};

struct AcceptanceRates {
  double model = 0.0;
  double latent = 0.0;
  double g = 0.0;
};

struct ChainOutput {
  Eigen::VectorXd pip;
  Eigen::VectorXd beta_mean;  // excluded draws count as zero
  Eigen::VectorXd beta_sd;
  ScalarSummary alpha;
  ScalarSummary sigma2;
  ScalarSummary g;
  double mean_model_size = 0.0;
  std::vector<long> model_size_hist;  // index = model size
  std::vector<TopModel> top_models;   // most visited first
  AcceptanceRates acceptance;
  long n_kept = 0;
  double seconds = 0.0;
  DrawStore draws;

  // training-time covariate transform, needed for prediction
  Eigen::VectorXd col_means;
  Eigen::VectorXd col_scales;
  Standardization standardize = Standardization::Center;
};

/// Posterior summaries from kept draws.
ChainOutput summarize(DrawStore draws);

/// Initial latent value for observation i: empirical log / logit transforms.
double initial_latent(const PointLik& pl);

/// Initial g: g0 for fixed priors, n for UIP, the prior median for hyper-g/n.
double initial_g(const GPrior& gprior, int n);

/// The partially collapsed Gibbs sampler. Each iteration runs, in order:
/// model MH step given z and g, the g step (hyper-g/n only), sigma2, alpha,
/// beta_k, and the latent sweep. The blocks are exposed separately so
/// callers can run any subset.
class Sampler {
 public:
  Sampler(const Dataset& data, const PriorConfig& prior, const ChainConfig& config);

  void step_model();
  void step_g();
  void step_theta();
  void step_latents();
  void step_intercept_shift();

  /// One full iteration in the fixed order.
  void iterate();

  /// Freezes all adaptation (done automatically at the end of burn-in by run()).
  void freeze_adaptation();

  /// Runs the configured number of iterations and summarizes.
  ChainOutput run();

  const GaussianLayerState& state() const { return state_; }
  const ModelIndicator& model() const { return model_; }
  const CenteredDesign& design() const { return design_; }
  const LatentAdaptState& latent_adaptation() const { return latent_adapt_; }
  const GAdaptState& g_adaptation() const { return g_adapt_; }
  const ModelPriorParams& model_prior() const { return model_prior_; }

  /// Replaces the latent vector (and refreshes the cached statistics).
  void set_latents(const Eigen::VectorXd& z);
  void set_model(const ModelIndicator& m);
  void set_g(double g) { state_.g = g; }

  long model_accepts() const { return model_accepts_; }
  long model_steps() const { return model_steps_; }

 private:
  double log_evidence(const ModelSuffStats& s) const;
  void refresh_moments();
  void check_finite() const;

  const Dataset& data_;
  PriorConfig prior_;
  ChainConfig config_;
  CenteredDesign design_;
  ModelPriorParams model_prior_;
  Rng rng_;
  std::vector<Rng> streams_;
  GaussianLayerState state_;
  ModelIndicator model_;
  LatentMoments moments_;
  std::optional<ModelSuffStats> stats_;
  Eigen::VectorXd linear_predictor_;
  LatentAdaptState latent_adapt_;
  GAdaptState g_adapt_;
  double shift_log_sd_ = std::log(0.1);
  long shift_iter_ = 0;
  bool moments_fresh_ = false;

  long model_steps_ = 0;
  long model_accepts_ = 0;
  long latent_steps_ = 0;
  long latent_accepts_ = 0;
  long g_steps_ = 0;
  long g_accepts_ = 0;
};

ChainOutput run_chain(const Dataset& data, const PriorConfig& prior, const ChainConfig& config);

/// Runs `chains` chains with seeds seed + c on up to `threads` threads and
/// merges their draws into one summary.
ChainOutput run_chains(const Dataset& data, const PriorConfig& prior, const ChainConfig& config,
                       int chains, int threads);

/// Worker count from ULLGM_THREADS (default 1).
int thread_cap_from_env();

}  // namespace ullgm
