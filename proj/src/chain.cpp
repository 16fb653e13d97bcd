#include "ullgm/chain.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <future>
#include <thread>
#include <unordered_map>

namespace ullgm {

void ChainConfig::validate() const {
  if (n_iter < 1) throw std::invalid_argument("n_iter must be positive");
  if (resolved_burn_in() >= n_iter) throw std::invalid_argument("burn-in must be below n_iter");
  if (thin < 1) throw std::invalid_argument("thin must be at least 1");
  if (pinned_sigma2 && !(*pinned_sigma2 > 0.0)) {
    throw std::invalid_argument("pinned sigma2 must be positive");
  }
}

DrawStore::DrawStore(int p_, int n_)
    : p(p_), n(n_), words_per_draw((p_ + 63) / 64),
      beta_sum(Eigen::VectorXd::Zero(p_)), beta_sumsq(Eigen::VectorXd::Zero(p_)) {}

ModelIndicator DrawStore::model(long draw) const {
  ModelIndicator m(p);
  for (int j = 0; j < p; ++j) {
    if (includes(draw, j)) m.add(j);
  }
  return m;
}

std::string DrawStore::model_bits(long draw) const {
  std::string s(p, '0');
  for (int j = 0; j < p; ++j) {
    if (includes(draw, j)) s[j] = '1';
  }
  return s;
}

void DrawStore::push(const ModelIndicator& m, const GaussianLayerState& s, bool store_beta,
                     bool store_z) {
  const std::size_t base = model_words.size();
  model_words.resize(base + words_per_draw, 0);
  for (int j : m.included()) model_words[base + j / 64] |= std::uint64_t{1} << (j % 64);
  model_size.push_back(m.size());
  alpha.push_back(s.alpha);
  sigma2.push_back(s.sigma2);
  g.push_back(s.g);
  if (store_beta) beta.insert(beta.end(), s.beta.data(), s.beta.data() + p);
  if (store_z) z.insert(z.end(), s.z.data(), s.z.data() + s.z.size());
  beta_sum += s.beta;
  beta_sumsq += s.beta.cwiseAbs2();
}

void DrawStore::append(const DrawStore& other) {
  if (other.p != p) throw std::invalid_argument("cannot merge draws over different designs");
  const auto cat = [](auto& dst, const auto& src) { dst.insert(dst.end(), src.begin(), src.end()); };
  cat(model_words, other.model_words);
  cat(model_size, other.model_size);
  cat(alpha, other.alpha);
  cat(sigma2, other.sigma2);
  cat(g, other.g);
  cat(beta, other.beta);
  cat(z, other.z);
  beta_sum += other.beta_sum;
  beta_sumsq += other.beta_sumsq;
}

ScalarSummary summarize_scalar(std::vector<double> values) {
  ScalarSummary s;
  if (values.empty()) return s;
  const double k = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / k;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
  std::sort(values.begin(), values.end());
  const auto quantile = [&](double q) {
    const double pos = q * (k - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double h = pos - static_cast<double>(lo);
    return (1.0 - h) * values[lo] + h * values[hi];
  };
  s.q025 = quantile(0.025);
  s.q50 = quantile(0.5);
  s.q975 = quantile(0.975);
  return s;
}

ChainOutput summarize(DrawStore draws) {
  if (draws.size() == 0) throw std::invalid_argument("summarize needs at least one kept draw");
  ChainOutput out;
  const int p = draws.p;
  const long kept = draws.size();
  const double k = static_cast<double>(kept);
  out.n_kept = kept;

  out.pip = Eigen::VectorXd::Zero(p);
  out.model_size_hist.assign(p + 1, 0);
  std::unordered_map<std::string, long> visits;
  double size_sum = 0.0;
  for (long d = 0; d < kept; ++d) {
    for (int j = 0; j < p; ++j) {
      if (draws.includes(d, j)) out.pip(j) += 1.0;
    }
    ++out.model_size_hist[draws.model_size[d]];
    size_sum += draws.model_size[d];
    ++visits[draws.model_bits(d)];
  }
  out.pip /= k;
  out.mean_model_size = size_sum / k;

  out.beta_mean = draws.beta_sum / k;
  out.beta_sd = Eigen::VectorXd::Zero(p);
  if (kept > 1) {
    for (int j = 0; j < p; ++j) {
      const double var = (draws.beta_sumsq(j) - k * out.beta_mean(j) * out.beta_mean(j)) / (k - 1.0);
      out.beta_sd(j) = std::sqrt(std::max(var, 0.0));
    }
  }

  out.alpha = summarize_scalar(draws.alpha);
  out.sigma2 = summarize_scalar(draws.sigma2);
  out.g = summarize_scalar(draws.g);

  out.top_models.reserve(visits.size());
  for (const auto& [bits, count] : visits) {
    const int size = static_cast<int>(std::count(bits.begin(), bits.end(), '1'));
    out.top_models.push_back({bits, size, count, static_cast<double>(count) / k});
  }
  std::sort(out.top_models.begin(), out.top_models.end(), [](const TopModel& a, const TopModel& b) {
    return a.count != b.count ? a.count > b.count : a.bits < b.bits;
  });
  out.draws = std::move(draws);
  return out;
}

double initial_latent(const PointLik& pl) {
  switch (pl.family.kind) {
    case Family::PLN: return std::log(pl.y + 0.5);
    case Family::BiL: return std::log((pl.y + 0.5) / (pl.trials - pl.y + 0.5));
    case Family::NBL: return std::log(static_cast<double>(pl.family.r)) - std::log(pl.y + 0.5);
  }
  return 0.0;
}

double initial_g(const GPrior& gprior, int n) {
  switch (gprior.kind) {
    case GPrior::Kind::UnitInformation: return static_cast<double>(n);
    case GPrior::Kind::Fixed: return gprior.value;
    case GPrior::Kind::HyperGOverN: return hyper_g_over_n_quantile(0.5, gprior.value, n);
  }
  return static_cast<double>(n);
}

Sampler::Sampler(const Dataset& data, const PriorConfig& prior, const ChainConfig& config)
    : data_(data), prior_(prior), config_(config) {
  config_.validate();
  require_valid(data_);
  validate_prior(prior_, data_.p());

  const int n = data_.n();
  const int p = data_.p();
  design_ = standardize_design(data_.X, config_.standardize);
  model_prior_ = ModelPriorParams::from_expected_size(p, prior_.resolved_model_size(p));
  rng_ = make_rng(config_.seed, 0);
  streams_ = make_observation_streams(config_.seed, n);

  state_.z.resize(n);
  for (int i = 0; i < n; ++i) state_.z(i) = initial_latent(PointLik::of(data_, i));
  state_.alpha = state_.z.mean();
  state_.beta = Eigen::VectorXd::Zero(p);
  state_.sigma2 = config_.pinned_sigma2.value_or(1.0);
  state_.g = initial_g(prior_.gprior, n);
  model_ = ModelIndicator(p);
  linear_predictor_ = Eigen::VectorXd::Constant(n, state_.alpha);

  latent_adapt_ = LatentAdaptState(n, config_.initial_step, config_.kappa);
  g_adapt_.kappa = config_.kappa;
}

double Sampler::log_evidence(const ModelSuffStats& s) const {
  if (config_.pinned_sigma2) return log_marginal_fixed_sigma2(s, state_.g, state_.sigma2);
  return log_marginal_given_g(s, data_.n(), state_.g);
}

void Sampler::refresh_moments() {
  moments_ = latent_moments(state_.z, design_);
  stats_ = suff_stats(moments_, design_, model_);
  if (!stats_) throw std::logic_error("current model failed the rank check");
  moments_fresh_ = true;
}

void Sampler::set_latents(const Eigen::VectorXd& z) {
  if (z.size() != state_.z.size()) throw std::invalid_argument("latent vector has wrong length");
  state_.z = z;
  moments_fresh_ = false;
}

void Sampler::set_model(const ModelIndicator& m) {
  if (m.p() != data_.p()) throw std::invalid_argument("model has wrong number of covariates");
  if (!rank_ok(m, design_, data_.n())) throw std::invalid_argument("model is rank deficient");
  model_ = m;
  moments_fresh_ = false;
}

void Sampler::step_model() {
  if (!moments_fresh_) refresh_moments();
  std::optional<ModelSuffStats> proposed;
  const auto evidence = [&](const ModelIndicator& m) -> std::optional<double> {
    proposed = suff_stats(moments_, design_, m);
    if (!proposed) return std::nullopt;
    return log_evidence(*proposed);
  };
  double current = log_evidence(*stats_);
  ++model_steps_;
  if (model_mh_step(model_, current, evidence, model_prior_, rng_)) {
    stats_ = std::move(proposed);
    ++model_accepts_;
  }
}

void Sampler::step_g() {
  if (!prior_.gprior.random()) return;
  if (!moments_fresh_) refresh_moments();
  const ModelSuffStats& s = *stats_;
  const int n = data_.n();
  GUpdate u;
  if (config_.pinned_sigma2) {
    const double sigma2 = state_.sigma2;
    u = mh_update_g(
        state_.g, [&](double g) { return log_marginal_fixed_sigma2(s, g, sigma2); },
        prior_.gprior.value, n, g_adapt_, rng_);
  } else {
    u = mh_update_g(state_.g, s, n, prior_.gprior.value, g_adapt_, rng_);
  }
  state_.g = u.g;
  ++g_steps_;
  g_accepts_ += u.accepted;
}

void Sampler::step_theta() {
  if (!moments_fresh_) refresh_moments();
  const ModelSuffStats& s = *stats_;
  const int n = data_.n();
  if (!config_.pinned_sigma2) state_.sigma2 = sample_sigma2(s, state_.g, n, rng_);
  state_.alpha = sample_alpha(s.zbar, state_.sigma2, n, rng_);
  const Eigen::VectorXd beta_k = sample_beta(s, state_.sigma2, state_.g, rng_);

  state_.beta.setZero();
  linear_predictor_.setConstant(state_.alpha);
  const auto& idx = model_.included();
  for (int a = 0; a < s.p_k; ++a) {
    state_.beta(idx[a]) = beta_k(a);
    linear_predictor_.noalias() += beta_k(a) * design_.Xc.col(idx[a]);
  }
}

void Sampler::step_latents() {
  const int accepted = update_all_latents(state_.z, data_, linear_predictor_, state_.sigma2,
                                          latent_adapt_, streams_);
  latent_steps_ += data_.n();
  latent_accepts_ += accepted;
  moments_fresh_ = false;
}

void Sampler::step_intercept_shift() {
  std::normal_distribution<double> normal(0.0, std::exp(shift_log_sd_));
  std::uniform_real_distribution<double> unif;
  const double c = normal(rng_);
  double log_ratio = 0.0;
  for (int i = 0; i < data_.n(); ++i) {
    const PointLik pl = PointLik::of(data_, i);
    log_ratio += log_kernel(pl, state_.z(i) + c) - log_kernel(pl, state_.z(i));
  }
  const bool accept =
      std::isfinite(log_ratio) && (log_ratio >= 0.0 || std::log(unif(rng_)) < log_ratio);
  if (accept) {
    state_.z.array() += c;
    state_.alpha += c;
    linear_predictor_.array() += c;
    moments_fresh_ = false;
  }
  if (!latent_adapt_.frozen) {
    ++shift_iter_;
    shift_log_sd_ += std::pow(static_cast<double>(shift_iter_), -config_.kappa) *
                     ((accept ? 1.0 : 0.0) - 0.44);
  }
}

void Sampler::iterate() {
  step_model();
  step_g();
  step_theta();
  step_latents();
  if (config_.pinned_sigma2) step_intercept_shift();
  check_finite();
}

void Sampler::check_finite() const {
  if (!std::isfinite(state_.alpha) || !std::isfinite(state_.sigma2) || !(state_.sigma2 > 0.0) ||
      !std::isfinite(state_.g) || !(state_.g > 0.0) || !state_.z.allFinite() ||
      !state_.beta.allFinite()) {
    throw NumericalFailure("non-finite chain state (alpha=" + std::to_string(state_.alpha) +
                           ", sigma2=" + std::to_string(state_.sigma2) +
                           ", g=" + std::to_string(state_.g) + ")");
  }
}

void Sampler::freeze_adaptation() {
  latent_adapt_.freeze();
  g_adapt_.freeze();
  model_steps_ = model_accepts_ = 0;
  latent_steps_ = latent_accepts_ = 0;
  g_steps_ = g_accepts_ = 0;
}

ChainOutput Sampler::run() {
  const auto start = std::chrono::steady_clock::now();
  const long burn = config_.resolved_burn_in();
  DrawStore draws(data_.p(), data_.n());
  for (long t = 1; t <= config_.n_iter; ++t) {
    if (t == burn + 1) freeze_adaptation();
    iterate();
    if (t > burn && (t - burn) % config_.thin == 0) {
      draws.push(model_, state_, config_.store_beta, config_.store_z);
    }
  }
  ChainOutput out = summarize(std::move(draws));
  out.acceptance.model = model_steps_ ? static_cast<double>(model_accepts_) / model_steps_ : 0.0;
  out.acceptance.latent =
      latent_steps_ ? static_cast<double>(latent_accepts_) / latent_steps_ : 0.0;
  out.acceptance.g = g_steps_ ? static_cast<double>(g_accepts_) / g_steps_ : 0.0;
  out.col_means = design_.col_means;
  out.col_scales = design_.col_scales;
  out.standardize = design_.mode;
  out.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ChainOutput run_chain(const Dataset& data, const PriorConfig& prior, const ChainConfig& config) {
  Sampler sampler(data, prior, config);
  return sampler.run();
}

ChainOutput run_chains(const Dataset& data, const PriorConfig& prior, const ChainConfig& config,
                       int chains, int threads) {
  if (chains < 1) throw std::invalid_argument("need at least one chain");
  if (chains == 1) return run_chain(data, prior, config);
  const auto start = std::chrono::steady_clock::now();

  std::vector<ChainOutput> outputs(chains);
  const int workers = std::max(1, std::min(threads, chains));
  for (int first = 0; first < chains; first += workers) {
    std::vector<std::future<ChainOutput>> batch;
    for (int c = first; c < std::min(chains, first + workers); ++c) {
      ChainConfig cc = config;
      cc.seed = config.seed + static_cast<std::uint64_t>(c);
      batch.push_back(std::async(workers > 1 ? std::launch::async : std::launch::deferred,
                                 [&data, &prior, cc] { return run_chain(data, prior, cc); }));
    }
    for (std::size_t b = 0; b < batch.size(); ++b) outputs[first + b] = batch[b].get();
  }

  DrawStore merged = std::move(outputs[0].draws);
  for (int c = 1; c < chains; ++c) merged.append(outputs[c].draws);
  ChainOutput out = summarize(std::move(merged));
  for (const auto& o : outputs) {
    out.acceptance.model += o.acceptance.model / chains;
    out.acceptance.latent += o.acceptance.latent / chains;
    out.acceptance.g += o.acceptance.g / chains;
  }
  out.col_means = outputs[0].col_means;
  out.col_scales = outputs[0].col_scales;
  out.standardize = outputs[0].standardize;
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

int thread_cap_from_env() {
  if (const char* v = std::getenv("ULLGM_THREADS")) {
    const int t = std::atoi(v);
    if (t >= 1) return t;
  }
  return 1;
}

}  // namespace ullgm
