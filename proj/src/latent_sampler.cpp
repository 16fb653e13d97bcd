#include "ullgm/latent_sampler.hpp"

#include <numeric>

namespace ullgm {

LatentAdaptState::LatentAdaptState(int n, double initial_step, double kappa_)
    : log_step(n, std::log(initial_step)), kappa(kappa_) {
  if (!(kappa > 0.5 && kappa <= 1.0)) throw std::invalid_argument("kappa must lie in (0.5, 1]");
  if (!(initial_step > 0.0)) throw std::invalid_argument("initial step must be positive");
}

int update_all_latents(Eigen::VectorXd& z, const Dataset& data, const Eigen::VectorXd& mean,
                       double sigma2, LatentAdaptState& adapt, std::span<Rng> streams,
                       std::span<const int> order) {
  if (static_cast<int>(streams.size()) < data.n() || static_cast<int>(order.size()) != data.n()) {
    throw std::invalid_argument("need one stream and one visit per observation");
  }
  if (!adapt.frozen) ++adapt.iter;
  const double rate = adapt.rate();
  int accepted = 0;
  for (int i : order) {
    const PointLik pl = PointLik::of(data, i);
    const BarkerResult r =
        barker_update(pl, z(i), mean(i), sigma2, std::exp(adapt.log_step[i]), streams[i]);
    z(i) = r.z;
    accepted += r.accepted;
    if (!adapt.frozen) adapt.log_step[i] += rate * ((r.accepted ? 1.0 : 0.0) - adapt.target_acc);
  }
  return accepted;
}

int update_all_latents(Eigen::VectorXd& z, const Dataset& data, const Eigen::VectorXd& mean,
                       double sigma2, LatentAdaptState& adapt, std::span<Rng> streams) {
  std::vector<int> order(data.n());
  std::iota(order.begin(), order.end(), 0);
  return update_all_latents(z, data, mean, sigma2, adapt, streams, order);
}

std::vector<Rng> make_observation_streams(std::uint64_t seed, int n) {
  std::vector<Rng> streams;
  streams.reserve(n);
  // stream 0 is reserved for the chain's own generator
  for (int i = 0; i < n; ++i) streams.push_back(make_rng(seed, static_cast<std::uint64_t>(i) + 1));
  return streams;
}

}  // namespace ullgm
