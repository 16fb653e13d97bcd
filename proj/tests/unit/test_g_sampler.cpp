#include "support.hpp"

#include "ullgm/g_sampler.hpp"
#include "ullgm/linear_gaussian.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>

#include <doctest.h>

#include <algorithm>

using namespace ullgm;

TEST_CASE("hyper-g/n density") {
  CHECK(std::exp(log_hyper_g_over_n(0.0, 3.0, 100)) == doctest::Approx(0.005));

  for (double a : {2.5, 3.0, 4.0}) {
    boost::math::quadrature::exp_sinh<double> integrator;
    const double total =
        integrator.integrate([&](double g) { return std::exp(log_hyper_g_over_n(g, a, 100)); });
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  }

  double prev = std::exp(log_hyper_g_over_n(0.0, 3.0, 50));
  for (double g = 0.5; g < 1e6; g *= 2.0) {
    const double d = std::exp(log_hyper_g_over_n(g, 3.0, 50));
    CHECK(d < prev);
    prev = d;
  }
}

TEST_CASE("hyper-g/n cdf and quantile are inverse") {
  for (double u : {0.01, 0.25, 0.5, 0.75, 0.99}) {
    CHECK(hyper_g_over_n_cdf(hyper_g_over_n_quantile(u, 3.0, 200), 3.0, 200) == doctest::Approx(u));
  }
  CHECK(hyper_g_over_n_quantile(0.5, 3.0, 100) == doctest::Approx(300.0));
}

TEST_CASE("identical proposal is always accepted") {
  const auto flat = [](double) { return 0.0; };
  CHECK(g_log_acceptance(5.0, 5.0, flat, 3.0, 100) == 0.0);
}

TEST_CASE("flat-likelihood g chain reproduces the prior quartiles") {
  const double a = 3.0;
  const int n = 100;
  const auto flat = [](double) { return 0.0; };
  Rng rng = make_rng(2718);
  GAdaptState adapt;
  double g = hyper_g_over_n_quantile(0.5, a, n);
  for (int t = 0; t < 50000; ++t) g = mh_update_g(g, flat, a, n, adapt, rng).g;
  adapt.freeze();

  const int draws = 1000000;
  std::vector<double> kept(draws);
  long accepted = 0;
  for (auto& v : kept) {
    const auto u = mh_update_g(g, flat, a, n, adapt, rng);
    g = u.g;
    accepted += u.accepted;
    v = g;
  }
  std::sort(kept.begin(), kept.end());
  for (double u : {0.25, 0.5, 0.75}) {
    const double q = kept[static_cast<std::size_t>(u * draws)];
    CAPTURE(u);
    CHECK(q == doctest::Approx(hyper_g_over_n_quantile(u, a, n)).epsilon(0.02));
  }
  CHECK(static_cast<double>(accepted) / draws == doctest::Approx(0.234).epsilon(0.05 / 0.234));
}

TEST_CASE("g update with a likelihood matches the quadrature posterior mean of log g") {
  Rng rng = make_rng(5);
  std::normal_distribution<double> normal;
  const int n = 40;
  Eigen::MatrixXd X(n, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = 0.4 * X(i, 0) + normal(rng);
  const auto s = suff_stats(z, ModelIndicator::from_indices(2, {0}), center_design(X));
  const double a = 3.0;

  // oracle on log g: density ∝ prior(g) lik(g) g
  const auto logpost = [&](double t) {
    const double g = std::exp(t);
    return log_hyper_g_over_n(g, a, n) + log_marginal_given_g(s, n, g) + t;
  };
  double norm = 0.0;
  double first = 0.0;
  const double h = 0.001;
  double peak = -INFINITY;
  for (double t = -20.0; t < 40.0; t += h) peak = std::max(peak, logpost(t));
  for (double t = -20.0; t < 40.0; t += h) {
    const double w = std::exp(logpost(t) - peak);
    norm += w;
    first += w * t;
  }
  const double expected = first / norm;

  GAdaptState adapt;
  double g = n;
  for (int t = 0; t < 20000; ++t) g = mh_update_g(g, s, n, a, adapt, rng).g;
  adapt.freeze();
  double sum = 0.0;
  const int draws = 400000;
  for (int t = 0; t < draws; ++t) {
    g = mh_update_g(g, s, n, a, adapt, rng).g;
    sum += std::log(g);
  }
  CHECK(sum / draws == doctest::Approx(expected).epsilon(0.02));
}
