#include "support.hpp"

#include "ullgm/linear_gaussian.hpp"
#include "ullgm/model_space.hpp"

#include <doctest.h>

#include <map>

using namespace ullgm;
using ullgm::testing::softmax;
using ullgm::testing::total_variation;

TEST_CASE("beta-binomial model prior") {
  const auto params = ModelPriorParams::from_expected_size(2, 1.0);
  CHECK(params.a == 1.0);
  CHECK(params.b == 1.0);
  const double p0 = std::exp(log_model_prior(0, params, true));
  const double p1 = std::exp(log_model_prior(1, params, true));
  const double p2 = std::exp(log_model_prior(2, params, true));
  CHECK(p0 == doctest::Approx(1.0 / 3.0));
  CHECK(p1 == doctest::Approx(1.0 / 6.0));
  CHECK(p2 == doctest::Approx(1.0 / 3.0));
  CHECK(p0 + 2 * p1 + p2 == doctest::Approx(1.0));

  CHECK(log_model_prior(1, params, false) == -std::numeric_limits<double>::infinity());

  // m = p/2 gives a uniform prior on model size: C(p, k) * prior(k) = 1/(p+1)
  const int p = 9;
  const auto half = ModelPriorParams::from_expected_size(p, 4.5);
  CHECK(half.b == 1.0);
  for (int k = 0; k <= p; ++k) {
    const double log_choose = std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0);
    CHECK(std::exp(log_choose + log_model_prior(k, half, true)) == doctest::Approx(1.0 / (p + 1)));
  }

  // prior mean model size equals m
  const auto m3 = ModelPriorParams::from_expected_size(12, 3.0);
  double mean = 0.0;
  for (int k = 0; k <= 12; ++k) {
    const double log_choose = std::lgamma(13.0) - std::lgamma(k + 1.0) - std::lgamma(13.0 - k);
    mean += k * std::exp(log_choose + log_model_prior(k, m3, true));
  }
  CHECK(mean == doctest::Approx(3.0));
  CHECK_THROWS(ModelPriorParams::from_expected_size(5, 5.0));
}

TEST_CASE("ADS correction factors") {
  CHECK(ads_log_correction(Move::Swap, 2, 5) == 0.0);
  CHECK(ads_log_correction(Move::Add, 0, 5) == doctest::Approx(std::log(5.0 / 3.0)));
  CHECK(ads_log_correction(Move::Add, 4, 5) == doctest::Approx(std::log(3.0 / 5.0)));
  // a delete reverses an add
  for (int k = 0; k < 5; ++k) {
    CHECK(ads_log_correction(Move::Add, k, 5) == doctest::Approx(-ads_log_correction(Move::Delete, k + 1, 5)));
  }
  CHECK(move_probability(Move::Add, 0, 5) == 1.0);
  CHECK(move_probability(Move::Swap, 0, 5) == 0.0);
  CHECK(move_probability(Move::Delete, 5, 5) == 1.0);
  CHECK(move_probability(Move::Swap, 2, 5) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ADS proposals change the model by the announced move") {
  Rng rng = make_rng(4);
  ModelIndicator m = ModelIndicator::from_indices(6, {1, 4});
  for (int t = 0; t < 2000; ++t) {
    const auto prop = propose_ads(m, rng);
    const int dk = prop.proposed.size() - m.size();
    switch (prop.move) {
      case Move::Add: CHECK(dk == 1); break;
      case Move::Delete: CHECK(dk == -1); break;
      case Move::Swap: CHECK(dk == 0); CHECK_FALSE(prop.proposed == m); break;
    }
    if (m.size() == 0) CHECK(prop.move == Move::Add);
    if (m.size() == 6) CHECK(prop.move == Move::Delete);
    m = prop.proposed;
  }
}

TEST_CASE("rejected evidence leaves the state unchanged") {
  Rng rng = make_rng(8);
  ModelIndicator m = ModelIndicator::from_indices(4, {2});
  double ev = 0.0;
  const auto params = ModelPriorParams::from_expected_size(4, 2.0);
  for (int t = 0; t < 100; ++t) {
    CHECK_FALSE(model_mh_step(m, ev, [](const ModelIndicator&) { return std::optional<double>(); },
                              params, rng));
  }
  CHECK(m == ModelIndicator::from_indices(4, {2}));
  CHECK(ev == 0.0);
}

TEST_CASE("collinear columns are never visited together") {
  Rng rng = make_rng(1);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(20, 3);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  X.col(1) = X.col(0);
  Eigen::VectorXd z(20);
  for (int i = 0; i < 20; ++i) z(i) = X(i, 0) + normal(rng);
  const auto design = center_design(X);
  const auto params = ModelPriorParams::from_expected_size(3, 1.5);
  ModelIndicator m(3);
  for (int t = 0; t < 5000; ++t) {
    m = model_mh_step(m, z, design, 20.0, params, rng).model;
    CHECK_FALSE((m.includes(0) && m.includes(1)));
  }
}

TEST_CASE("flat-likelihood ADS chain targets the model-size prior") {
  const int p = 8;
  const auto params = ModelPriorParams::from_expected_size(p, 2.0);
  std::vector<double> target(p + 1);
  for (int k = 0; k <= p; ++k) {
    const double log_choose = std::lgamma(p + 1.0) - std::lgamma(k + 1.0) - std::lgamma(p - k + 1.0);
    target[k] = std::exp(log_choose + log_model_prior(k, params, true));
  }
  Rng rng = make_rng(12);
  ModelIndicator m(p);
  double ev = 0.0;
  std::vector<double> freq(p + 1, 0.0);
  const int steps = 300000;
  for (int t = 0; t < steps; ++t) {
    model_mh_step(m, ev, [](const ModelIndicator&) { return std::optional<double>(0.0); }, params, rng);
    freq[m.size()] += 1.0 / steps;
  }
  CHECK(total_variation(freq, target) < 0.02);
}

TEST_CASE("model step matches exhaustive enumeration at fixed z") {
  const int n = 40;
  const int p = 4;
  Rng rng = make_rng(31);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = 0.3 * X(i, 0) + 0.15 * X(i, 2) + normal(rng);
  const auto design = center_design(X);
  const double g = n;
  const auto params = ModelPriorParams::from_expected_size(p, 2.0);

  std::vector<double> logpost(1 << p);
  for (int mask = 0; mask < (1 << p); ++mask) {
    ModelIndicator m(p);
    for (int j = 0; j < p; ++j) if (mask >> j & 1) m.add(j);
    logpost[mask] = log_marginal_given_g(suff_stats(z, m, design), n, g) +
                    log_model_prior(m, params, true);
  }
  const auto exact = softmax(logpost);

  std::vector<double> freq(1 << p, 0.0);
  ModelIndicator m(p);
  const int steps = 200000;
  for (int t = 0; t < steps; ++t) {
    m = model_mh_step(m, z, design, g, params, rng).model;
    int mask = 0;
    for (int j : m.included()) mask |= 1 << j;
    freq[mask] += 1.0 / steps;
  }
  CHECK(total_variation(freq, exact) < 0.02);
}
