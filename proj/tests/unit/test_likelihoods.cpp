#include "support.hpp"

#include "ullgm/likelihoods.hpp"

#include <doctest.h>

using namespace ullgm;

namespace {

double central_difference(const PointLik& pl, double z, double h = 1e-5) {
  return (log_pmf(pl, z + h) - log_pmf(pl, z - h)) / (2.0 * h);
}

}  // namespace

TEST_CASE("log pmf values") {
  CHECK(log_pmf({FamilyTag::pln(), 0, 0}, 0.0) == doctest::Approx(-1.0));
  CHECK(log_pmf({FamilyTag::bil(), 1, 2}, 0.0) == doctest::Approx(std::log(0.5)));
  CHECK(log_pmf({FamilyTag::nbl(1), 0, 0}, 0.0) == doctest::Approx(std::log(0.5)));
  CHECK(log_pmf({FamilyTag::bil(), 3, 2}, 0.0) == -std::numeric_limits<double>::infinity());
  // Poisson(2) at 3
  CHECK(log_pmf({FamilyTag::pln(), 3, 0}, std::log(2.0)) ==
        doctest::Approx(3 * std::log(2.0) - 2.0 - std::log(6.0)));
}

TEST_CASE("pmfs sum to one over the support") {
  for (double z : {-2.0, 0.3, 1.7}) {
    double pln = 0.0;
    double nbl = 0.0;
    for (int y = 0; y < 400; ++y) {
      pln += std::exp(log_pmf({FamilyTag::pln(), y, 0}, z));
      nbl += std::exp(log_pmf({FamilyTag::nbl(3), y, 0}, z));
    }
    double bil = 0.0;
    for (int y = 0; y <= 17; ++y) bil += std::exp(log_pmf({FamilyTag::bil(), y, 17}, z));
    CHECK(pln == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nbl == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bil == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("gradient special points") {
  CHECK(grad_log_pmf({FamilyTag::pln(), 2, 0}, std::log(2.0)) == doctest::Approx(0.0));
  CHECK(grad_log_pmf({FamilyTag::bil(), 3, 6}, 0.0) == doctest::Approx(0.0));
  const PointLik pl{FamilyTag::pln(), 0, 0};
  CHECK(grad_log_pmf(pl, 1.0) == doctest::Approx(-std::exp(1.0)));
  CHECK(std::abs(central_difference(pl, 1.0) + std::exp(1.0)) < 1e-7);
}

TEST_CASE("gradients agree with central finite differences") {
  Rng rng = make_rng(2024);
  std::uniform_real_distribution<double> zdist(-5.0, 5.0);
  std::uniform_int_distribution<int> ydist(0, 25);
  for (const auto family : {FamilyTag::pln(), FamilyTag::bil(), FamilyTag::nbl(4)}) {
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const int trials = 25;
      const PointLik pl{family, ydist(rng), trials};
      const double z = zdist(rng);
      const double g = grad_log_pmf(pl, z);
      worst = std::max(worst, std::abs(central_difference(pl, z) - g) / std::max(1.0, std::abs(g)));
    }
    CAPTURE(family.name());
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("softplus and logistic are stable in the tails") {
  CHECK(softplus(800.0) == doctest::Approx(800.0));
  CHECK(softplus(-800.0) >= 0.0);
  CHECK(std::isfinite(softplus(-800.0)));
  CHECK(logistic(-800.0) == 0.0);
  CHECK(logistic(800.0) == 1.0);
  CHECK(softplus(0.0) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("Poisson log-normal moments") {
  const auto m0 = pln_moments(0.0, 0.0);
  CHECK(m0.mean == doctest::Approx(1.0));
  CHECK(m0.variance == doctest::Approx(1.0));
  CHECK(m0.dispersion == doctest::Approx(1.0));

  const auto m = pln_moments(0.0, 0.2);
  CHECK(m.mean == doctest::Approx(1.10517).epsilon(1e-5));
  CHECK(m.dispersion == doctest::Approx(1.244689).epsilon(1e-6));

  double prev = 0.0;
  for (double s2 = 0.0; s2 <= 3.0; s2 += 0.25) {
    const double d = pln_moments(0.4, s2).dispersion;
    CHECK(d > prev);
    prev = d;
  }

  const std::vector<double> beta{0.5, -1.0};
  const std::vector<double> x{2.0, 0.5};
  CHECK(pln_moments(0.1, beta, x, 0.3).mean == doctest::Approx(pln_moments(0.6, 0.3).mean));

  // simulation cross-check of the closed forms
  Rng rng = make_rng(77);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.2));
  const int draws = 1000000;
  std::vector<double> y(draws);
  for (auto& v : y) {
    std::poisson_distribution<int> pois(std::exp(normal(rng)));
    v = pois(rng);
  }
  const auto emp = ullgm::testing::sample_moments(y);
  CHECK(emp.mean == doctest::Approx(m.mean).epsilon(0.005));
  CHECK(emp.var / emp.mean == doctest::Approx(m.dispersion).epsilon(0.01));
}

TEST_CASE("binomial logit-normal mean approximation") {
  CHECK(bil_mean_approx(0.0, 0.7, 30) == doctest::Approx(15.0));
  CHECK(bil_mean_approx(1.0, 0.0, 30) == doctest::Approx(30.0 * logistic(1.0)).epsilon(0.01));

  // Monte Carlo oracle: E[N logistic(eta + e)], e ~ N(0, 1)
  Rng rng = make_rng(9);
  std::normal_distribution<double> normal;
  const int draws = 10000000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) sum += logistic(1.0 + normal(rng));
  const double mc = 30.0 * sum / draws;
  CHECK(bil_mean_approx(1.0, 1.0, 30) == doctest::Approx(mc).epsilon(0.02));
}
