#include "support.hpp"

#include "ullgm/linear_gaussian.hpp"

#include <doctest.h>

using namespace ullgm;
using ullgm::testing::sample_moments;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

/// R^2 of z on [1, X_k] from the dense normal equations.
double brute_r2(const Eigen::MatrixXd& Xk, const Eigen::VectorXd& z) {
  const Eigen::Index n = Xk.rows();
  Eigen::MatrixXd A(n, Xk.cols() + 1);
  A.col(0).setOnes();
  A.rightCols(Xk.cols()) = Xk;
  const Eigen::VectorXd coef = (A.transpose() * A).ldlt().solve(A.transpose() * z);
  const double rss = (z - A * coef).squaredNorm();
  const double tss = (z.array() - z.mean()).square().sum();
  return 1.0 - rss / tss;
}

struct Problem {
  CenteredDesign design;
  Eigen::VectorXd z;
};

Problem random_problem(int n, int p, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
  Eigen::VectorXd z(n);
  for (int i = 0; i < n; ++i) z(i) = 0.5 + 0.8 * X(i, 0) - 0.4 * X(i, 1) + normal(rng);
  return {center_design(X), z};
}

}  // namespace

TEST_CASE("r2 edge cases") {
  Eigen::MatrixXd X(4, 1);
  X << 1, 2, 3, 4;
  const auto design = center_design(X);

  const auto null = suff_stats(vec({0.3, 1.0, -2.0, 0.5}), ModelIndicator(1), design);
  CHECK(null.r2 == 0.0);

  const Eigen::VectorXd perfect = (2.0 + 3.0 * X.col(0).array()).matrix();
  const auto fit = suff_stats(perfect, ModelIndicator::from_indices(1, {0}), design);
  CHECK(fit.r2 == kMaxR2);

  const Eigen::VectorXd z = vec({1, 2, 4, 8});
  const auto s = suff_stats(z, ModelIndicator::from_indices(1, {0}), design);
  CHECK(s.r2 == doctest::Approx(brute_r2(X, z)).epsilon(1e-12));
  CHECK(s.tss == doctest::Approx(28.75));
}

TEST_CASE("r2 agrees with normal equations on random designs") {
  const auto pr = random_problem(40, 5, 11);
  for (const auto& idx : std::vector<std::vector<int>>{{0}, {1, 3}, {0, 1, 2, 4}, {0, 1, 2, 3, 4}}) {
    const auto model = ModelIndicator::from_indices(5, idx);
    Eigen::MatrixXd Xk(40, static_cast<Eigen::Index>(idx.size()));
    for (std::size_t a = 0; a < idx.size(); ++a) Xk.col(a) = pr.design.Xc.col(idx[a]);
    const auto s = suff_stats(pr.z, model, pr.design);
    CHECK(s.r2 == doctest::Approx(brute_r2(Xk, pr.z)).epsilon(1e-10));
  }
}

TEST_CASE("degenerate latent vector") {
  Eigen::MatrixXd X(3, 1);
  X << 1, 2, 3;
  CHECK_THROWS_AS(suff_stats(vec({1, 1, 1}), ModelIndicator(1), center_design(X)), DegenerateZ);
}

TEST_CASE("marginal likelihood given g") {
  Eigen::MatrixXd X(4, 1);
  X << 1, -1, -1, 1;  // orthogonal to z below after centering
  const auto design = center_design(X);
  const Eigen::VectorXd z = vec({0, 1, 2, 3});
  const auto null = suff_stats(z, ModelIndicator(1), design);
  CHECK(log_marginal_given_g(null, 4, 4.0) == doctest::Approx(-1.5 * std::log(5.0)));

  const auto one = suff_stats(z, ModelIndicator::from_indices(1, {0}), design);
  CHECK(one.r2 == doctest::Approx(0.0));
  for (double g : {0.5, 4.0, 100.0}) {
    const double bf = log_marginal_given_g(one, 4, g) - log_marginal_given_g(null, 4, g);
    CHECK(bf == doctest::Approx(-0.5 * std::log1p(g)));
  }
  CHECK(log_marginal_given_g(one, 4, 3.0) - log_marginal_given_g(one, 4, 3.0) == 0.0);
}

TEST_CASE("marginal likelihood matches direct Gaussian integration") {
  // Oracle: integrate alpha, beta and sigma2 analytically in a different
  // parametrization. z | sigma2 ~ N(alpha 1, sigma2 (I + g Xk (Xk'Xk)^-1 Xk'))
  // with flat alpha and p(sigma2) ∝ 1/sigma2 gives, up to model-free
  // constants, |I + g P|^{-1/2} (z' M z)^{-(n-1)/2} for the centered
  // quadratic form with M = (I + gP)^{-1} restricted to centered vectors.
  const auto pr = random_problem(15, 3, 5);
  const int n = 15;
  const double g = 7.0;
  std::vector<double> ours;
  std::vector<double> oracle;
  for (const auto& idx : std::vector<std::vector<int>>{{}, {0}, {1}, {0, 1}, {0, 1, 2}}) {
    const auto model = ModelIndicator::from_indices(3, idx);
    ours.push_back(log_marginal_given_g(suff_stats(pr.z, model, pr.design), n, g));
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    if (!idx.empty()) {
      Eigen::MatrixXd Xk(n, static_cast<Eigen::Index>(idx.size()));
      for (std::size_t a = 0; a < idx.size(); ++a) Xk.col(a) = pr.design.Xc.col(idx[a]);
      P = Xk * (Xk.transpose() * Xk).inverse() * Xk.transpose();
    }
    const Eigen::MatrixXd S = Eigen::MatrixXd::Identity(n, n) + g * P;
    const Eigen::VectorXd zc = (pr.z.array() - pr.z.mean()).matrix();
    const double quad = zc.dot(S.ldlt().solve(zc));
    oracle.push_back(-0.5 * std::log(S.determinant()) - 0.5 * (n - 1) * std::log(quad));
  }
  for (std::size_t k = 1; k < ours.size(); ++k) {
    CHECK(ours[k] - ours[0] == doctest::Approx(oracle[k] - oracle[0]).epsilon(1e-10));
  }
}

TEST_CASE("sigma2 full conditional") {
  const auto pr = random_problem(30, 3, 2);
  const auto s = suff_stats(pr.z, ModelIndicator::from_indices(3, {0, 1}), pr.design);
  const double g = 30.0;
  const int n = 30;
  const double shape = 0.5 * (n - 1);
  const double rate = sigma2_posterior_rate(s, g);

  Rng rng = make_rng(99);
  const int draws = 100000;
  std::vector<double> prec(draws);
  for (auto& v : prec) v = 1.0 / sample_sigma2(s, g, n, rng);
  const auto m = sample_moments(prec);
  const double se = std::sqrt(shape) / rate / std::sqrt(draws);
  CHECK(std::abs(m.mean - shape / rate) < 3.0 * se);

  CHECK(sigma2_posterior_rate(s, 1e12) == doctest::Approx(0.5 * s.tss * (1.0 - s.r2)));
  const auto null = suff_stats(pr.z, ModelIndicator(3), pr.design);
  for (double gg : {0.1, 1.0, 1e6}) CHECK(sigma2_posterior_rate(null, gg) == doctest::Approx(0.5 * null.tss));
}

TEST_CASE("alpha full conditional") {
  Rng rng = make_rng(5);
  const int draws = 100000;
  const int n = 50;
  const double sigma2 = 2.0;
  std::vector<double> a(draws);
  for (auto& v : a) v = sample_alpha(1.3, sigma2, n, rng);
  const auto m = sample_moments(a);
  const double var = sigma2 / n;
  CHECK(std::abs(m.mean - 1.3) < 3.0 * std::sqrt(var / draws));
  CHECK(std::abs(m.var - var) < 3.0 * var * std::sqrt(2.0 / (draws - 1)));

  CHECK(sample_alpha(0.7, 1e-30, n, rng) == doctest::Approx(0.7));
  std::vector<double> std_normal(draws);
  for (auto& v : std_normal) v = sample_alpha(0.0, n, n, rng);
  CHECK(sample_moments(std_normal).var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("beta full conditional") {
  const auto pr = random_problem(25, 2, 8);
  const auto model = ModelIndicator::from_indices(2, {0, 1});
  const auto s = suff_stats(pr.z, model, pr.design);
  const double g = 5.0;
  const double sigma2 = 0.7;
  const double delta = g / (1 + g);

  const Eigen::MatrixXd& X = pr.design.Xc;
  const Eigen::MatrixXd XtX = X.transpose() * X;
  const Eigen::Vector2d mean = delta * XtX.inverse() * (X.transpose() * pr.z);
  const Eigen::Matrix2d cov = delta * sigma2 * XtX.inverse();
  CHECK((beta_posterior_mean(s, g) - mean).cwiseAbs().maxCoeff() < 1e-10);

  Rng rng = make_rng(17);
  const int draws = 100000;
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  Eigen::Matrix2d outer = Eigen::Matrix2d::Zero();
  for (int k = 0; k < draws; ++k) {
    const Eigen::VectorXd b = sample_beta(s, sigma2, g, rng);
    sum += b;
    outer += b * b.transpose();
  }
  const Eigen::Vector2d emp_mean = sum / draws;
  const Eigen::Matrix2d emp_cov = (outer - draws * emp_mean * emp_mean.transpose()) / (draws - 1);
  for (int j = 0; j < 2; ++j) {
    CHECK(std::abs(emp_mean(j) - mean(j)) < 3.0 * std::sqrt(cov(j, j) / draws));
  }
  CHECK((emp_cov - cov).norm() / cov.norm() < 0.05);

  const Eigen::VectorXd tiny = sample_beta(s, sigma2, 1e-14, rng);
  CHECK(tiny.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("fixed-sigma2 marginal matches the Gaussian integral") {
  // z ~ N(alpha 1 + Xk beta, sigma2 I), beta ~ N(0, g sigma2 (Xk'Xk)^-1),
  // alpha flat: relative to the null model the log evidence is
  // -(p_k/2) log(1+g) + delta z'Pz / (2 sigma2).
  const auto pr = random_problem(20, 3, 21);
  const double g = 20.0;
  const double sigma2 = 0.3;
  const auto null = suff_stats(pr.z, ModelIndicator(3), pr.design);
  const auto model = ModelIndicator::from_indices(3, {0, 2});
  const auto s = suff_stats(pr.z, model, pr.design);
  Eigen::MatrixXd Xk(20, 2);
  Xk.col(0) = pr.design.Xc.col(0);
  Xk.col(1) = pr.design.Xc.col(2);
  const double zPz = pr.z.dot(Xk * (Xk.transpose() * Xk).ldlt().solve(Xk.transpose() * pr.z));
  const double expected = -std::log1p(g) + (g / (1 + g)) * zPz / (2 * sigma2);
  CHECK(log_marginal_fixed_sigma2(s, g, sigma2) - log_marginal_fixed_sigma2(null, g, sigma2) ==
        doctest::Approx(expected).epsilon(1e-10));
}
