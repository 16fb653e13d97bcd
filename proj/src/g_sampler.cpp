#include "ullgm/g_sampler.hpp"

namespace ullgm {

double log_hyper_g_over_n(double g, double a, int n) {
  return std::log((a - 2.0) / (2.0 * n)) - 0.5 * a * std::log1p(g / n);
}

double hyper_g_over_n_cdf(double g, double a, int n) {
  return -std::expm1(-0.5 * (a - 2.0) * std::log1p(g / n));
}

double hyper_g_over_n_quantile(double u, double a, int n) {
  return n * std::expm1(-2.0 / (a - 2.0) * std::log1p(-u));
}

GUpdate mh_update_g(double g, const ModelSuffStats& s, int n, double a, GAdaptState& adapt,
                    Rng& rng) {
  return mh_update_g(
      g, [&](double gv) { return log_marginal_given_g(s, n, gv); }, a, n, adapt, rng);
}

}  // namespace ullgm
