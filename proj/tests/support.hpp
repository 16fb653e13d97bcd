#pragma once

#include "ullgm/core.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace ullgm::testing {

inline Dataset make_dataset(std::vector<int> y, Eigen::MatrixXd X, FamilyTag family = FamilyTag::pln(),
                            std::vector<int> trials = {}) {
  Dataset d;
  d.y = std::move(y);
  d.X = std::move(X);
  d.family = family;
  if (!trials.empty()) d.trials = std::move(trials);
  return d;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
  double tv = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) tv += std::abs(a[k] - b[k]);
  return 0.5 * tv;
}

inline std::vector<double> normalize(std::vector<double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  for (double& x : v) x /= s;
  return v;
}

/// Normalizes log weights into probabilities.
inline std::vector<double> softmax(const std::vector<double>& logw) {
  double mx = -INFINITY;
  for (double v : logw) mx = std::max(mx, v);
  std::vector<double> w(logw.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logw[k] - mx);
  return normalize(w);
}

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

inline Moments sample_moments(const std::vector<double>& x) {
  Moments m;
  for (double v : x) m.mean += v;
  m.mean /= static_cast<double>(x.size());
  for (double v : x) m.var += (v - m.mean) * (v - m.mean);
  m.var /= static_cast<double>(x.size() - 1);
  return m;
}

}  // namespace ullgm::testing
