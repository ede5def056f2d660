#pragma once

#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "sums/random.hpp"
#include "sums/special.hpp"

namespace testutil {

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
}

inline double variance(const std::vector<double>& xs) {
  const double m = mean(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return acc / (xs.size() - 1);
}

// standard error of the mean of a (possibly autocorrelated) chain via batch
// means
inline double batch_se(const std::vector<double>& xs, int n_batches = 20) {
  const std::size_t batch = xs.size() / n_batches;
  std::vector<double> means;
  for (int b = 0; b < n_batches; ++b) {
    double acc = 0.0;
    for (std::size_t i = b * batch; i < (b + 1) * batch; ++i) acc += xs[i];
    means.push_back(acc / batch);
  }
  return std::sqrt(variance(means) / n_batches);
}

// chi-squared goodness-of-fit p-value; expected counts below 5 are pooled
// into the preceding bin
inline double chi_squared_gof_pvalue(const std::vector<double>& observed,
                                     const std::vector<double>& expected) {
  std::vector<double> obs, exp;
  double o_acc = 0.0, e_acc = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i];
    if (e_acc >= 5.0) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0.0;
    }
  }
  if (e_acc > 0.0 && !exp.empty()) {
    obs.back() += o_acc;
    exp.back() += e_acc;
  }
  double stat = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i)
    stat += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  const int dof = static_cast<int>(obs.size()) - 1;
  if (dof < 1) return 1.0;
  return sums::chi_squared_sf(stat, dof);
}

// one-sample Kolmogorov-Smirnov statistic against a cdf
template <typename Cdf>
double ks_statistic(std::vector<double> xs, Cdf cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::abs(f - i / n));
    d = std::max(d, std::abs((i + 1) / n - f));
  }
  return d;
}

}  // namespace testutil
