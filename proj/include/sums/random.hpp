#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

#include "sums/errors.hpp"

namespace sums {

// splitmix64; used to derive well-separated engine seeds from a user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed of chain k for a run with base seed s. All parallel chains use
// independent engines seeded through this rule.
inline std::uint64_t chain_seed(std::uint64_t base_seed, int chain_index) {
  return splitmix64(base_seed + static_cast<std::uint64_t>(chain_index));
}

// mt19937_64 plus hand-rolled variate generators. The standard library
// distributions are implementation-defined, so every distribution is spelled
// out here: a given seed produces the same stream on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t raw() { return engine_(); }

  // uniform on (0,1); never returns 0 or 1
  double uniform() {
    const double u = (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) {  // 0..n-1
    return static_cast<int>(engine_() % static_cast<std::uint64_t>(n));
  }

  // Box-Muller without the cached spare, so the stream position is a pure
  // function of the call count.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // Marsaglia-Tsang; shape < 1 handled by the boost trick.
  double gamma(double shape, double rate = 1.0) {
    if (!(shape > 0.0) || !(rate > 0.0))
      throw ValidationError("gamma: shape and rate must be positive");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0, rate) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v / rate;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v / rate;
    }
  }

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof, 1.0); }

  // Knuth's product method; means in this codebase are small.
  int poisson(double mean) {
    if (mean < 0.0) throw ValidationError("poisson: negative mean");
    if (mean == 0.0) return 0;
    const double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // N(mean, sd^2) conditioned on exceeding `lower`, by rejection.
  double truncated_normal_lower(double mean, double sd, double lower) {
    for (;;) {
      const double x = normal(mean, sd);
      if (x >= lower) return x;
    }
  }

  // index in 0..n-1 with probabilities proportional to weights
  int categorical(const Eigen::VectorXd& weights) {
    const double total = weights.sum();
    double u = uniform() * total;
    const int n = static_cast<int>(weights.size());
    for (int k = 0; k < n; ++k) {
      u -= weights[k];
      if (u <= 0.0) return k;
    }
    return n - 1;
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = normal();
    return z;
  }

  // draw from N(mean, precision^-1) given the lower Cholesky factor of the
  // precision matrix
  Eigen::VectorXd normal_from_precision_chol(const Eigen::VectorXd& mean,
                                             const Eigen::MatrixXd& chol_lower) {
    const Eigen::VectorXd z = normal_vector(static_cast<int>(mean.size()));
    return mean + chol_lower.transpose().triangularView<Eigen::Upper>().solve(z);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace sums
