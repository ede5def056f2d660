#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sums/random.hpp"

namespace sums {

struct MixtureHyper {
  double lambda = 0.01;   // mean of the shifted Poisson on M-1
  double gamma_s = 0.1;   // Gamma shape of the unnormalized weights
};

// State of the mixture with random number of components. Component labels
// are 0-based; after compact() the allocated components occupy 0..K_N-1 in
// order of first appearance by subject index.
struct MixtureState {
  Eigen::VectorXd s;                       // unnormalized weights, length M
  std::vector<int> c;                      // allocations, one per subject
  std::vector<Eigen::VectorXd> phi_star;   // component locations, length M
  double u = 1.0;                          // latent variable

  int n_components() const { return static_cast<int>(s.size()); }
  int n_subjects() const { return static_cast<int>(c.size()); }

  std::vector<int> cluster_sizes() const;
  int n_allocated() const;  // K_N, derived from the allocations

  // Reorder components so the allocated ones come first (first-appearance
  // order), remapping allocations. Never changes the induced partition.
  void compact();
};

// u | S ~ Gamma(N, sum S)
void update_u(MixtureState& state, Rng& rng);

// S_m | u, c ~ Gamma(gamma_s + n_m, 1 + u) for allocated components
void update_allocated_weights(MixtureState& state, const MixtureHyper& hyper, Rng& rng);

// Number of non-allocated components, pmf p(m) proportional to
// (K + m) x^m / m! with x = Lambda (1+u)^{-gamma_s}: with probability
// K/(K+x) draw Poisson(x), otherwise 1 + Poisson(x).
int sample_n_nonallocated(int n_allocated, double x, Rng& rng);

// Replace the non-allocated components: draw their number, then fresh
// weights Gamma(gamma_s, 1+u) and locations from the base measure.
void update_nonallocated(MixtureState& state, const MixtureHyper& hyper,
                         const std::function<Eigen::VectorXd(Rng&)>& p0_sampler, Rng& rng);

// P(c_i = m) proportional to S_m exp(loglik(i,m)), via log-sum-exp
Eigen::VectorXd allocation_probabilities(const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& logliks);

// Resample every allocation from the table loglik(i,m), then compact
void update_allocations(MixtureState& state, const Eigen::MatrixXd& loglik, Rng& rng);

// Log MH acceptance ratio for a phi* move with symmetric proposal: data
// log-likelihood difference plus the log ratio of N(mu, omega^{-1}) base
// densities (omega is a precision matrix).
double phi_star_log_accept_ratio(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                                 double data_ll_current, double data_ll_proposed,
                                 const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega);

// Random-walk MH update of the allocated components' locations.
// data_loglik(m, phi) returns the log-likelihood of all subjects allocated
// to component m under location phi. Returns the number of accepted moves.
int update_phi_star(MixtureState& state,
                    const std::function<double(int, const Eigen::VectorXd&)>& data_loglik,
                    const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega, double proposal_sd,
                    Rng& rng);

}  // namespace sums
