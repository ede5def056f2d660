#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sums/graphs.hpp"
#include "sums/random.hpp"

namespace sums {

// Parameters of a G-Wishart law with unnormalized density
//   |Omega|^{(nu-2)/2} exp(-tr(psi*Omega)/2)
// on the cone of SPD matrices with zeros at the non-edges of a graph. Under
// this convention the complete-graph case is the Wishart with
// E[Omega] = (nu + D - 1) psi^{-1}.
struct GWishartParams {
  double nu;
  Eigen::MatrixXd psi;
};

struct LogNormConst {
  double value;      // estimate of log I_G(nu, psi)
  double std_error;  // Monte Carlo standard error of the estimate
};

// log unnormalized density; `omega` must carry the exact zero pattern of g
double log_density_unnorm(const Eigen::MatrixXd& omega, const GWishartParams& params,
                          const RateGraph& g);

// Direct sampler (full Wishart draw followed by iterated block completion
// over the vertices). The returned matrix has exact zeros at non-edges and
// is symmetric positive definite.
Eigen::MatrixXd sample_direct(const GWishartParams& params, const RateGraph& g, Rng& rng,
                              double tol = 1e-8, int max_sweeps = 1000);

// Conjugate update for iid phi*_m ~ N(mu, Omega) with mu marginalized out
// under mu ~ N(m_mu, k0*Omega):
//   nu* = nu + M
//   psi* = psi + sum_m (phi*_m - mean)(phi*_m - mean)'
//        + k0*M/(k0+M) (m_mu - mean)(m_mu - mean)'
GWishartParams posterior_params(const std::vector<Eigen::VectorXd>& phi_star,
                                const Eigen::VectorXd& m_mu, double k0,
                                const GWishartParams& prior);

// Monte Carlo estimate of the log normalizing constant (Atay-Kayis & Massam
// 2005). Exact (zero std error) when the graph is complete.
LogNormConst log_norm_const_mc(const GWishartParams& params, const RateGraph& g, int n_mc,
                               Rng& rng);

// Closed form for the complete graph on `dim` nodes; reference value for the
// Monte Carlo estimator and the full-Wishart reduction.
double log_norm_const_complete(double nu, const Eigen::MatrixXd& psi);

}  // namespace sums
