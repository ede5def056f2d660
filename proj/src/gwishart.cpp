#include "sums/gwishart.hpp"

#include <cmath>
#include <sstream>

#include "sums/special.hpp"

namespace sums {

namespace {

void check_params(const GWishartParams& params, int dim) {
  if (!(params.nu > 2.0)) throw ValidationError("G-Wishart: nu must be > 2");
  if (params.psi.rows() != dim || params.psi.cols() != dim)
    throw ValidationError("G-Wishart: psi dimension mismatch");
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& a, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw NumericalError(std::string(what) + ": matrix is not positive definite");
  return llt.solve(Eigen::MatrixXd::Identity(a.rows(), a.cols()));
}

// full Wishart draw in the G-Wishart convention: density
// |K|^{(nu-2)/2} exp(-tr(psi K)/2), i.e. Wishart(df = nu + D - 1, V = psi^{-1})
Eigen::MatrixXd sample_wishart_full(const GWishartParams& params, Rng& rng) {
  const int d = static_cast<int>(params.psi.rows());
  const double df = params.nu + d - 1;
  Eigen::LLT<Eigen::MatrixXd> llt(params.psi);
  if (llt.info() != Eigen::Success)
    throw NumericalError("sample_wishart_full: psi is not positive definite");
  // V = psi^{-1} = M M' with M = L^{-T}
  const Eigen::MatrixXd m =
      llt.matrixL().transpose().solve(Eigen::MatrixXd::Identity(d, d));
  // Bartlett factor
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    b(i, i) = std::sqrt(rng.chi_squared(df - i));
    for (int j = 0; j < i; ++j) b(i, j) = rng.normal();
  }
  const Eigen::MatrixXd mb = m * b;
  return mb * mb.transpose();
}

}  // namespace

double log_density_unnorm(const Eigen::MatrixXd& omega, const GWishartParams& params,
                          const RateGraph& g) {
  const int d = g.n_nodes();
  check_params(params, d);
  if (omega.rows() != d || omega.cols() != d)
    throw ValidationError("log_density_unnorm: omega dimension mismatch");
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (!g.has_edge(i, j) && omega(i, j) != 0.0) {
        std::ostringstream msg;
        msg << "log_density_unnorm: omega(" << i + 1 << "," << j + 1
            << ") must be zero for a non-edge";
        throw ValidationError(msg.str());
      }
  Eigen::LLT<Eigen::MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success)
    throw ValidationError("log_density_unnorm: omega is not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * (params.nu - 2.0) * logdet - 0.5 * (params.psi * omega).trace();
}

Eigen::MatrixXd sample_direct(const GWishartParams& params, const RateGraph& g, Rng& rng,
                              double tol, int max_sweeps) {
  const int d = g.n_nodes();
  check_params(params, d);
  const Eigen::MatrixXd full = sample_wishart_full(params, rng);
  // neighbour lists once per call
  std::vector<std::vector<int>> nbrs(d);
  bool complete = true;
  for (int j = 0; j < d; ++j) {
    nbrs[j] = g.neighbors(j);
    complete = complete && static_cast<int>(nbrs[j].size()) == d - 1;
  }
  if (complete) return full;

  const Eigen::MatrixXd sigma = spd_inverse(full, "sample_direct");
  Eigen::MatrixXd w = sigma;
  int sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double delta = 0.0;
    for (int j = 0; j < d; ++j) {
      Eigen::VectorXd col = Eigen::VectorXd::Zero(d);
      const auto& nb = nbrs[j];
      if (!nb.empty()) {
        const int m = static_cast<int>(nb.size());
        Eigen::MatrixXd wnn(m, m);
        Eigen::VectorXd snj(m);
        for (int a = 0; a < m; ++a) {
          snj[a] = sigma(nb[a], j);
          for (int c = 0; c < m; ++c) wnn(a, c) = w(nb[a], nb[c]);
        }
        const Eigen::VectorXd beta = wnn.ldlt().solve(snj);
        for (int i = 0; i < d; ++i) {
          if (i == j) continue;
          double v = 0.0;
          for (int a = 0; a < m; ++a) v += w(i, nb[a]) * beta[a];
          col[i] = v;
        }
      }
      for (int i = 0; i < d; ++i) {
        if (i == j) continue;
        delta = std::max(delta, std::abs(w(i, j) - col[i]));
        w(i, j) = w(j, i) = col[i];
      }
    }
    if (delta < tol) break;
  }
  if (sweep >= max_sweeps)
    throw NumericalError("sample_direct: block completion did not converge within " +
                         std::to_string(max_sweeps) + " sweeps");
  Eigen::MatrixXd k = spd_inverse(w, "sample_direct");
  // enforce the structural zeros exactly and re-symmetrize
  k = 0.5 * (k + k.transpose()).eval();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j && !g.has_edge(i, j)) k(i, j) = 0.0;
  if (Eigen::LLT<Eigen::MatrixXd>(k).info() != Eigen::Success)
    throw NumericalError("sample_direct: projected draw lost positive definiteness");
  return k;
}

GWishartParams posterior_params(const std::vector<Eigen::VectorXd>& phi_star,
                                const Eigen::VectorXd& m_mu, double k0,
                                const GWishartParams& prior) {
  const int m = static_cast<int>(phi_star.size());
  if (m < 1) throw ValidationError("posterior_params: need at least one component");
  const int d = static_cast<int>(m_mu.size());
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& phi : phi_star) mean += phi;
  mean /= m;
  Eigen::MatrixXd psi = prior.psi;
  for (const auto& phi : phi_star) {
    const Eigen::VectorXd c = phi - mean;
    psi.noalias() += c * c.transpose();
  }
  const Eigen::VectorXd c0 = m_mu - mean;
  psi.noalias() += (k0 * m / (k0 + m)) * (c0 * c0.transpose());
  psi = 0.5 * (psi + psi.transpose()).eval();
  return {prior.nu + m, psi};
}

double log_norm_const_complete(double nu, const Eigen::MatrixXd& psi) {
  const int d = static_cast<int>(psi.rows());
  const double a = nu + d - 1;
  Eigen::LLT<Eigen::MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success)
    throw ValidationError("log_norm_const_complete: psi is not positive definite");
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i));
  return 0.5 * a * d * std::log(2.0) + log_multigamma(d, 0.5 * a) - 0.5 * a * logdet;
}

LogNormConst log_norm_const_mc(const GWishartParams& params, const RateGraph& g, int n_mc,
                               Rng& rng) {
  const int d = g.n_nodes();
  check_params(params, d);
  if (n_mc < 100) throw ValidationError("log_norm_const_mc: n_mc must be >= 100");

  // T upper triangular with psi^{-1} = T'T
  const Eigen::MatrixXd psi_inv = spd_inverse(params.psi, "log_norm_const_mc");
  Eigen::LLT<Eigen::MatrixXd> llt(psi_inv);
  if (llt.info() != Eigen::Success)
    throw NumericalError("log_norm_const_mc: psi^{-1} is not positive definite");
  const Eigen::MatrixXd t = Eigen::MatrixXd(llt.matrixL()).transpose();

  std::vector<int> later(d, 0), earlier(d, 0);
  int n_edges = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (g.has_edge(i, j)) {
        ++later[i];
        ++earlier[j];
        ++n_edges;
      }

  double constant = 0.5 * n_edges * std::log(2.0 * M_PI);
  for (int i = 0; i < d; ++i) {
    const double a = params.nu + later[i];
    constant += 0.5 * a * std::log(2.0) + std::lgamma(0.5 * a);
    constant += (params.nu + later[i] + earlier[i]) * std::log(t(i, i));
  }
  if (n_edges == d * (d - 1) / 2) return {constant, 0.0};  // complete graph: exact

  // sample the free Cholesky-like entries, complete the constrained ones,
  // average exp(-sum of squared completions / 2)
  Eigen::MatrixXd psi_m(d, d), phi_m(d, d);
  double mean_w = 0.0, m2_w = 0.0;
  for (int rep = 0; rep < n_mc; ++rep) {
    psi_m.setZero();
    phi_m.setZero();
    double ss = 0.0;
    for (int i = 0; i < d; ++i) {
      psi_m(i, i) = std::sqrt(rng.chi_squared(params.nu + later[i]));
      for (int j = i; j < d; ++j) {
        if (j > i) {
          if (g.has_edge(i, j)) {
            psi_m(i, j) = rng.normal();
          } else {
            // zero constraint on K(i,j) pins phi(i,j), hence psi(i,j)
            double phi_ij = 0.0;
            if (i > 0) {
              for (int l = 0; l < i; ++l) phi_ij -= phi_m(l, i) * phi_m(l, j);
              phi_ij /= phi_m(i, i);
            }
            double acc = 0.0;
            for (int k = i; k < j; ++k) acc += psi_m(i, k) * t(k, j);
            psi_m(i, j) = (phi_ij - acc) / t(j, j);
            ss += psi_m(i, j) * psi_m(i, j);
            phi_m(i, j) = phi_ij;
            continue;
          }
        }
        double v = 0.0;
        for (int k = i; k <= j; ++k) v += psi_m(i, k) * t(k, j);
        phi_m(i, j) = v;
      }
    }
    const double w = std::exp(-0.5 * ss);
    // running mean / variance (Welford)
    const double delta = w - mean_w;
    mean_w += delta / (rep + 1);
    m2_w += delta * (w - mean_w);
  }
  if (!(mean_w > 0.0) || !std::isfinite(mean_w))
    throw NumericalError("log_norm_const_mc: all Monte Carlo weights underflowed");
  const double sd_w = std::sqrt(m2_w / (n_mc - 1));
  return {constant + std::log(mean_w), sd_w / (mean_w * std::sqrt(static_cast<double>(n_mc)))};
}

}  // namespace sums
