#include "sums/mixture.hpp"

#include <cmath>

#include "sums/errors.hpp"

namespace sums {

std::vector<int> MixtureState::cluster_sizes() const {
  std::vector<int> n(n_components(), 0);
  for (int m : c) ++n[m];
  return n;
}

int MixtureState::n_allocated() const {
  const auto sizes = cluster_sizes();
  int k = 0;
  for (int n : sizes)
    if (n > 0) ++k;
  return k;
}

void MixtureState::compact() {
  const int m_total = n_components();
  std::vector<int> new_of_old(m_total, -1);
  std::vector<int> order;
  order.reserve(m_total);
  for (int i = 0; i < n_subjects(); ++i) {
    const int m = c[i];
    if (new_of_old[m] < 0) {
      new_of_old[m] = static_cast<int>(order.size());
      order.push_back(m);
    }
  }
  for (int m = 0; m < m_total; ++m) {
    if (new_of_old[m] < 0) {
      new_of_old[m] = static_cast<int>(order.size());
      order.push_back(m);
    }
  }
  Eigen::VectorXd s_new(m_total);
  std::vector<Eigen::VectorXd> phi_new(m_total);
  for (int pos = 0; pos < m_total; ++pos) {
    s_new[pos] = s[order[pos]];
    phi_new[pos] = phi_star[order[pos]];
  }
  s = std::move(s_new);
  phi_star = std::move(phi_new);
  for (int& ci : c) ci = new_of_old[ci];
}

void update_u(MixtureState& state, Rng& rng) {
  const double total = state.s.sum();
  if (!(total > 0.0)) throw NumericalError("update_u: total weight must be positive");
  state.u = rng.gamma(static_cast<double>(state.n_subjects()), total);
}

void update_allocated_weights(MixtureState& state, const MixtureHyper& hyper, Rng& rng) {
  const auto sizes = state.cluster_sizes();
  for (int m = 0; m < state.n_components(); ++m)
    if (sizes[m] > 0) state.s[m] = rng.gamma(hyper.gamma_s + sizes[m], 1.0 + state.u);
}

int sample_n_nonallocated(int n_allocated, double x, Rng& rng) {
  if (x < 0.0) throw ValidationError("sample_n_nonallocated: x must be >= 0");
  if (x == 0.0) return 0;
  if (rng.uniform() < n_allocated / (n_allocated + x)) return rng.poisson(x);
  return 1 + rng.poisson(x);
}

void update_nonallocated(MixtureState& state, const MixtureHyper& hyper,
                         const std::function<Eigen::VectorXd(Rng&)>& p0_sampler, Rng& rng) {
  state.compact();
  const int k = state.n_allocated();
  const double x = hyper.lambda * std::pow(1.0 + state.u, -hyper.gamma_s);
  const int n_new = sample_n_nonallocated(k, x, rng);
  Eigen::VectorXd s_new(k + n_new);
  s_new.head(k) = state.s.head(k);
  state.phi_star.resize(k);
  for (int m = 0; m < n_new; ++m) {
    s_new[k + m] = rng.gamma(hyper.gamma_s, 1.0 + state.u);
    state.phi_star.push_back(p0_sampler(rng));
  }
  state.s = std::move(s_new);
}

Eigen::VectorXd allocation_probabilities(const Eigen::VectorXd& s,
                                         const Eigen::VectorXd& logliks) {
  const int m_total = static_cast<int>(s.size());
  Eigen::VectorXd logw(m_total);
  for (int m = 0; m < m_total; ++m) logw[m] = std::log(s[m]) + logliks[m];
  const double top = logw.maxCoeff();
  if (!std::isfinite(top))
    throw NumericalError("allocation_probabilities: every component has zero likelihood");
  Eigen::VectorXd w = (logw.array() - top).exp();
  return w / w.sum();
}

void update_allocations(MixtureState& state, const Eigen::MatrixXd& loglik, Rng& rng) {
  if (loglik.rows() != state.n_subjects() || loglik.cols() != state.n_components())
    throw ValidationError("update_allocations: log-likelihood table shape mismatch");
  for (int i = 0; i < state.n_subjects(); ++i) {
    const Eigen::VectorXd probs =
        allocation_probabilities(state.s, loglik.row(i).transpose());
    state.c[i] = rng.categorical(probs);
  }
  state.compact();
}

double phi_star_log_accept_ratio(const Eigen::VectorXd& current, const Eigen::VectorXd& proposed,
                                 double data_ll_current, double data_ll_proposed,
                                 const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega) {
  const Eigen::VectorXd dc = current - mu;
  const Eigen::VectorXd dp = proposed - mu;
  const double log_p0_diff = -0.5 * dp.dot(omega * dp) + 0.5 * dc.dot(omega * dc);
  return data_ll_proposed - data_ll_current + log_p0_diff;
}

int update_phi_star(MixtureState& state,
                    const std::function<double(int, const Eigen::VectorXd&)>& data_loglik,
                    const Eigen::VectorXd& mu, const Eigen::MatrixXd& omega, double proposal_sd,
                    Rng& rng) {
  const auto sizes = state.cluster_sizes();
  int accepted = 0;
  for (int m = 0; m < state.n_components(); ++m) {
    if (sizes[m] == 0) continue;  // non-allocated locations are fresh P0 draws
    const Eigen::VectorXd& cur = state.phi_star[m];
    Eigen::VectorXd prop = cur + proposal_sd * rng.normal_vector(static_cast<int>(cur.size()));
    const double ratio = phi_star_log_accept_ratio(cur, prop, data_loglik(m, cur),
                                                   data_loglik(m, prop), mu, omega);
    if (std::log(rng.uniform()) < ratio) {
      state.phi_star[m] = std::move(prop);
      ++accepted;
    }
  }
  return accepted;
}

}  // namespace sums
