#include "sums/ctmc.hpp"

#include <cmath>
#include <sstream>

namespace sums {

Generator::Generator(const Eigen::VectorXd& rates, int d) : d_(d) {
  if (d < 2) throw ValidationError("Generator: need at least 2 states");
  if (rates.size() != static_cast<Eigen::Index>(d) * (d - 1)) {
    std::ostringstream msg;
    msg << "Generator: expected " << d * (d - 1) << " rates for d=" << d << ", got "
        << rates.size();
    throw ValidationError(msg.str());
  }
  q_.setZero(d, d);
  int k = 0;
  for (int r = 0; r < d; ++r) {
    for (int s = 0; s < d; ++s) {
      if (r == s) continue;
      const double lam = rates[k++];
      if (!std::isfinite(lam) || lam <= 0.0) {
        std::ostringstream msg;
        msg << "Generator: rate for transition (" << r + 1 << "," << s + 1
            << ") must be finite and > 0, got " << lam;
        throw ValidationError(msg.str());
      }
      q_(r, s) = lam;
    }
    q_(r, r) = -q_.row(r).sum();
  }
}

TransitionMatrix transition_matrix(const Generator& q, double eps) {
  if (!std::isfinite(eps) || eps < 0.0)
    throw ValidationError("transition_matrix: interval length must be finite and >= 0");
  const int d = q.dim();
  if (eps == 0.0) return {Eigen::MatrixXd::Identity(d, d)};
  if (d == 2) {
    // cox1977theory closed form
    const double a = q.rate(0, 1);
    const double b = q.rate(1, 0);
    const double s = a + b;
    const double e = std::exp(-s * eps);
    Eigen::MatrixXd p(2, 2);
    p(0, 0) = (b + a * e) / s;
    p(0, 1) = (a - a * e) / s;
    p(1, 0) = (b - b * e) / s;
    p(1, 1) = (a + b * e) / s;
    return {p};
  }
  return transition_matrix_pade(q, eps);
}

TransitionMatrix transition_matrix_pade(const Generator& q, double eps) {
  if (!std::isfinite(eps) || eps < 0.0)
    throw ValidationError("transition_matrix: interval length must be finite and >= 0");
  Eigen::MatrixXd p = expm(q.matrix() * eps);
  // clip roundoff-level negatives
  p = p.cwiseMax(0.0);
  return {p};
}

StationaryDistribution stationary(const Generator& q) {
  const int d = q.dim();
  // pi' Q = 0 with the last equation replaced by sum(pi) = 1
  Eigen::MatrixXd a = q.matrix().transpose();
  a.row(d - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  rhs[d - 1] = 1.0;
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd pi = lu.solve(rhs);
  const double residual = (pi.transpose() * q.matrix()).cwiseAbs().maxCoeff();
  if (!pi.allFinite() || residual > 1e-8)
    throw NumericalError("stationary: singular solve, residual " + std::to_string(residual));
  pi /= pi.sum();
  return {pi};
}

int PathSample::state_at(double t) const {
  int s = states.front();
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] > t) break;
    s = states[k];
  }
  return s;
}

PathSample sample_path(const Generator& q, int start_state, double horizon, Rng& rng) {
  const int d = q.dim();
  if (start_state < 0 || start_state >= d)
    throw ValidationError("sample_path: start state out of range");
  if (!(horizon > 0.0)) throw ValidationError("sample_path: horizon must be > 0");
  PathSample path;
  path.times.push_back(0.0);
  path.states.push_back(start_state);
  double t = 0.0;
  int state = start_state;
  for (;;) {
    const double exit = q.total_exit_rate(state);
    t += rng.exponential(exit);
    if (t > horizon) break;
    // jump probabilities lambda(state,s)/exit
    Eigen::VectorXd w(d);
    for (int s = 0; s < d; ++s) w[s] = s == state ? 0.0 : q.rate(state, s);
    state = rng.categorical(w);
    path.times.push_back(t);
    path.states.push_back(state);
  }
  return path;
}

int evolve_state(const Generator& q, int start_state, double duration, Rng& rng) {
  const int d = q.dim();
  double t = 0.0;
  int state = start_state;
  for (;;) {
    t += rng.exponential(q.total_exit_rate(state));
    if (t > duration) return state;
    Eigen::VectorXd w(d);
    for (int s = 0; s < d; ++s) w[s] = s == state ? 0.0 : q.rate(state, s);
    state = rng.categorical(w);
  }
}

}  // namespace sums
