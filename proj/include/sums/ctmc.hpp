#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sums/errors.hpp"
#include "sums/random.hpp"

namespace sums {

// Matrix exponential by scaling-and-squaring with a degree-13 Pade
// approximant (Higham 2005). Accurate well below 1e-12 for the small, mildly
// scaled generators handled here.
template <typename Derived>
Eigen::MatrixXd expm(const Eigen::MatrixBase<Derived>& a_expr) {
  using Mat = Eigen::MatrixXd;
  const Mat a = a_expr;
  const int n = static_cast<int>(a.rows());
  // theta_13 from Higham's error analysis
  const double theta13 = 5.371920351148152;
  const double norm = a.cwiseAbs().colwise().sum().maxCoeff();  // 1-norm
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
  }
  const Mat as = a / std::ldexp(1.0, squarings);

  static const double b[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                             1187353796428800.0,  129060195264000.0,   10559470521600.0,
                             670442572800.0,      33522128640.0,       1323241920.0,
                             40840800.0,          960960.0,            16380.0,
                             182.0,               1.0};
  const Mat id = Mat::Identity(n, n);
  const Mat a2 = as * as;
  const Mat a4 = a2 * a2;
  const Mat a6 = a2 * a4;
  const Mat u = as * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) +
                      b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) +
                b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int k = 0; k < squarings; ++k) r = r * r;
  return r;
}

// Generator (intensity) matrix of an irreducible continuous-time Markov
// chain. Off-diagonal rates are strictly positive; each diagonal entry is the
// negated sum of its row, so rows sum to zero by construction.
class Generator {
 public:
  // `rates` holds the d(d-1) off-diagonal entries concatenated by row:
  // (1,2),(1,3),...,(2,1),(2,3),... This layout is shared project-wide.
  Generator(const Eigen::VectorXd& rates, int d);

  int dim() const { return d_; }
  const Eigen::MatrixXd& matrix() const { return q_; }
  double rate(int from, int to) const { return q_(from, to); }  // 0-based
  double total_exit_rate(int state) const { return -q_(state, state); }

 private:
  int d_;
  Eigen::MatrixXd q_;
};

// Stochastic matrix of transition probabilities over an interval.
struct TransitionMatrix {
  Eigen::MatrixXd p;
  double operator()(int from, int to) const { return p(from, to); }
};

struct StationaryDistribution {
  Eigen::VectorXd pi;
  double operator()(int state) const { return pi[state]; }
};

// exp(Q*eps): closed form for d=2, Pade scaling-and-squaring otherwise
TransitionMatrix transition_matrix(const Generator& q, double eps);

// numerical path for any d; exposed so the d=2 closed form can be checked
// against it
TransitionMatrix transition_matrix_pade(const Generator& q, double eps);

// pi with pi*Q = 0 and sum(pi) = 1, from the augmented linear system
StationaryDistribution stationary(const Generator& q);

// Exact jump chain record: states_[k] is entered at times_[k]; the first
// entry is (0, start_state). Jumps after `horizon` are not recorded.
struct PathSample {
  std::vector<double> times;
  std::vector<int> states;
  int state_at(double t) const;  // state occupied at time t <= horizon
};

PathSample sample_path(const Generator& q, int start_state, double horizon, Rng& rng);

// state after `duration` starting from `start_state`; cheaper than keeping
// the full path
int evolve_state(const Generator& q, int start_state, double duration, Rng& rng);

}  // namespace sums
