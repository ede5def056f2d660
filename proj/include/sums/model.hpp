#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sums/ctmc.hpp"
#include "sums/panel.hpp"
#include "sums/random.hpp"

namespace sums {

// Regression coefficients of one process: beta is n_x x n_rates, gamma is
// n_z x n_rates, columns in the shared rate layout.
struct ProcessParams {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd gamma;
};

struct RegressionParams {
  std::vector<ProcessParams> process;

  static RegressionParams zeros(const StudyDesign& design) {
    RegressionParams p;
    p.process.resize(design.n_processes());
    for (int h = 0; h < design.n_processes(); ++h) {
      p.process[h].beta = Eigen::MatrixXd::Zero(design.process(h).n_x, design.n_rates(h));
      p.process[h].gamma = Eigen::MatrixXd::Zero(design.process(h).n_z, design.n_rates(h));
    }
    return p;
  }
};

// Covariate contribution to the log rates of one (subject, process): row j
// holds x'beta + z_j'gamma for each rate coordinate. Empty (0x0) when the
// process has no covariates; likelihood code treats that as all zeros.
Eigen::MatrixXd covariate_offsets(const ProcessSeries& series, const Eigen::VectorXd& x,
                                  const ProcessParams& params);

// Instantaneous rates for one interval: exp(phi_h + offsets.row(j)).
// Underflow is floored at 1e-300 so rates stay strictly positive; a
// non-finite (overflowing) linear predictor is an error.
Eigen::VectorXd rate_vector(const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets, int j);

// Log-likelihood of one (subject, process) series: stationary density of the
// first state plus log transition probabilities over the intervals.
// `first_state` is the observed or currently imputed state at the first time.
// Probabilities are floored at 1e-300 before taking logs.
double subject_process_loglik(int n_states, const ProcessSeries& series, int first_state,
                              const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets);

// Sum over all subjects and processes, fixed (i, h) order. `phi[i]` is the
// full length-D_p log-baseline vector of subject i; `first_states[i][h]` the
// working value of the first observation.
double total_loglik(const PanelDataset& data, const std::vector<Eigen::VectorXd>& phi,
                    const RegressionParams& params,
                    const std::vector<std::vector<int>>& first_states);

// Full-conditional probabilities of the missing first state:
// P(k) proportional to pi(k; lambda_1) * p(k -> y_2; lambda_2, eps_2),
// normalized over k.
Eigen::VectorXd initial_state_probabilities(int n_states, const ProcessSeries& series,
                                            const Eigen::VectorXd& phi_h,
                                            const Eigen::MatrixXd& offsets);

int impute_initial_state(int n_states, const ProcessSeries& series, const Eigen::VectorXd& phi_h,
                         const Eigen::MatrixXd& offsets, Rng& rng);

}  // namespace sums
