#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sums/model.hpp"
#include "sums/random.hpp"

namespace sums {

// Ground-truth scenario. The default-constructed preset reproduces the
// three-binary-process simulation study: N=200, two clusters with
// proportions (1/3, 2/3), cluster log-baselines phi_crude and phi_crude+1,
// covariates only on the first (response) process.
struct SimScenario {
  int n_subjects = 200;
  std::vector<ProcessSpec> processes;
  Eigen::VectorXd cluster_proportions;          // sums to 1
  std::vector<Eigen::VectorXd> phi_star;        // one length-D_p vector per cluster
  Eigen::MatrixXd beta;                         // coefficients of the response process
  Eigen::MatrixXd gamma;
  double horizon = 10.0;
  double min_gap = 0.5;                         // left truncation of the time increments
  double missing_rate = 0.0;                    // share of subjects flagged missing at j=1
  int missing_process = 0;                      // process whose first state is masked

  static SimScenario sm4_preset();
  void validate() const;
};

struct SimTruth {
  std::vector<int> allocations;  // 0-based cluster per subject
  std::vector<Eigen::VectorXd> phi_star;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd gamma;
};

struct SimResult {
  PanelDataset data;
  SimTruth truth;
};

// observation grid on (0, horizon]: 0 followed by cumulative left-truncated
// normal increments; the overshooting point is dropped
std::vector<double> gen_times(double horizon, double min_gap, Rng& rng);

// time-homogeneous covariates: one standard normal, one Bernoulli(0.25)
Eigen::VectorXd gen_x(Rng& rng);

// time-varying covariates at the grid times: Gaussian with variance 0.5 and
// means t/10 and cos(2 pi t / 10)
Eigen::MatrixXd gen_z(const std::vector<double>& times, double horizon, Rng& rng);

// full dataset plus the generating truth
SimResult gen_panel(const SimScenario& scenario, Rng& rng);

}  // namespace sums
