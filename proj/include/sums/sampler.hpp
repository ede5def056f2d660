#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <vector>

#include <Eigen/Dense>

#include "sums/gwishart.hpp"
#include "sums/mixture.hpp"
#include "sums/model.hpp"

namespace sums {

struct Hyperparameters {
  double lambda = 0.01;    // Poisson mean for M-1
  double gamma_s = 0.1;    // weight shape
  double eta = 0.1;        // prior edge inclusion probability
  double nu = 0.0;         // G-Wishart dof; 0 means D_p + 2
  double psi_scale = 0.0;  // Psi = psi_scale * I; 0 means 1/nu
  double m_mu = 0.0;       // common value of the prior mean vector
  double a_k0 = 1.0;
  double b_k0 = 1.0;
};

struct ProposalSettings {
  double phi_sd = 0.5;      // random-walk sd per phi* coordinate (variance 0.25)
  double init_sd = 0.1;     // spherical proposal sd before adaptation (variance 0.01)
  double jitter = 1e-6;     // ridge added to the adapted covariance
  double scale = 0.0;       // multiplier on the sample covariance; 0 means 2.38^2/dim
};

struct ChainConfig {
  long n_iter = 51000;
  long burnin = 41000;
  int thin = 2;
  long adapt_burnin = 1000;  // iterations with the fixed spherical proposal
  std::uint64_t seed = 1;
  int n_mc = 1000;           // draws per normalizing-constant estimate
  int init_components = 3;
  bool prior_only = false;   // replace the data likelihood by a constant
  Hyperparameters hyper;
  ProposalSettings proposal;

  void validate() const;
};

// Haario-style adaptive random-walk proposal for one coefficient block.
class AdaptiveProposal {
 public:
  AdaptiveProposal(int dim, ProposalSettings settings);

  // increment from N(0, C); spherical before `adapted`, scaled sample
  // covariance plus jitter afterwards
  Eigen::VectorXd propose(bool adapted, Rng& rng) const;

  // feed the chain's current value after the accept/reject decision
  void observe(const Eigen::VectorXd& value);

  long n_observed() const { return n_; }
  Eigen::MatrixXd covariance() const;

 private:
  int dim_;
  ProposalSettings settings_;
  long n_ = 0;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;
};

struct GgmState {
  ProcessGraph g0 = ProcessGraph(1);
  RateGraph g = RateGraph(1);
  Eigen::MatrixXd omega;
  Eigen::VectorXd mu;
  double k0 = 1.0;
};

struct SamplerState {
  MixtureState mix;
  GgmState ggm;
  RegressionParams regression;
  std::vector<std::vector<int>> first_states;  // working first observations
  long iteration = 0;
};

struct SampleRecord {
  long iter;
  int n_components;
  int k_n;
  std::vector<int> c;
  std::vector<Eigen::VectorXd> phi_star;
  Eigen::VectorXd s;
  std::vector<Eigen::MatrixXd> beta;   // per process
  std::vector<Eigen::MatrixXd> gamma;  // per process
  Eigen::VectorXd mu;
  double k0;
  std::vector<std::pair<int, int>> g0_edges;  // 0-based process pairs
  double log_lik;
};

using PosteriorChain = std::vector<SampleRecord>;

struct AcceptanceStats {
  long phi_proposed = 0, phi_accepted = 0;
  long beta_proposed = 0, beta_accepted = 0;
  long gamma_proposed = 0, gamma_accepted = 0;
  long graph_proposed = 0, graph_accepted = 0;
};

// Gibbs-within-Metropolis sampler for the joint model. One instance runs one
// chain; independent chains use independent Rng streams.
class Sampler {
 public:
  Sampler(const PanelDataset& data, ChainConfig config);

  // Full run. `on_sample` (if set) is invoked for every saved record in
  // iteration order; records are also returned. Numerical failures are
  // rethrown with the iteration index attached.
  PosteriorChain run(Rng& rng, std::ostream* progress = nullptr,
                     const std::function<void(const SampleRecord&)>& on_sample = {});

  // individual sweep stages, in the order run() applies them
  void step_missing(Rng& rng);
  void mixture_sweep(Rng& rng);
  void step_beta_gamma(Rng& rng);
  void step_graph(Rng& rng);  // graph move plus Omega full-conditional redraw
  void step_mu_k0(Rng& rng);

  // freeze the partition (cluster-conditional rerun); disables allocation,
  // component-count and compaction updates
  void freeze_partition(const std::vector<int>& allocations);

  SamplerState& state() { return state_; }
  const SamplerState& state() const { return state_; }
  const AcceptanceStats& acceptance() const { return stats_; }
  const GWishartParams& prior_params() const { return prior_; }
  const PanelDataset& data() const { return data_; }

  double total_loglik() const;
  double subject_loglik(int i, const Eigen::VectorXd& phi) const;
  SampleRecord make_record() const;
  void validate_state() const;  // throws on any violated invariant

 private:
  void init_state(Rng& rng);
  Eigen::VectorXd crude_log_rates() const;
  void refresh_offsets(int h);
  double process_loglik(int h, const std::vector<Eigen::MatrixXd>& offsets) const;
  double process_loglik_current(int h) const;
  double graph_prior_log_const(const ProcessGraph& g0, const RateGraph& g, Rng& rng);
  Eigen::VectorXd sample_p0(Rng& rng) const;

  const PanelDataset& data_;
  ChainConfig config_;
  GWishartParams prior_;
  Eigen::VectorXd m_mu_;
  SamplerState state_;
  std::vector<std::vector<Eigen::MatrixXd>> offsets_;  // [i][h] covariate offsets
  std::vector<AdaptiveProposal> beta_props_;           // per process
  std::vector<AdaptiveProposal> gamma_props_;
  std::map<std::uint64_t, double> prior_const_cache_;  // keyed by G0 bitset
  AcceptanceStats stats_;
  bool partition_frozen_ = false;
  std::ostream* warn_ = nullptr;
};

}  // namespace sums
