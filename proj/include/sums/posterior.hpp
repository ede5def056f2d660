#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "sums/sampler.hpp"

namespace sums {

// Posterior inclusion probability per process pair, averaged over saved
// iterations; row/col indexed by process, symmetric, unit diagonal unused.
Eigen::MatrixXd edge_probabilities(const PosteriorChain& chain, int n_processes);

// Pairs with inclusion probability strictly greater than one half.
std::vector<std::pair<int, int>> median_graph(const Eigen::MatrixXd& edge_probs);

// Mean over iterations of the co-allocation indicator; symmetric, unit
// diagonal.
Eigen::MatrixXd coclustering_matrix(const PosteriorChain& chain, int n_subjects);

// Binder loss (equal costs) of one partition against a co-clustering matrix.
double binder_loss(const std::vector<int>& partition, const Eigen::MatrixXd& coclust);

// The sampled partition minimizing the Binder loss; ties broken by earliest
// iteration. Returns the index into the chain.
int binder_partition_index(const PosteriorChain& chain, const Eigen::MatrixXd& coclust);

// Shannon entropy of the cluster proportions of a partition.
double partition_entropy(const std::vector<int>& partition);

struct SavageDickey {
  double bf;            // posterior density at zero over prior density at zero
  double neg_log10_bf;  // -log10(bf)
};

// Gaussian kernel density estimate at a point, Silverman's rule-of-thumb
// bandwidth (0.9 min(sd, IQR/1.34) n^{-1/5}).
double kde_at(const std::vector<double>& samples, double at);

// Savage-Dickey density ratio for a point null at zero, Normal(0, prior_sd)
// prior. If `normal_approximation`, the posterior density at zero uses a
// normal fit instead of the kernel estimate.
SavageDickey savage_dickey_bf(const std::vector<double>& samples, double prior_sd,
                              bool normal_approximation = false);

// Adjusted Rand index between two partitions of the same set.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

// posterior frequency table of an integer-valued chain statistic
std::map<int, double> frequency_table(const std::vector<int>& values);

struct ClusterPhiSummary {
  // one row per (cluster, rate coordinate): posterior mean and central 95%
  // interval of phi
  Eigen::MatrixXd mean;   // n_clusters x D_p
  Eigen::MatrixXd lo;     // 2.5% quantile
  Eigen::MatrixXd hi;     // 97.5% quantile
};

// Re-run the sampler with the allocations frozen to `partition` and
// summarize the cluster-specific log-baseline rates.
ClusterPhiSummary cluster_conditional_rerun(const PanelDataset& data, ChainConfig config,
                                            const std::vector<int>& partition);

// empirical quantile (linear interpolation between order statistics)
double quantile(std::vector<double> values, double q);

}  // namespace sums
