#include "sums/posterior.hpp"

#include <algorithm>
#include <cmath>

#include "sums/special.hpp"

namespace sums {

Eigen::MatrixXd edge_probabilities(const PosteriorChain& chain, int n_processes) {
  if (chain.empty()) throw ValidationError("edge_probabilities: no saved iterations");
  Eigen::MatrixXd probs = Eigen::MatrixXd::Zero(n_processes, n_processes);
  for (const auto& rec : chain)
    for (const auto& [h, k] : rec.g0_edges) {
      probs(h, k) += 1.0;
      probs(k, h) += 1.0;
    }
  probs /= static_cast<double>(chain.size());
  return probs;
}

std::vector<std::pair<int, int>> median_graph(const Eigen::MatrixXd& edge_probs) {
  std::vector<std::pair<int, int>> edges;
  for (int h = 0; h < edge_probs.rows(); ++h)
    for (int k = h + 1; k < edge_probs.cols(); ++k)
      if (edge_probs(h, k) > 0.5) edges.emplace_back(h, k);  // strict: ties at 0.5 excluded
  return edges;
}

Eigen::MatrixXd coclustering_matrix(const PosteriorChain& chain, int n_subjects) {
  if (chain.empty()) throw ValidationError("coclustering_matrix: no saved iterations");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_subjects, n_subjects);
  for (const auto& rec : chain)
    for (int i = 0; i < n_subjects; ++i)
      for (int j = i; j < n_subjects; ++j)
        if (rec.c[i] == rec.c[j]) {
          m(i, j) += 1.0;
          if (j != i) m(j, i) += 1.0;
        }
  m /= static_cast<double>(chain.size());
  return m;
}

double binder_loss(const std::vector<int>& partition, const Eigen::MatrixXd& coclust) {
  const int n = static_cast<int>(partition.size());
  double loss = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double same = partition[i] == partition[j] ? 1.0 : 0.0;
      loss += std::abs(same - coclust(i, j));
    }
  return loss;
}

int binder_partition_index(const PosteriorChain& chain, const Eigen::MatrixXd& coclust) {
  if (chain.empty()) throw ValidationError("binder_partition_index: no saved iterations");
  int best = 0;
  double best_loss = binder_loss(chain[0].c, coclust);
  for (std::size_t t = 1; t < chain.size(); ++t) {
    const double loss = binder_loss(chain[t].c, coclust);
    if (loss < best_loss) {  // strict: ties keep the earliest iteration
      best_loss = loss;
      best = static_cast<int>(t);
    }
  }
  return best;
}

double partition_entropy(const std::vector<int>& partition) {
  std::map<int, int> sizes;
  for (int c : partition) ++sizes[c];
  const double n = static_cast<double>(partition.size());
  double h = 0.0;
  for (const auto& [label, count] : sizes) {
    const double prop = count / n;
    h -= prop * std::log(prop);
  }
  return h;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * (values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
  const double frac = pos - lo;
  return values[lo] * (1.0 - frac) + values[hi] * frac;
}

double kde_at(const std::vector<double>& samples, double at) {
  const int n = static_cast<int>(samples.size());
  if (n < 2) throw ValidationError("kde_at: need at least two samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double var = 0.0;
  for (double x : samples) var += (x - mean) * (x - mean);
  var /= (n - 1);
  const double sd = std::sqrt(var);
  const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  if (spread <= 0.0) throw ValidationError("kde_at: degenerate (zero-variance) sample");
  const double h = 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  double acc = 0.0;
  for (double x : samples) acc += normal_pdf((at - x) / h);
  return acc / (n * h);
}

SavageDickey savage_dickey_bf(const std::vector<double>& samples, double prior_sd,
                              bool normal_approximation) {
  if (samples.size() < 500)
    throw ValidationError("savage_dickey_bf: need at least 500 posterior samples");
  if (!(prior_sd > 0.0)) throw ValidationError("savage_dickey_bf: prior sd must be positive");
  double post_at_zero;
  if (normal_approximation) {
    double mean = 0.0;
    for (double x : samples) mean += x;
    mean /= samples.size();
    double var = 0.0;
    for (double x : samples) var += (x - mean) * (x - mean);
    var /= (samples.size() - 1);
    if (!(var > 0.0)) throw ValidationError("savage_dickey_bf: degenerate sample");
    post_at_zero = normal_pdf(0.0, mean, std::sqrt(var));
  } else {
    post_at_zero = kde_at(samples, 0.0);
  }
  const double prior_at_zero = normal_pdf(0.0, 0.0, prior_sd);
  const double bf = post_at_zero / prior_at_zero;
  return {bf, -std::log10(bf)};
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw ValidationError("adjusted_rand_index: partitions must be non-empty and equal length");
  std::map<int, int> la, lb;
  for (int x : a)
    la.emplace(x, static_cast<int>(la.size()));
  for (int x : b)
    lb.emplace(x, static_cast<int>(lb.size()));
  Eigen::MatrixXd table = Eigen::MatrixXd::Zero(la.size(), lb.size());
  for (std::size_t i = 0; i < a.size(); ++i) table(la[a[i]], lb[b[i]]) += 1.0;
  auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
  double sum_cells = 0.0;
  for (int i = 0; i < table.rows(); ++i)
    for (int j = 0; j < table.cols(); ++j) sum_cells += choose2(table(i, j));
  double sum_rows = 0.0, sum_cols = 0.0;
  for (int i = 0; i < table.rows(); ++i) sum_rows += choose2(table.row(i).sum());
  for (int j = 0; j < table.cols(); ++j) sum_cols += choose2(table.col(j).sum());
  const double total = choose2(static_cast<double>(a.size()));
  const double expected = sum_rows * sum_cols / total;
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;  // both partitions trivial
  return (sum_cells - expected) / (max_index - expected);
}

std::map<int, double> frequency_table(const std::vector<int>& values) {
  std::map<int, double> freq;
  for (int v : values) freq[v] += 1.0;
  for (auto& [v, f] : freq) f /= static_cast<double>(values.size());
  return freq;
}

ClusterPhiSummary cluster_conditional_rerun(const PanelDataset& data, ChainConfig config,
                                            const std::vector<int>& partition) {
  Sampler sampler(data, config);
  sampler.freeze_partition(partition);
  Rng rng(config.seed);
  const PosteriorChain chain = sampler.run(rng);
  if (chain.empty()) throw ValidationError("cluster_conditional_rerun: no saved iterations");
  const int k = chain.front().n_components;
  const int dp = static_cast<int>(chain.front().phi_star.front().size());
  ClusterPhiSummary out;
  out.mean = Eigen::MatrixXd::Zero(k, dp);
  out.lo = Eigen::MatrixXd::Zero(k, dp);
  out.hi = Eigen::MatrixXd::Zero(k, dp);
  for (int m = 0; m < k; ++m) {
    for (int j = 0; j < dp; ++j) {
      std::vector<double> draws;
      draws.reserve(chain.size());
      for (const auto& rec : chain) draws.push_back(rec.phi_star[m][j]);
      double mean = 0.0;
      for (double x : draws) mean += x;
      out.mean(m, j) = mean / draws.size();
      out.lo(m, j) = quantile(draws, 0.025);
      out.hi(m, j) = quantile(draws, 0.975);
    }
  }
  return out;
}

}  // namespace sums
