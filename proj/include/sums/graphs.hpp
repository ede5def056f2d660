#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sums/design.hpp"

namespace sums {

// Simple undirected graph over the p processes, edges stored as a bitset
// over the C(p,2) pairs (h < k).
class ProcessGraph {
 public:
  explicit ProcessGraph(int n_nodes) : p_(n_nodes) {
    if (n_nodes < 1 || n_nodes > 11)
      throw ValidationError("ProcessGraph: supported node counts are 1..11");
  }

  int n_nodes() const { return p_; }
  int n_pairs() const { return p_ * (p_ - 1) / 2; }
  int n_edges() const { return __builtin_popcountll(bits_); }
  std::uint64_t bits() const { return bits_; }

  int pair_index(int h, int k) const {
    check_pair(h, k);
    if (h > k) std::swap(h, k);
    return h * p_ - h * (h + 1) / 2 + (k - h - 1);
  }

  bool has_edge(int h, int k) const { return h != k && (bits_ >> pair_index(h, k)) & 1; }
  void set_edge(int h, int k, bool present) {
    const std::uint64_t mask = 1ULL << pair_index(h, k);
    bits_ = present ? (bits_ | mask) : (bits_ & ~mask);
  }
  void toggle_edge(int h, int k) { bits_ ^= 1ULL << pair_index(h, k); }

  std::vector<std::pair<int, int>> edges() const {
    std::vector<std::pair<int, int>> e;
    for (int h = 0; h < p_; ++h)
      for (int k = h + 1; k < p_; ++k)
        if (has_edge(h, k)) e.emplace_back(h, k);
    return e;
  }

  bool operator==(const ProcessGraph& o) const { return p_ == o.p_ && bits_ == o.bits_; }

 private:
  void check_pair(int h, int k) const {
    if (h < 0 || k < 0 || h >= p_ || k >= p_ || h == k)
      throw ValidationError("ProcessGraph: invalid node pair");
  }

  int p_;
  std::uint64_t bits_ = 0;
};

// Graph over the D_p rate coordinates; always the image of a ProcessGraph
// under the clique expansion, so within-process blocks are complete.
class RateGraph {
 public:
  explicit RateGraph(int n_nodes) : adj_(Eigen::MatrixXi::Zero(n_nodes, n_nodes)) {}

  int n_nodes() const { return static_cast<int>(adj_.rows()); }
  bool has_edge(int i, int j) const { return adj_(i, j) != 0; }
  void set_edge(int i, int j, bool present) { adj_(i, j) = adj_(j, i) = present ? 1 : 0; }
  int n_edges() const { return adj_.sum() / 2; }
  const Eigen::MatrixXi& adjacency() const { return adj_; }

  std::vector<int> neighbors(int i) const {
    std::vector<int> out;
    for (int j = 0; j < n_nodes(); ++j)
      if (adj_(i, j) != 0) out.push_back(j);
    return out;
  }

  bool operator==(const RateGraph& o) const { return adj_ == o.adj_; }

 private:
  Eigen::MatrixXi adj_;
};

// Clique expansion f: within-process rate nodes are always fully connected;
// the rate nodes of processes h and k are fully connected iff (h,k) is an
// edge of g0. Bijective onto its image.
RateGraph expand(const ProcessGraph& g0, const StudyDesign& design);

// Inverse of expand; throws if g is not in the image (an incomplete
// within-process clique or a partial cross-process block).
ProcessGraph contract(const RateGraph& g, const StudyDesign& design);

// Log prior ratio pi(G0 with e0 toggled)/pi(G0) under the Bernoulli(eta)
// edge prior: +log(eta/(1-eta)) for an addition, the negative for a removal.
double log_prior_ratio(const ProcessGraph& g0, int h, int k, double eta);

double log_prior(const ProcessGraph& g0, double eta);

}  // namespace sums
