#include "sums/graphs.hpp"

#include <cmath>
#include <sstream>

namespace sums {

RateGraph expand(const ProcessGraph& g0, const StudyDesign& design) {
  if (g0.n_nodes() != design.n_processes())
    throw ValidationError("expand: graph/design process count mismatch");
  RateGraph g(design.total_rates());
  const int p = design.n_processes();
  for (int h = 0; h < p; ++h) {
    const int off = design.rate_offset(h);
    const int n = design.n_rates(h);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) g.set_edge(off + i, off + j, true);
  }
  for (int h = 0; h < p; ++h) {
    for (int k = h + 1; k < p; ++k) {
      if (!g0.has_edge(h, k)) continue;
      for (int i = 0; i < design.n_rates(h); ++i)
        for (int j = 0; j < design.n_rates(k); ++j)
          g.set_edge(design.rate_offset(h) + i, design.rate_offset(k) + j, true);
    }
  }
  return g;
}

ProcessGraph contract(const RateGraph& g, const StudyDesign& design) {
  if (g.n_nodes() != design.total_rates())
    throw ValidationError("contract: graph/design rate count mismatch");
  const int p = design.n_processes();
  ProcessGraph g0(p);
  for (int h = 0; h < p; ++h) {
    const int off = design.rate_offset(h);
    const int n = design.n_rates(h);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (!g.has_edge(off + i, off + j)) {
          std::ostringstream msg;
          msg << "contract: within-process clique of process " << h + 1
              << " is missing an edge; graph is not an expansion image";
          throw ValidationError(msg.str());
        }
  }
  for (int h = 0; h < p; ++h) {
    for (int k = h + 1; k < p; ++k) {
      int present = 0, total = 0;
      for (int i = 0; i < design.n_rates(h); ++i)
        for (int j = 0; j < design.n_rates(k); ++j) {
          ++total;
          present += g.has_edge(design.rate_offset(h) + i, design.rate_offset(k) + j) ? 1 : 0;
        }
      if (present != 0 && present != total) {
        std::ostringstream msg;
        msg << "contract: partial cross block between processes " << h + 1 << " and " << k + 1
            << " (" << present << "/" << total << " edges); graph is not an expansion image";
        throw ValidationError(msg.str());
      }
      g0.set_edge(h, k, present == total && total > 0);
    }
  }
  return g0;
}

double log_prior_ratio(const ProcessGraph& g0, int h, int k, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("log_prior_ratio: eta must be in (0,1)");
  const double log_odds = std::log(eta) - std::log1p(-eta);
  return g0.has_edge(h, k) ? -log_odds : log_odds;
}

double log_prior(const ProcessGraph& g0, double eta) {
  if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("log_prior: eta must be in (0,1)");
  const int e = g0.n_edges();
  return e * std::log(eta) + (g0.n_pairs() - e) * std::log1p(-eta);
}

}  // namespace sums
