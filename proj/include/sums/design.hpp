#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "sums/errors.hpp"

namespace sums {

enum class ProcessRole { response, explanatory };

struct ProcessSpec {
  int n_states = 2;
  ProcessRole role = ProcessRole::response;
  int n_x = 0;  // time-homogeneous covariates entering this process
  int n_z = 0;  // time-varying covariates entering this process
};

// Process layout shared by every module: process h contributes
// d^(h)(d^(h)-1) rate coordinates, concatenated by row (off-diagonal entries
// (1,2),(1,3),...,(2,1),... of the generator), processes in order.
class StudyDesign {
 public:
  explicit StudyDesign(std::vector<ProcessSpec> processes) : procs_(std::move(processes)) {
    if (procs_.empty()) throw ValidationError("StudyDesign: need at least one process");
    rate_offset_.resize(procs_.size() + 1, 0);
    for (std::size_t h = 0; h < procs_.size(); ++h) {
      const int d = procs_[h].n_states;
      if (d < 2) throw ValidationError("StudyDesign: process state count must be >= 2");
      if (procs_[h].n_x < 0 || procs_[h].n_z < 0)
        throw ValidationError("StudyDesign: negative covariate count");
      rate_offset_[h + 1] = rate_offset_[h] + d * (d - 1);
    }
  }

  int n_processes() const { return static_cast<int>(procs_.size()); }
  const ProcessSpec& process(int h) const { return procs_[h]; }
  int n_states(int h) const { return procs_[h].n_states; }
  int n_rates(int h) const { return rate_offset_[h + 1] - rate_offset_[h]; }
  int rate_offset(int h) const { return rate_offset_[h]; }
  int total_rates() const { return rate_offset_.back(); }  // D_p

  // 0-based states r != s to the global coordinate in 0..D_p-1
  int rate_index(int h, int r, int s) const {
    const int d = procs_[h].n_states;
    if (r < 0 || r >= d || s < 0 || s >= d || r == s)
      throw ValidationError("rate_index: invalid state pair");
    return rate_offset_[h] + r * (d - 1) + (s < r ? s : s - 1);
  }

  // inverse of rate_index
  std::tuple<int, int, int> rate_coords(int index) const {
    if (index < 0 || index >= total_rates()) throw ValidationError("rate_coords: out of range");
    int h = 0;
    while (rate_offset_[h + 1] <= index) ++h;
    const int d = procs_[h].n_states;
    const int local = index - rate_offset_[h];
    const int r = local / (d - 1);
    int s = local % (d - 1);
    if (s >= r) ++s;
    return {h, r, s};
  }

 private:
  std::vector<ProcessSpec> procs_;
  std::vector<int> rate_offset_;
};

}  // namespace sums
