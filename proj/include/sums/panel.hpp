#pragma once

#include <vector>

#include <Eigen/Dense>

#include "sums/design.hpp"

namespace sums {

// Observations of one process for one subject. States are 0-based here;
// state -1 marks a missing value, allowed only at the first time.
struct ProcessSeries {
  std::vector<double> times;  // strictly increasing, length >= 2
  std::vector<int> states;    // same length as times
  bool missing_first = false;
  Eigen::MatrixXd z;  // n_times x n_z, row j applies to the interval ending at times[j];
                      // row 0 applies to the stationary distribution at the first time

  int n_times() const { return static_cast<int>(times.size()); }
  double eps(int j) const { return times[j] - times[j - 1]; }  // j >= 1
};

struct Subject {
  Eigen::VectorXd x;                  // time-homogeneous covariates
  std::vector<ProcessSeries> series;  // one per process
};

class PanelDataset {
 public:
  PanelDataset(StudyDesign design, std::vector<Subject> subjects)
      : design_(std::move(design)), subjects_(std::move(subjects)) {
    validate();
  }

  const StudyDesign& design() const { return design_; }
  int n_subjects() const { return static_cast<int>(subjects_.size()); }
  const Subject& subject(int i) const { return subjects_[i]; }
  const ProcessSeries& series(int i, int h) const { return subjects_[i].series[h]; }

 private:
  void validate() const;

  StudyDesign design_;
  std::vector<Subject> subjects_;
};

}  // namespace sums
