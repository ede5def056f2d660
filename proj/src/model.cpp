#include "sums/model.hpp"

#include <cmath>
#include <sstream>

namespace sums {

namespace {

constexpr double kProbFloor = 1e-300;
constexpr double kRateFloor = 1e-300;

double floored_log(double p) { return std::log(p < kProbFloor ? kProbFloor : p); }

}  // namespace

void PanelDataset::validate() const {
  const int p = design_.n_processes();
  for (int i = 0; i < n_subjects(); ++i) {
    const Subject& subj = subjects_[i];
    if (static_cast<int>(subj.series.size()) != p)
      throw ValidationError("subject " + std::to_string(i + 1) + ": wrong process count");
    for (int h = 0; h < p; ++h) {
      const ProcessSeries& s = subj.series[h];
      const int d = design_.n_states(h);
      std::ostringstream where;
      where << "subject " << i + 1 << ", process " << h + 1;
      if (s.times.size() < 2)
        throw ValidationError(where.str() + ": need at least two observation times");
      if (s.states.size() != s.times.size())
        throw ValidationError(where.str() + ": times/states length mismatch");
      for (std::size_t j = 1; j < s.times.size(); ++j)
        if (!(s.times[j] > s.times[j - 1]))
          throw ValidationError(where.str() + ": observation times must be strictly increasing");
      for (std::size_t j = 0; j < s.states.size(); ++j) {
        const int y = s.states[j];
        if (y == -1) {
          if (j != 0)
            throw ValidationError(where.str() + ": missing state allowed only at the first time");
          if (!s.missing_first)
            throw ValidationError(where.str() + ": missing state without missing_first flag");
          continue;
        }
        if (y < 0 || y >= d) throw ValidationError(where.str() + ": state out of range");
      }
      if (s.missing_first && s.states[0] != -1)
        throw ValidationError(where.str() + ": missing_first flag with observed first state");
      const int q = design_.process(h).n_z;
      if (q > 0 && (s.z.rows() != s.n_times() || s.z.cols() != q))
        throw ValidationError(where.str() + ": time-varying covariate shape mismatch");
    }
    const int g = design_.process(0).n_x;  // all response processes share x
    for (int h = 0; h < p; ++h)
      if (design_.process(h).n_x > 0 && subj.x.size() != design_.process(h).n_x)
        throw ValidationError("subject " + std::to_string(i + 1) +
                              ": covariate vector length mismatch");
    (void)g;
  }
}

Eigen::MatrixXd covariate_offsets(const ProcessSeries& series, const Eigen::VectorXd& x,
                                  const ProcessParams& params) {
  const int g = static_cast<int>(params.beta.rows());
  const int q = static_cast<int>(params.gamma.rows());
  if (g == 0 && q == 0) return Eigen::MatrixXd();
  const int n = series.n_times();
  const int n_rates = static_cast<int>(g > 0 ? params.beta.cols() : params.gamma.cols());
  Eigen::MatrixXd off = Eigen::MatrixXd::Zero(n, n_rates);
  if (g > 0) off.rowwise() += (x.transpose() * params.beta).row(0);
  if (q > 0) off += series.z * params.gamma;
  return off;
}

Eigen::VectorXd rate_vector(const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets, int j) {
  const int n_rates = static_cast<int>(phi_h.size());
  Eigen::VectorXd rates(n_rates);
  for (int k = 0; k < n_rates; ++k) {
    const double lp = phi_h[k] + (offsets.size() > 0 ? offsets(j, k) : 0.0);
    if (!std::isfinite(lp) || lp > 700.0) {
      std::ostringstream msg;
      msg << "rate_vector: linear predictor " << lp << " for rate coordinate " << k + 1
          << " at time index " << j + 1 << " overflows";
      throw NumericalError(msg.str());
    }
    rates[k] = std::max(std::exp(lp), kRateFloor);
  }
  return rates;
}

namespace {

// two-state closed forms, rates (a, b) = (lambda_12, lambda_21)
double loglik_two_state(const ProcessSeries& series, int first_state,
                        const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets) {
  const bool varying = offsets.size() > 0;
  double a = 0.0, b = 0.0, s = 0.0;
  auto rates_at = [&](int j) {
    const Eigen::VectorXd lam = rate_vector(phi_h, offsets, j);
    a = lam[0];
    b = lam[1];
    s = a + b;
  };
  rates_at(0);
  double ll = floored_log(first_state == 0 ? b / s : a / s);
  int prev = first_state;
  for (int j = 1; j < series.n_times(); ++j) {
    if (varying) rates_at(j);
    const double e = std::exp(-s * series.eps(j));
    const int cur = series.states[j];
    double prob;
    if (prev == 0)
      prob = cur == 0 ? (b + a * e) / s : (a - a * e) / s;
    else
      prob = cur == 1 ? (a + b * e) / s : (b - b * e) / s;
    ll += floored_log(prob);
    prev = cur;
  }
  return ll;
}

double loglik_general(int d, const ProcessSeries& series, int first_state,
                      const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets) {
  const bool varying = offsets.size() > 0;
  Generator q(rate_vector(phi_h, offsets, 0), d);
  double ll = floored_log(stationary(q).pi[first_state]);
  int prev = first_state;
  for (int j = 1; j < series.n_times(); ++j) {
    if (varying) q = Generator(rate_vector(phi_h, offsets, j), d);
    const TransitionMatrix pm = transition_matrix(q, series.eps(j));
    const int cur = series.states[j];
    ll += floored_log(pm(prev, cur));
    prev = cur;
  }
  return ll;
}

}  // namespace

double subject_process_loglik(int n_states, const ProcessSeries& series, int first_state,
                              const Eigen::VectorXd& phi_h, const Eigen::MatrixXd& offsets) {
  if (first_state < 0 || first_state >= n_states)
    throw ValidationError("subject_process_loglik: first state out of range");
  if (n_states == 2) return loglik_two_state(series, first_state, phi_h, offsets);
  return loglik_general(n_states, series, first_state, phi_h, offsets);
}

double total_loglik(const PanelDataset& data, const std::vector<Eigen::VectorXd>& phi,
                    const RegressionParams& params,
                    const std::vector<std::vector<int>>& first_states) {
  const StudyDesign& design = data.design();
  double ll = 0.0;
  for (int i = 0; i < data.n_subjects(); ++i) {
    for (int h = 0; h < design.n_processes(); ++h) {
      const ProcessSeries& s = data.series(i, h);
      const Eigen::MatrixXd off = covariate_offsets(s, data.subject(i).x, params.process[h]);
      const Eigen::VectorXd phi_h =
          phi[i].segment(design.rate_offset(h), design.n_rates(h));
      ll += subject_process_loglik(design.n_states(h), s, first_states[i][h], phi_h, off);
    }
  }
  return ll;
}

Eigen::VectorXd initial_state_probabilities(int n_states, const ProcessSeries& series,
                                            const Eigen::VectorXd& phi_h,
                                            const Eigen::MatrixXd& offsets) {
  if (series.n_times() < 2)
    throw ValidationError("initial_state_probabilities: need a second observation");
  const int y2 = series.states[1];
  if (y2 < 0) throw ValidationError("initial_state_probabilities: second state missing");
  const Generator q1(rate_vector(phi_h, offsets, 0), n_states);
  const Generator q2(rate_vector(phi_h, offsets, 1), n_states);
  const StationaryDistribution pi = stationary(q1);
  const TransitionMatrix pm = transition_matrix(q2, series.eps(1));
  Eigen::VectorXd w(n_states);
  for (int k = 0; k < n_states; ++k) w[k] = pi(k) * pm(k, y2);
  const double total = w.sum();
  if (!(total > 0.0))
    throw NumericalError("initial_state_probabilities: all candidate probabilities are zero");
  return w / total;
}

int impute_initial_state(int n_states, const ProcessSeries& series, const Eigen::VectorXd& phi_h,
                         const Eigen::MatrixXd& offsets, Rng& rng) {
  Eigen::VectorXd w = initial_state_probabilities(n_states, series, phi_h, offsets);
  return rng.categorical(w);
}

}  // namespace sums
