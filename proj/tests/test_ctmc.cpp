#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sums/ctmc.hpp"
#include "testutil.hpp"

using namespace sums;

namespace {

Eigen::VectorXd rates2(double a, double b) {
  Eigen::VectorXd r(2);
  r << a, b;
  return r;
}

// truncated power series sum_{k<=30} (Q eps)^k / k!, the independent oracle
// for the closed forms
Eigen::MatrixXd expm_series(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(a.rows(), a.cols());
  Eigen::MatrixXd term = acc;
  for (int k = 1; k <= 30; ++k) {
    term = term * a / k;
    acc += term;
  }
  return acc;
}

Generator random_generator(int d, Rng& rng) {
  Eigen::VectorXd rates(d * (d - 1));
  for (int k = 0; k < rates.size(); ++k) rates[k] = std::exp(rng.uniform(-3.0, 1.5));
  return Generator(rates, d);
}

}  // namespace

TEST_CASE("build_generator lays out rates by row and completes the diagonal") {
  const Generator q(rates2(0.12, 0.37), 2);
  CHECK(q.matrix()(0, 0) == doctest::Approx(-0.12));
  CHECK(q.matrix()(0, 1) == doctest::Approx(0.12));
  CHECK(q.matrix()(1, 0) == doctest::Approx(0.37));
  CHECK(q.matrix()(1, 1) == doctest::Approx(-0.37));

  const Generator sym(rates2(1.0, 1.0), 2);
  CHECK(sym.matrix()(0, 0) == doctest::Approx(-1.0));
  CHECK(sym.matrix().rowwise().sum().cwiseAbs().maxCoeff() == doctest::Approx(0.0));

  const Generator q3(Eigen::VectorXd::Constant(6, 0.5), 3);
  for (int r = 0; r < 3; ++r) CHECK(q3.matrix()(r, r) == doctest::Approx(-1.0));
}

TEST_CASE("build_generator rejects bad input") {
  CHECK_THROWS_AS(Generator(rates2(0.0, 1.0), 2), ValidationError);
  CHECK_THROWS_AS(Generator(rates2(-1.0, 1.0), 2), ValidationError);
  CHECK_THROWS_AS(Generator(rates2(std::nan(""), 1.0), 2), ValidationError);
  CHECK_THROWS_AS(Generator(Eigen::VectorXd::Ones(3), 2), ValidationError);
  // the error names the offending transition
  try {
    Generator(rates2(1.0, -2.0), 2);
    CHECK(false);
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("(2,1)") != std::string::npos);
  }
}

TEST_CASE("transition_matrix: identity at eps=0, closed form, symmetric limit") {
  const Generator q(rates2(0.12, 0.37), 2);
  const TransitionMatrix id = transition_matrix(q, 0.0);
  CHECK((id.p - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() == 0.0);

  // closed form against the truncated power-series oracle
  const TransitionMatrix pm = transition_matrix(q, 1.0);
  const Eigen::MatrixXd oracle = expm_series(q.matrix());
  CHECK(pm(0, 1) == doctest::Approx(0.09487).epsilon(1e-3));
  CHECK((pm.p - oracle).cwiseAbs().maxCoeff() < 1e-12);

  const Generator sym(rates2(1.0, 1.0), 2);
  const TransitionMatrix lim = transition_matrix(sym, 50.0);
  CHECK((lim.p.array() - 0.5).abs().maxCoeff() < 1e-10);

  CHECK_THROWS_AS(transition_matrix(q, -1.0), ValidationError);
}

TEST_CASE("stationary: closed form, uniform, defining property") {
  const Generator q(rates2(0.12, 0.37), 2);
  const StationaryDistribution pi = stationary(q);
  CHECK(pi(0) == doctest::Approx(0.37 / 0.49).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(0.12 / 0.49).epsilon(1e-12));

  // cross-check by a null-space solve
  Eigen::FullPivLU<Eigen::MatrixXd> lu(q.matrix().transpose());
  lu.setThreshold(1e-10);
  Eigen::MatrixXd kernel = lu.kernel();
  REQUIRE(kernel.cols() == 1);
  Eigen::VectorXd ns = kernel.col(0) / kernel.col(0).sum();
  CHECK((pi.pi - ns).cwiseAbs().maxCoeff() < 1e-12);

  const Generator sym(Eigen::VectorXd::Constant(6, 0.7), 3);
  const StationaryDistribution pi3 = stationary(sym);
  CHECK((pi3.pi.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-12);

  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const Generator g = random_generator(3, rng);
    const StationaryDistribution s = stationary(g);
    CHECK((s.pi.transpose() * g.matrix()).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(s.pi.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((s.pi.array() >= 0.0).all());
  }
}

TEST_CASE("Chapman-Kolmogorov and closed form vs Pade") {
  Rng rng(11);
  for (int rep = 0; rep < 100; ++rep) {
    const Generator g = random_generator(3, rng);
    const double s = rng.uniform(0.0, 2.0);
    const double t = rng.uniform(0.0, 2.0);
    const Eigen::MatrixXd lhs = transition_matrix(g, s + t).p;
    const Eigen::MatrixXd rhs = transition_matrix(g, s).p * transition_matrix(g, t).p;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-9);
  }
  for (int rep = 0; rep < 200; ++rep) {
    const Generator g = random_generator(2, rng);
    const double eps = rng.uniform(0.0, 5.0);
    const Eigen::MatrixXd closed = transition_matrix(g, eps).p;
    const Eigen::MatrixXd pade = transition_matrix_pade(g, eps).p;
    CHECK((closed - pade).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("stationary distribution is a left fixed point of the transition matrix") {
  Rng rng(13);
  for (int rep = 0; rep < 30; ++rep) {
    const Generator g = random_generator(3, rng);
    const StationaryDistribution pi = stationary(g);
    const double t = rng.uniform(0.1, 4.0);
    const Eigen::RowVectorXd moved = pi.pi.transpose() * transition_matrix(g, t).p;
    CHECK((moved.transpose() - pi.pi).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("sample_path: short horizon stays put") {
  Rng rng(3);
  const Generator q(rates2(1e-3, 1e-3), 2);
  int stays = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    const PathSample path = sample_path(q, 0, 1e-6, rng);
    if (path.states.size() == 1) ++stays;
  }
  CHECK(stays == 1000);  // jump probability ~1e-9
}

TEST_CASE("sample_path: exponential holding times") {
  Rng rng(5);
  const Generator q(rates2(1.0, 1.0), 2);
  std::vector<double> holds;
  while (holds.size() < 100000) {
    const PathSample path = sample_path(q, 0, 50.0, rng);
    for (std::size_t k = 1; k < path.times.size(); ++k)
      holds.push_back(path.times[k] - path.times[k - 1]);
  }
  CHECK(testutil::mean(holds) == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("sample_path: occupation frequencies match the stationary law") {
  Rng rng(17);
  const Generator q(rates2(0.12, 0.37), 2);
  const StationaryDistribution pi = stationary(q);
  int in_state0 = 0;
  const int n_paths = 10000;
  for (int rep = 0; rep < n_paths; ++rep) {
    const PathSample path = sample_path(q, rep % 2, 100.0, rng);
    if (path.state_at(100.0) == 0) ++in_state0;
  }
  const double freq = static_cast<double>(in_state0) / n_paths;
  const double se = std::sqrt(pi(0) * (1 - pi(0)) / n_paths);
  CHECK(std::abs(freq - pi(0)) < 3.5 * se);
}

TEST_CASE("irreducibility: every generator from finite log-rates has a stationary law") {
  Rng rng(23);
  for (int rep = 0; rep < 100; ++rep) {
    const int d = 2 + rep % 2;
    Eigen::VectorXd rates(d * (d - 1));
    for (int k = 0; k < rates.size(); ++k) rates[k] = std::exp(rng.uniform(-8.0, 3.0));
    const Generator g(rates, d);
    CHECK_NOTHROW(stationary(g));
  }
}
