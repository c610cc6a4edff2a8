#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "chains.hpp"
#include "errors.hpp"
#include "poisson.hpp"

// Brute-force reference computations the bounds are certified against.
// Everything here is exact up to dense linear algebra and tracked tails;
// nothing uses the closed forms the bounds themselves rely on.

namespace sbstein {

// Time-indexed laws of the chain: laws[t] is the distribution of Z_t.
struct MarginalTrace {
  long t_max = 0;
  std::vector<ProbVector> laws;
  long window = 0;
};

// Stationary law of a finite chain by direct linear solve, with the balance
// residual checked rather than assumed.
inline ProbVector exact_stationary_finite(const SingleBirthChain& chain) {
  auto n_opt = chain.state_count();
  if (!n_opt)
    throw InvalidParameter("exact_stationary_finite: chain must be finite");
  const long n = *n_opt;
  if (n > 2000)
    throw BudgetExceeded("exact_stationary_finite: " + std::to_string(n) +
                         " states exceeds the 2000-state budget");
  Eigen::MatrixXd P = detail::window_matrix(chain, n);
  Eigen::VectorXd x = detail::stationary_dense(P);
  Eigen::VectorXd res = P.transpose() * x - x;
  double resid = res.lpNorm<1>();
  double neg = 0.0;
  for (long i = 0; i < n; ++i) neg = std::min(neg, x(i));
  if (resid > 1e-12 || neg < -1e-10)
    throw SingularSystem("exact_stationary_finite: balance residual " +
                         std::to_string(resid) + ", most negative entry " +
                         std::to_string(neg));
  ProbVector out;
  out.probs.resize(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i) out.probs[static_cast<size_t>(i)] = std::max(0.0, x(i));
  out.tail_mass = 0.0;
  return out;
}

// Push an initial law through the kernel t_max times on a fixed window.
// Mass leaving the window is tracked, never lost: a single-birth chain can
// only escape through the top state's upward step. Defaults to starting at 0,
// where the first t_max+1 laws are exact whenever window > t_max.
inline MarginalTrace iterate_marginals(const SingleBirthChain& chain, long t_max,
                                       long window,
                                       const ProbVector& initial = point_mass(0)) {
  if (t_max < 0) throw InvalidParameter("iterate_marginals: t_max >= 0");
  if (window < 2) throw InvalidParameter("iterate_marginals: window >= 2");
  long W = window;
  bool finite_cover = false;
  if (auto n_opt = chain.state_count()) {
    if (W >= *n_opt) {
      W = *n_opt;
      finite_cover = true;  // the window holds the whole state space
    }
  }
  if (initial.size() > W)
    throw InvalidParameter("iterate_marginals: initial law wider than the window");

  Eigen::MatrixXd P = detail::window_matrix(chain, W);
  const double b_top = finite_cover ? 0.0 : chain.birth_prob(W - 1);

  MarginalTrace trace;
  trace.t_max = t_max;
  trace.window = W;
  trace.laws.reserve(static_cast<size_t>(t_max) + 1);

  Eigen::VectorXd x = Eigen::VectorXd::Zero(W);
  for (long i = 0; i < initial.size(); ++i) x(i) = initial.at(i);
  double tail = initial.tail_mass;
  auto snapshot = [&]() {
    ProbVector law;
    law.probs.assign(x.data(), x.data() + W);
    for (double& v : law.probs) v = std::max(0.0, v);
    law.tail_mass = tail;
    trace.laws.push_back(std::move(law));
  };
  snapshot();
  for (long t = 0; t < t_max; ++t) {
    tail += x(W - 1) * b_top;
    x = P.transpose() * x;
    snapshot();
  }
  if (tail > 1e-8)
    throw WindowTooSmall("iterate_marginals: " + std::to_string(tail) +
                         " escaped the window by t = " + std::to_string(t_max));
  return trace;
}

// Total variation distance as the supremum of |E h(X) - E h(Y)| over
// |h| <= 1, i.e. the full L1 distance. The returned value is exact within
// tail_a + tail_b (unplaced mass on the same states would cancel).
inline double exact_tv(const ProbVector& a, const ProbVector& b) {
  const long W = std::max(a.size(), b.size());
  double s = 0.0;
  for (long i = 0; i < W; ++i) s += std::abs(a.at(i) - b.at(i));
  return s + std::abs(a.tail_mass - b.tail_mass);
}

// E Z_{t+1} - E Z_t from a trace. Window means; exact when the tails vanish.
inline double mean_increment(const MarginalTrace& trace, long t) {
  if (t < 0 || t + 1 > trace.t_max)
    throw InvalidParameter("mean_increment: need 0 <= t < t_max");
  return trace.laws[static_cast<size_t>(t) + 1].mean() -
         trace.laws[static_cast<size_t>(t)].mean();
}

// Largest residual of the Poisson identity over the solution window:
//   max_{i < window} | (h(i) - h_mean) - (f(i) - sum_j P[i][j] f(j)) |.
inline double verify_poisson(const SingleBirthChain& chain, const TestFunction& h,
                             const PoissonSolution& sol) {
  double worst = 0.0;
  for (long i = 0; i < sol.window; ++i) {
    auto r = chain.row(i, i + 2);
    double pf = 0.0;
    for (long j = 0; j <= i + 1; ++j)
      pf += r[static_cast<size_t>(j)] * sol.f[static_cast<size_t>(j)];
    const double resid =
        (h(i) - sol.h_mean) - (sol.f[static_cast<size_t>(i)] - pf);
    worst = std::max(worst, std::abs(resid));
  }
  return worst;
}

}  // namespace sbstein
