#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chains.hpp"
#include "errors.hpp"
#include "poisson.hpp"

// Computable upper bounds on the total variation distance between a law X
// and the stationary law of a single-birth chain. Every bound is a Stein
// factor times an increment discrepancy, plus explicitly tracked window
// slack. Distances here are on the sup_{|h| <= 1} scale (full L1, range 2),
// while Stein factors certify increments per unit range of h, so every
// composition carries the class-width factor below.

namespace sbstein {

inline constexpr double kTestClassWidth = 2.0;
inline constexpr double kTolBoundWindow = 1e-8;  // beyond-window allowance

struct BoundReport {
  double bound_value = 0.0;
  std::map<std::string, double> components;
  std::optional<double> oracle_value;
  std::optional<bool> holds;
  std::string provenance;
  std::string warning;

  void attach_oracle(double exact, double tol = kTolCmp) {
    oracle_value = exact;
    holds = (bound_value + tol >= exact);
  }
};

// A bound sweep over time for a fixed or per-step-optimised rate r >= 1.
// bounds[k] covers d_TV(Z_{t_values[k]}, pi) and is non-increasing in t.
struct ConvergenceCurve {
  std::vector<long> t_values;
  std::vector<double> bounds;
  std::vector<double> exact;   // optional oracle column, may be empty
  std::vector<double> r_used;  // the rate behind each row
  double rate_r = 1.0;         // the fixed rate, or 0 when per-step optimised
};

// d_TV(X, pi) <= sf * sum_j | P(X > j) - P(X' > j) |, where X' is one kernel
// step from X. The summand vanishes once j clears both supports; window
// truncation enters through the tracked slack only.
inline BoundReport one_step_tail_bound(const SingleBirthChain& chain, const SteinFactor& sf,
                                  const ProbVector& x_law, long horizon,
                                  double tol_window = kTolBoundWindow) {
  if (horizon < 1) throw InvalidParameter("one_step_tail_bound: horizon >= 1");
  const long W = x_law.size();
  const double eps = x_law.tail_mass;

  // One-step law of the window mass: rows 0..W-1 land inside 0..W.
  std::vector<double> y(static_cast<size_t>(W) + 1, 0.0);
  for (long i = 0; i < W; ++i) {
    const double xi = x_law.at(i);
    if (xi == 0.0) continue;
    auto r = chain.row(i, i + 2);
    for (long j = 0; j <= i + 1; ++j) y[static_cast<size_t>(j)] += xi * r[static_cast<size_t>(j)];
  }

  const long jmax = std::min(horizon, W);
  // Seed the suffixes so that after the in-loop add they equal the mass
  // strictly above j, starting at j = jmax.
  double sx = 0.0, sy = 0.0;
  for (long k = jmax + 2; k <= W - 1; ++k) sx += x_law.at(k);
  for (long k = jmax + 2; k <= W; ++k) sy += y[static_cast<size_t>(k)];
  double inner = 0.0;
  double last = 0.0;
  for (long j = jmax; j >= 0; --j) {
    if (j + 1 <= W) sy += y[static_cast<size_t>(j) + 1];
    if (j + 1 <= W - 1) sx += x_law.at(j + 1);
    const double dj = std::abs(sx - sy);
    if (j == jmax) last = dj;
    inner += dj;
  }
  if (last + 2.0 * eps > tol_window / double(horizon + 1))
    throw WindowTooSmall("one_step_tail_bound: summand " + std::to_string(last) +
                         " has not decayed by the end of the window");

  const double correction_raw = 2.0 * eps * double(horizon + 2) + tol_window;
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf.value * (inner + correction_raw);
  rep.components["inner_sum"] = inner;
  rep.components["tail_correction"] = kTestClassWidth * sf.value * correction_raw;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.components["x_tail_mass"] = eps;
  rep.provenance = "one-step tail-discrepancy bound";
  return rep;
}

// d_TV(Z_t, pi) <= sf * (E Z_{t+1} - E Z_t) for stochastically monotone
// chains started at 0. The monotonicity certificate is re-checked here.
inline BoundReport mean_drift_bound(const SingleBirthChain& chain,
                                    const SteinFactor& sf, double delta_mean,
                                    long mono_horizon = 100) {
  long horizon = mono_horizon;
  if (auto n = chain.state_count()) horizon = std::min(horizon, *n - 1);
  if (!is_stochastically_monotone(chain, horizon))
    throw NotMonotone("mean_drift_bound: kernel is not stochastically monotone "
                      "over 0.." + std::to_string(horizon));
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf.value * delta_mean;
  rep.components["delta_mean"] = delta_mean;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.components["mono_horizon"] = double(horizon);
  rep.provenance = "monotone mean-increment bound";
  if (delta_mean < 0.0)
    rep.warning = "negative mean increment reported signed; the bound assumes "
                  "a start below stationarity";
  return rep;
}

// Geometric-rate bound for the reflected walk via the return time T of the
// matched unrestricted walk: E r^T is explicit and the bound is
//   width * E r^T / (r^(t+2) (2p-1)),  valid for 1 <= r <= 1/sqrt(4p(1-p)).
inline BoundReport srw_convergence_bound(double p, long t, double r) {
  if (!(p > 0.5 && p < 1.0))
    throw InvalidParameter("srw_convergence_bound: p in (1/2, 1) required");
  if (t < 0) throw InvalidParameter("srw_convergence_bound: t >= 0");
  const double r_max = 1.0 / std::sqrt(4.0 * p * (1.0 - p));
  if (!(r >= 1.0 && r <= r_max + 1e-15))
    throw InvalidParameter("srw_convergence_bound: r must lie in [1, " +
                           std::to_string(r_max) + "]");
  const double disc = std::max(0.0, 1.0 - 4.0 * p * (1.0 - p) * r * r);
  const double e_rT = (2.0 * p * r + 1.0 - std::sqrt(disc)) / 2.0;
  const double prefactor = e_rT / (r * r * (2.0 * p - 1.0));
  BoundReport rep;
  rep.bound_value = kTestClassWidth * prefactor * std::pow(r, -double(t));
  rep.components["e_r_T"] = e_rT;
  rep.components["prefactor"] = prefactor;
  rep.components["rate_r"] = r;
  rep.components["r_max"] = r_max;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "reflected-walk return-time coupling rate";
  return rep;
}

// Geometric-rate bound for the embedded M/M/1 chain via its busy-period
// transform; valid for 1 <= r <= (1+rho)^2 / (4 rho).
inline BoundReport mm1_convergence_bound(double rho, long t, double r) {
  if (!(rho > 0.0 && rho < 1.0))
    throw InvalidParameter("mm1_convergence_bound: rho in (0, 1) required");
  if (t < 0) throw InvalidParameter("mm1_convergence_bound: t >= 0");
  const double q = 1.0 + rho;
  const double r_max = q * q / (4.0 * rho);
  if (!(r >= 1.0 && r <= r_max + 1e-15))
    throw InvalidParameter("mm1_convergence_bound: r must lie in [1, " +
                           std::to_string(r_max) + "]");
  const double disc = std::max(0.0, q * q - 4.0 * rho * r);
  const double tail_coeff = (q - std::sqrt(disc)) / (2.0 * q);  // r^{t+1} P(T > t+1) <= this
  const double sf = (2.0 - rho * rho) / (rho * (1.0 - rho));
  const double prefactor = sf * tail_coeff / r;
  BoundReport rep;
  rep.bound_value = kTestClassWidth * prefactor * std::pow(r, -double(t));
  rep.components["tail_coeff"] = tail_coeff;
  rep.components["stein_factor"] = sf;
  rep.components["prefactor"] = prefactor;
  rep.components["rate_r"] = r;
  rep.components["r_max"] = r_max;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "busy-period coupling rate";
  return rep;
}

enum class RateChoice { Fixed, Optimized };

// Bound sweep for the two families with explicit coupling rates.
inline ConvergenceCurve convergence_curve(const SingleBirthChain& chain, long t0,
                                          long t1, RateChoice choice,
                                          double r_fixed = 1.0,
                                          long grid_points = 100) {
  if (t0 < 0 || t1 < t0) throw InvalidParameter("convergence_curve: need 0 <= t0 <= t1");
  if (grid_points < 2) throw InvalidParameter("convergence_curve: grid_points >= 2");

  double r_max = 0.0;
  const ReflectedSRW* srw = std::get_if<ReflectedSRW>(&chain.family());
  const MM1Embedded* mm1 = std::get_if<MM1Embedded>(&chain.family());
  if (srw) {
    r_max = 1.0 / std::sqrt(4.0 * srw->p * (1.0 - srw->p));
  } else if (mm1) {
    r_max = (1.0 + mm1->rho) * (1.0 + mm1->rho) / (4.0 * mm1->rho);
  } else {
    throw InvalidParameter("convergence_curve: closed-form rates exist for the "
                           "reflected walk and M/M/1 families only");
  }
  auto eval = [&](long t, double r) {
    return srw ? srw_convergence_bound(srw->p, t, r).bound_value
               : mm1_convergence_bound(mm1->rho, t, r).bound_value;
  };

  ConvergenceCurve curve;
  curve.rate_r = (choice == RateChoice::Fixed) ? r_fixed : 0.0;
  for (long t = t0; t <= t1; ++t) {
    double best, r_best;
    if (choice == RateChoice::Fixed) {
      best = eval(t, r_fixed);
      r_best = r_fixed;
    } else {
      best = eval(t, 1.0);
      r_best = 1.0;
      for (long k = 1; k < grid_points; ++k) {
        const double r = 1.0 + (r_max - 1.0) * double(k) / double(grid_points - 1);
        const double v = eval(t, r);
        if (v < best) {
          best = v;
          r_best = r;
        }
      }
    }
    curve.t_values.push_back(t);
    curve.bounds.push_back(best);
    curve.r_used.push_back(r_best);
  }
  return curve;
}

// d_TV(pi_P, pi_Q) <= sf(P) * E_X sum_j | sum_{k > j} (Q - P)[X][k] | with
// X ~ pi_Q. Rowwise tail differences vanish beyond each row's support, so
// the j-sum is exact; the X-window slack is tracked.
inline BoundReport rowwise_comparison_bound(const SingleBirthChain& p_chain,
                                      const SteinFactor& sf,
                                      const SingleBirthChain& q_chain,
                                      const ProbVector& x_law, long horizon,
                                      double tol_window = kTolBoundWindow) {
  const long W = x_law.size();
  if (horizon < W - 1)
    throw InvalidParameter("rowwise_comparison_bound: horizon must cover the x window");
  const double eps = x_law.tail_mass;
  if (2.0 * eps * double(horizon + 2) > tol_window)
    throw WindowTooSmall("rowwise_comparison_bound: x tail too heavy for the horizon");

  const long width = horizon + 2;
  double inner = 0.0;
  for (long i = 0; i < W; ++i) {
    const double xi = x_law.at(i);
    if (xi == 0.0) continue;
    auto rp = p_chain.row(i, width);
    auto rq = q_chain.row(i, width);
    double tp = 0.0, tq = 0.0, gi = 0.0;
    for (long j = width - 2; j >= 0; --j) {
      tp += rp[static_cast<size_t>(j) + 1];
      tq += rq[static_cast<size_t>(j) + 1];
      gi += std::abs(tq - tp);
    }
    inner += xi * gi;
  }
  const double correction_raw = 2.0 * eps * double(horizon + 2);
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf.value * (inner + correction_raw);
  rep.components["inner_sum"] = inner;
  rep.components["tail_correction"] = kTestClassWidth * sf.value * correction_raw;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.components["x_tail_mass"] = eps;
  rep.provenance = "stationary-law comparison, rowwise form";
  return rep;
}

// Ordered variant: when one kernel dominates the other rowwise, the double
// sum collapses to a difference of means,
//   d_TV(pi_P, pi_Q) <= sf(P) * | E X - E X' |,  X ~ pi_Q, X' one P-step.
inline BoundReport ordered_comparison_bound(const SingleBirthChain& p_chain,
                                        const SteinFactor& sf,
                                        const ProbVector& x_law,
                                        Domination direction, long horizon,
                                        double tol_window = kTolBoundWindow) {
  if (direction == Domination::Neither)
    throw NotOrdered("ordered_comparison_bound: kernels are not rowwise ordered");
  if (horizon < 1) throw InvalidParameter("ordered_comparison_bound: horizon >= 1");
  const double eps = x_law.tail_mass;
  if (2.0 * eps * double(horizon + 2) > tol_window)
    throw WindowTooSmall("ordered_comparison_bound: x tail too heavy for the horizon");

  const long W = x_law.size();
  double mean_x = 0.0, mean_step = 0.0;
  for (long i = 0; i < W; ++i) {
    const double xi = x_law.at(i);
    if (xi == 0.0) continue;
    mean_x += xi * double(i);
    auto r = p_chain.row(i, i + 2);
    double row_mean = 0.0;
    for (long j = 1; j <= i + 1; ++j) row_mean += double(j) * r[static_cast<size_t>(j)];
    mean_step += xi * row_mean;
  }
  const double correction_raw = 2.0 * eps * double(horizon + 2);
  BoundReport rep;
  rep.bound_value =
      kTestClassWidth * sf.value * (std::abs(mean_x - mean_step) + correction_raw);
  rep.components["mean_x"] = mean_x;
  rep.components["mean_one_step"] = mean_step;
  rep.components["tail_correction"] = kTestClassWidth * sf.value * correction_raw;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "stationary-law comparison, ordered form";
  return rep;
}

// Birth-death comparison through rate perturbations:
//   d_TV(pi_P, pi_Q) <= sup_j [P(pi > j)/(b_j pi_j)] *
//                       E_X ( |P_down - Q_down| + |P_up - Q_up| ),  X ~ pi_Q.
inline BoundReport bd_comparison_bound(const SingleBirthChain& p_chain,
                                       const SingleBirthChain& q_chain,
                                       const ProbVector& x_law) {
  if (!is_birth_death_shaped(p_chain) || !is_birth_death_shaped(q_chain))
    throw NotBirthDeath("bd_comparison_bound: both chains must be birth-death shaped");
  const SteinFactor sf = stein_factor_bd(p_chain);
  const double eps = x_law.tail_mass;
  double e_diff = 0.0;
  for (long i = 0; i < x_law.size(); ++i) {
    const double xi = x_law.at(i);
    if (xi == 0.0) continue;
    const double dp = death_prob(p_chain, i), dq = death_prob(q_chain, i);
    const double bp = p_chain.birth_prob(i), bq = q_chain.birth_prob(i);
    e_diff += xi * (std::abs(dp - dq) + std::abs(bp - bq));
  }
  // Each unseen state contributes at most |down| + |up| <= 2.
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf.value * (e_diff + 2.0 * eps);
  rep.components["e_rate_diff"] = e_diff;
  rep.components["tail_correction"] = kTestClassWidth * sf.value * 2.0 * eps;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "birth-death rate-perturbation comparison";
  return rep;
}

// How far X is from the reflected walk's geometric stationary law, measured
// through the single collapsed display | 1 - p/(2p-1) P(X = 0) |. The caller
// certifies that X's kernel-of-origin is dominated appropriately; the Stein
// factor is already inside the display.
inline BoundReport srw_geometric_bound(double p, const ProbVector& x_law) {
  if (!(p > 0.5 && p < 1.0))
    throw InvalidParameter("srw_geometric_bound: p in (1/2, 1) required");
  const double coeff = p / (2.0 * p - 1.0);
  const double inner = std::abs(1.0 - coeff * x_law.at(0));
  BoundReport rep;
  rep.bound_value = kTestClassWidth * inner;
  rep.components["p_x0"] = x_law.at(0);
  rep.components["coefficient"] = coeff;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "geometric approximation via reflected walk";
  return rep;
}

// Geometric approximation through the embedded M/M/1 chain: the discrepancy
//   (1-rho)/rho - (1/rho) E (1+rho)^-(X+1)
// is reported signed (a negative value flags that the row condition the
// display assumes cannot hold for this law). The windowed expectation only
// lowers the subtracted term, so truncation never shrinks the bound.
inline BoundReport mm1_geometric_bound(double rho, const ProbVector& x_law) {
  if (!(rho > 0.0 && rho < 1.0))
    throw InvalidParameter("mm1_geometric_bound: rho in (0, 1) required");
  const double q = 1.0 + rho;
  double e_term = 0.0;
  for (long k = 0; k < x_law.size(); ++k)
    e_term += x_law.at(k) * std::pow(q, -double(k + 1));
  const double inner = (1.0 - rho) / rho - e_term / rho;
  const double sf = (2.0 - rho * rho) / (rho * (1.0 - rho));
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf * inner;
  rep.components["inner"] = inner;
  rep.components["e_geometric_term"] = e_term;
  rep.components["stein_factor"] = sf;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "geometric approximation via embedded M/M/1 chain";
  if (inner < 0.0)
    rep.warning = "discrepancy term is negative and reported signed; the "
                  "display's hypotheses exclude this law";
  return rep;
}

// Distance between the stationary law of a chain truncated at n (cut mass
// re-entering via nu) and the full chain's stationary law:
//   d_TV <= sf * P(X = n) * (n + 1 - E nu) * P[n][n+1],  X ~ stationary(Q_n).
inline BoundReport truncation_bound(const SingleBirthChain& chain,
                                    const SteinFactor& sf, long n,
                                    const ProbVector& nu, const ProbVector& x_law) {
  if (n < 0) throw InvalidParameter("truncation_bound: n >= 0");
  if (nu.tail_mass != 0.0 || nu.size() > n + 1 || std::abs(nu.total() - 1.0) > 1e-9)
    throw InvalidParameter("truncation_bound: nu must be a law on 0..n");
  const double p_top = x_law.at(n);
  const double nu_mean = nu.mean();
  const double bn = chain.birth_prob(n);
  const double inner = p_top * (double(n + 1) - nu_mean) * bn;
  BoundReport rep;
  rep.bound_value = kTestClassWidth * sf.value * inner;
  rep.components["p_x_n"] = p_top;
  rep.components["nu_mean"] = nu_mean;
  rep.components["birth_prob_n"] = bn;
  rep.components["stein_factor"] = sf.value;
  rep.components["test_class_width"] = kTestClassWidth;
  rep.provenance = "northwest truncation augmentation bound";
  return rep;
}

}  // namespace sbstein
