#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

// Single-birth Markov chains on {0, 1, 2, ...}: at most one step up per
// transition (P[i][j] = 0 for j > i+1), arbitrary jumps down. The library
// works with explicit finite windows of such chains; every reported
// probability vector carries the mass it could not place.

namespace sbstein {

inline constexpr double kTolRow = 1e-12;  // row-sum / comparison slack
inline constexpr double kTolCmp = 1e-12;  // tolerance for tail comparisons

struct TruncationPolicy {
  double tail_eps = 1e-12;  // mass the computed window may leave unplaced
  long max_states = 2000;   // hard cap on any window this policy governs
};

// A sub-probability vector on 0..probs.size()-1 plus the unplaced remainder.
struct ProbVector {
  std::vector<double> probs;
  double tail_mass = 0.0;

  long size() const { return static_cast<long>(probs.size()); }
  double at(long i) const {
    return (i >= 0 && i < size()) ? probs[static_cast<size_t>(i)] : 0.0;
  }
  double total() const {
    double s = 0.0;
    for (double v : probs) s += v;
    return s;
  }
  // P(X > j), counting tail_mass as lying above every in-window index.
  double mass_above(long j) const {
    double s = tail_mass;
    for (long k = j + 1; k < size(); ++k) s += probs[static_cast<size_t>(k)];
    return s;
  }
  // Mean over the window only (a lower bound when tail_mass > 0).
  double mean() const {
    double s = 0.0;
    for (long k = 0; k < size(); ++k) s += double(k) * probs[static_cast<size_t>(k)];
    return s;
  }
};

inline ProbVector point_mass(long k) {
  ProbVector v;
  v.probs.assign(static_cast<size_t>(k) + 1, 0.0);
  v.probs[static_cast<size_t>(k)] = 1.0;
  return v;
}

// Reflected simple random walk: down with probability p from every positive
// state, up with probability 1-p; state 0 holds with probability p.
// Positive recurrent for p > 1/2 with geometric stationary law.
struct ReflectedSRW {
  double p;
};

// Embedded queue-length chain of an M/M/1 queue observed at departures,
// traffic intensity rho: from state i, down to j in {1..i+1} with probability
// rho * (1+rho)^(j-i-2), and to 0 with the remaining (1+rho)^-(i+1).
struct MM1Embedded {
  double rho;
};

// Birth-death chain with per-state birth b[i] and death d[i]; both sequences
// extend beyond the provided data as eventually constant (last value repeats).
// d[0] must be 0; stay probabilities 1 - b[i] - d[i] must be nonnegative.
struct BirthDeath {
  std::vector<double> b;
  std::vector<double> d;
};

// Exactly finite chain given by a full square row-major matrix. The last row
// has no state above it, so the positive-birth requirement applies to all
// rows but the last. Queries beyond the matrix are errors, never guesses.
struct Explicit {
  std::vector<std::vector<double>> rows;
};

class SingleBirthChain {
 public:
  using Family = std::variant<ReflectedSRW, MM1Embedded, BirthDeath, Explicit>;

  explicit SingleBirthChain(Family family, std::string description = "")
      : family_(std::move(family)), description_(std::move(description)) {
    validate();
  }

  static SingleBirthChain reflected_srw(double p, std::string desc = "") {
    if (desc.empty()) desc = "reflected_srw(p=" + std::to_string(p) + ")";
    return SingleBirthChain(ReflectedSRW{p}, std::move(desc));
  }
  static SingleBirthChain mm1_embedded(double rho, std::string desc = "") {
    if (desc.empty()) desc = "mm1_embedded(rho=" + std::to_string(rho) + ")";
    return SingleBirthChain(MM1Embedded{rho}, std::move(desc));
  }
  static SingleBirthChain birth_death(std::vector<double> b, std::vector<double> d,
                                      std::string desc = "birth_death") {
    return SingleBirthChain(BirthDeath{std::move(b), std::move(d)}, std::move(desc));
  }
  static SingleBirthChain explicit_chain(std::vector<std::vector<double>> rows,
                                         std::string desc = "explicit") {
    return SingleBirthChain(Explicit{std::move(rows)}, std::move(desc));
  }

  const Family& family() const { return family_; }
  const std::string& description() const { return description_; }

  // Number of states for Explicit chains; empty for the infinite families.
  std::optional<long> state_count() const {
    if (const auto* e = std::get_if<Explicit>(&family_))
      return static_cast<long>(e->rows.size());
    return std::nullopt;
  }

  // Row i over columns 0..width-1. Entries beyond a finite chain's matrix are
  // structurally zero; rows beyond it do not exist.
  std::vector<double> row(long i, long width) const {
    if (i < 0 || width < 1) throw InvalidParameter("row: need i >= 0, width >= 1");
    std::vector<double> r(static_cast<size_t>(width), 0.0);
    auto put = [&](long j, double v) {
      if (j >= 0 && j < width) r[static_cast<size_t>(j)] = v;
    };
    if (const auto* s = std::get_if<ReflectedSRW>(&family_)) {
      if (i == 0) {
        put(0, s->p);
        put(1, 1.0 - s->p);
      } else {
        put(i - 1, s->p);
        put(i + 1, 1.0 - s->p);
      }
    } else if (const auto* m = std::get_if<MM1Embedded>(&family_)) {
      const double q = 1.0 + m->rho;
      put(0, std::pow(q, -double(i + 1)));
      for (long j = 1; j <= i + 1 && j < width; ++j)
        put(j, m->rho * std::pow(q, double(j - i) - 2.0));
    } else if (const auto* bd = std::get_if<BirthDeath>(&family_)) {
      const double bi = birth_rate(*bd, i);
      const double di = death_rate(*bd, i);
      put(i + 1, bi);
      if (i > 0) put(i - 1, di);
      put(i, 1.0 - bi - di);
    } else {
      const auto& rows = std::get<Explicit>(family_).rows;
      if (i >= static_cast<long>(rows.size()))
        throw StateOutOfRange("row " + std::to_string(i) + " beyond explicit chain with " +
                              std::to_string(rows.size()) + " states");
      const auto& src = rows[static_cast<size_t>(i)];
      for (long j = 0; j < width && j < static_cast<long>(src.size()); ++j)
        r[static_cast<size_t>(j)] = src[static_cast<size_t>(j)];
    }
    return r;
  }

  // P[i][i+1]. Zero only for the top state of a finite chain.
  double birth_prob(long i) const {
    if (i < 0) throw InvalidParameter("birth_prob: i >= 0 required");
    if (const auto* s = std::get_if<ReflectedSRW>(&family_)) return 1.0 - s->p;
    if (const auto* m = std::get_if<MM1Embedded>(&family_)) return m->rho / (1.0 + m->rho);
    if (const auto* bd = std::get_if<BirthDeath>(&family_)) return birth_rate(*bd, i);
    const auto& rows = std::get<Explicit>(family_).rows;
    const long n = static_cast<long>(rows.size());
    if (i >= n)
      throw StateOutOfRange("birth_prob at state " + std::to_string(i) +
                            " beyond explicit chain");
    if (i == n - 1) return 0.0;
    return rows[static_cast<size_t>(i)][static_cast<size_t>(i + 1)];
  }

 private:
  static double birth_rate(const BirthDeath& bd, long i) {
    const auto& b = bd.b;
    return (i < static_cast<long>(b.size())) ? b[static_cast<size_t>(i)] : b.back();
  }
  static double death_rate(const BirthDeath& bd, long i) {
    if (i == 0) return 0.0;
    const auto& d = bd.d;
    return (i < static_cast<long>(d.size())) ? d[static_cast<size_t>(i)] : d.back();
  }

  void validate() const {
    if (const auto* s = std::get_if<ReflectedSRW>(&family_)) {
      if (!(s->p > 0.5 && s->p < 1.0))
        throw InvalidParameter("reflected_srw: p must lie in (1/2, 1), got " +
                               std::to_string(s->p));
    } else if (const auto* m = std::get_if<MM1Embedded>(&family_)) {
      if (!(m->rho > 0.0 && m->rho < 1.0))
        throw InvalidParameter("mm1_embedded: rho must lie in (0, 1), got " +
                               std::to_string(m->rho));
    } else if (const auto* bd = std::get_if<BirthDeath>(&family_)) {
      if (bd->b.empty() || bd->d.empty())
        throw InvalidParameter("birth_death: b and d must be nonempty");
      if (bd->d[0] != 0.0)
        throw InvalidParameter("birth_death: d[0] must be 0 (no death at the floor)");
      const long n = static_cast<long>(std::max(bd->b.size(), bd->d.size()));
      for (long i = 0; i <= n; ++i) {
        const double bi = birth_rate(*bd, i);
        const double di = death_rate(*bd, i);
        if (!(bi > 0.0))
          throw ZeroBirthProbability("birth_death: b[" + std::to_string(i) +
                                     "] must be positive");
        if (di < 0.0 || bi > 1.0 || di > 1.0)
          throw InvalidParameter("birth_death: rates must lie in [0, 1]");
        if (bi + di > 1.0 + kTolRow)
          throw InvalidParameter("birth_death: b[i] + d[i] exceeds 1 at i = " +
                                 std::to_string(i));
      }
    } else {
      const auto& rows = std::get<Explicit>(family_).rows;
      const long n = static_cast<long>(rows.size());
      if (n == 0) throw InvalidParameter("explicit chain: no rows");
      for (long i = 0; i < n; ++i) {
        const auto& r = rows[static_cast<size_t>(i)];
        if (static_cast<long>(r.size()) != n)
          throw InvalidParameter("explicit chain: row " + std::to_string(i) +
                                 " has length " + std::to_string(r.size()) +
                                 ", expected " + std::to_string(n));
        double sum = 0.0;
        for (long j = 0; j < n; ++j) {
          const double v = r[static_cast<size_t>(j)];
          if (v < -kTolRow)
            throw NotStochastic("explicit chain: negative entry at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
          if (j > i + 1 && std::abs(v) > kTolRow)
            throw NotStochastic("explicit chain: mass above the superdiagonal at (" +
                                std::to_string(i) + ", " + std::to_string(j) + ")");
          sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw NotStochastic("explicit chain: row " + std::to_string(i) +
                              " sums to " + std::to_string(sum));
        if (i < n - 1 && !(r[static_cast<size_t>(i + 1)] > 0.0))
          throw ZeroBirthProbability("explicit chain: row " + std::to_string(i) +
                                     " has no upward step");
      }
    }
  }

  Family family_;
  std::string description_;
};

// True when every row moves at most one step down as well as up, i.e. the
// chain is birth-death shaped (possibly with state-dependent rates).
inline bool is_birth_death_shaped(const SingleBirthChain& chain) {
  if (std::holds_alternative<ReflectedSRW>(chain.family())) return true;
  if (std::holds_alternative<BirthDeath>(chain.family())) return true;
  if (std::holds_alternative<MM1Embedded>(chain.family())) return false;
  const auto& rows = std::get<Explicit>(chain.family()).rows;
  const long n = static_cast<long>(rows.size());
  for (long i = 0; i < n; ++i)
    for (long j = 0; j + 1 < i; ++j)
      if (std::abs(rows[static_cast<size_t>(i)][static_cast<size_t>(j)]) > kTolRow)
        return false;
  return true;
}

// P[i][i-1] for birth-death shaped chains.
inline double death_prob(const SingleBirthChain& chain, long i) {
  if (i <= 0) return 0.0;
  auto r = chain.row(i, i + 1);
  return r[static_cast<size_t>(i - 1)];
}

namespace detail {

// Stationary vector of a dense stochastic matrix: solve x'(P - I) = 0 with
// the last balance equation replaced by normalisation.
inline Eigen::VectorXd stationary_dense(const Eigen::MatrixXd& P) {
  const long n = P.rows();
  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd x = A.partialPivLu().solve(rhs);
  if (!x.allFinite()) throw SingularSystem("stationary solve produced non-finite values");
  return x;
}

inline Eigen::MatrixXd window_matrix(const SingleBirthChain& chain, long W) {
  Eigen::MatrixXd P(W, W);
  for (long i = 0; i < W; ++i) {
    auto r = chain.row(i, W);
    for (long j = 0; j < W; ++j) P(i, j) = r[static_cast<size_t>(j)];
  }
  return P;
}

}  // namespace detail

// Stationary distribution, reported on a finite window with certified
// unplaced mass at most policy.tail_eps. Infinite families are solved on
// growing windows (mass beyond the window folded into the top state) until
// the solution stops moving, then trimmed so the dropped mass stays within
// budget. Finite chains are solved exactly (tail_mass = 0).
inline ProbVector stationary(const SingleBirthChain& chain,
                             const TruncationPolicy& policy = {}) {
  if (!(policy.tail_eps > 0.0) || policy.max_states < 4)
    throw InvalidParameter("stationary: need tail_eps > 0 and max_states >= 4");

  if (auto n_opt = chain.state_count()) {
    const long n = *n_opt;
    if (n > policy.max_states)
      throw BudgetExceeded("stationary: explicit chain has " + std::to_string(n) +
                           " states, budget " + std::to_string(policy.max_states));
    Eigen::VectorXd x = detail::stationary_dense(detail::window_matrix(chain, n));
    ProbVector out;
    out.probs.resize(static_cast<size_t>(n));
    for (long i = 0; i < n; ++i) out.probs[static_cast<size_t>(i)] = std::max(0.0, x(i));
    out.tail_mass = 0.0;
    return out;
  }

  // The fold error shrinks as the window grows while the dense-solve noise
  // grows with it, so the settle threshold tracks the window size.
  const auto settle_at = [&](long W) {
    return std::max(policy.tail_eps / 100.0, double(W) * 1e-15);
  };
  Eigen::VectorXd prev;
  long W = std::min<long>(32, policy.max_states);
  bool at_cap = (W == policy.max_states);
  for (;;) {
    Eigen::MatrixXd P = detail::window_matrix(chain, W);
    P(W - 1, W - 1) += chain.birth_prob(W - 1);  // fold escaping mass back
    Eigen::VectorXd x = detail::stationary_dense(P);
    if (prev.size() > 0) {
      double diff = 0.0;
      for (long i = 0; i < W; ++i)
        diff += std::abs(x(i) - (i < prev.size() ? prev(i) : 0.0));
      if (diff <= settle_at(W)) {
        // Trim: keep the shortest prefix that drops at most tail_eps / 2.
        double dropped = 0.0;
        long m = W;
        while (m > 1 && dropped + x(m - 1) <= policy.tail_eps / 2.0)
          dropped += x(--m);
        ProbVector out;
        out.probs.resize(static_cast<size_t>(m));
        double sum = 0.0;
        for (long i = 0; i < m; ++i) {
          out.probs[static_cast<size_t>(i)] = std::max(0.0, x(i));
          sum += out.probs[static_cast<size_t>(i)];
        }
        out.tail_mass = std::max(0.0, 1.0 - sum);
        return out;
      }
    }
    if (at_cap)
      throw BudgetExceeded("stationary: window " + std::to_string(W) +
                           " at max_states without settling; chain may not be "
                           "positive recurrent at this budget");
    prev = x;
    W = std::min(policy.max_states, W + std::max<long>(16, W / 2));
    at_cap = (W == policy.max_states);
  }
}

// Stochastic monotonicity of the transition kernel over states 0..horizon:
// row tails P(X_1 > m | X_0 = i) must be nondecreasing in i.
inline bool is_stochastically_monotone(const SingleBirthChain& chain, long horizon,
                                       double tol = kTolCmp) {
  if (horizon < 1) throw InvalidParameter("is_stochastically_monotone: horizon >= 1");
  const long width = horizon + 2;
  auto tails = [&](long i) {
    auto r = chain.row(i, width);
    std::vector<double> t(static_cast<size_t>(width), 0.0);
    double s = 0.0;
    for (long m = width - 1; m >= 0; --m) {
      s += r[static_cast<size_t>(m)];
      t[static_cast<size_t>(m)] = s;  // t[m] = P(step lands >= m)
    }
    return t;
  };
  auto prev = tails(0);
  for (long i = 1; i <= horizon; ++i) {
    auto cur = tails(i);
    for (long m = 0; m < width; ++m)
      if (cur[static_cast<size_t>(m)] < prev[static_cast<size_t>(m)] - tol) return false;
    prev = std::move(cur);
  }
  return true;
}

enum class Domination { PDominatesQ, QDominatesP, Neither, Both };

// Rowwise stochastic comparison of two kernels over states 0..horizon.
inline Domination dominates(const SingleBirthChain& p, const SingleBirthChain& q,
                            long horizon, double tol = kTolCmp) {
  if (horizon < 0) throw InvalidParameter("dominates: horizon >= 0");
  const long width = horizon + 2;
  bool p_ge = true, q_ge = true;
  for (long i = 0; i <= horizon; ++i) {
    auto rp = p.row(i, width);
    auto rq = q.row(i, width);
    double tp = 0.0, tq = 0.0;
    for (long m = width - 1; m >= 1; --m) {
      tp += rp[static_cast<size_t>(m)];
      tq += rq[static_cast<size_t>(m)];
      if (tp < tq - tol) p_ge = false;
      if (tq < tp - tol) q_ge = false;
    }
  }
  if (p_ge && q_ge) return Domination::Both;
  if (p_ge) return Domination::PDominatesQ;
  if (q_ge) return Domination::QDominatesP;
  return Domination::Neither;
}

// Northwest-corner truncation at state n with the cut mass re-entering via nu:
// rows 0..n-1 are unchanged, and row n becomes P[n][j] + nu[j] * P[n][n+1].
inline SingleBirthChain truncate_augment(const SingleBirthChain& chain, long n,
                                         const ProbVector& nu) {
  if (n < 0) throw InvalidParameter("truncate_augment: n >= 0 required");
  if (nu.tail_mass != 0.0)
    throw InvalidParameter("truncate_augment: nu must have no unplaced mass");
  if (nu.size() > n + 1)
    throw InvalidParameter("truncate_augment: nu must be supported on 0..n");
  if (std::abs(nu.total() - 1.0) > 1e-9)
    throw InvalidParameter("truncate_augment: nu must sum to 1");

  std::vector<std::vector<double>> rows;
  rows.reserve(static_cast<size_t>(n + 1));
  for (long i = 0; i < n; ++i) rows.push_back(chain.row(i, n + 1));
  auto last = chain.row(n, n + 1);
  const double bn = chain.birth_prob(n);
  for (long j = 0; j <= n; ++j) last[static_cast<size_t>(j)] += nu.at(j) * bn;
  rows.push_back(std::move(last));
  return SingleBirthChain::explicit_chain(
      std::move(rows), chain.description() + " truncated at " + std::to_string(n));
}

}  // namespace sbstein
