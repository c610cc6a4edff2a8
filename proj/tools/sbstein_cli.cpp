// Command line front end for the single-birth TV bounds: convergence sweeps,
// stationary-law comparisons, truncation studies, and a self-check battery.
//
// Exit codes: 0 all bounds hold (or all checks pass), 1 a reported bound is
// violated by its oracle, 2 usage or configuration error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "sbstein/sbstein.hpp"

namespace {

using namespace sbstein;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Closed form where one exists; the generic birth-death route otherwise.
SteinFactor factor_for(const SingleBirthChain& chain) {
  if (const auto* m = std::get_if<MM1Embedded>(&chain.family()))
    return stein_factor_mm1(m->rho);
  return stein_factor_bd(chain);
}

struct Sink {
  std::ofstream file;
  std::ostream* os = &std::cout;

  void open(const std::string& path) {
    if (path.empty()) return;
    file.open(path);
    if (!file) throw InvalidParameter("cannot open output file: " + path);
    os = &file;
  }
  std::ostream& out() { return *os; }
};

double parse_rate(const std::string& spec) {
  size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(spec, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != spec.size())
    throw InvalidParameter("--r expects a number or 'opt', got '" + spec + "'");
  return v;
}

ProbVector resolve_nu(const std::string& spec, long n) {
  if (spec == "uniform") {
    ProbVector nu;
    nu.probs.assign(static_cast<size_t>(n) + 1, 1.0 / double(n + 1));
    return nu;
  }
  if (spec.rfind("point:", 0) == 0) {
    const std::string arg = spec.substr(6);
    if (arg == "n") return point_mass(n);
    size_t pos = 0;
    long k = -1;
    try {
      k = std::stol(arg, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != arg.size() || k < 0)
      throw InvalidParameter("--nu point:<k> expects a nonnegative integer or 'n'");
    if (k > n)
      throw InvalidParameter("--nu point:" + arg + " lies beyond the cut n=" +
                             std::to_string(n));
    return point_mass(k);
  }
  throw InvalidParameter("--nu expects point:<k>, point:n, or uniform");
}

int run_convergence(const SingleBirthChain& chain, long t0, long t1,
                    const std::string& r_spec, const std::string& mode,
                    const TruncationPolicy& policy, Sink& sink) {
  if (t0 < 0 || t1 < t0)
    throw InvalidParameter("convergence: need 0 <= t0 <= t1");

  const ProbVector pi = stationary(chain, policy);
  const long window = std::max({t1 + 10, pi.size() + 2, long{16}});
  const MarginalTrace trace = iterate_marginals(chain, t1 + 1, window);

  std::vector<long> ts;
  std::vector<double> rates, bounds;
  if (mode == "mean") {
    const SteinFactor sf = factor_for(chain);
    for (long t = t0; t <= t1; ++t) {
      const auto rep = mean_drift_bound(chain, sf, mean_increment(trace, t));
      ts.push_back(t);
      rates.push_back(0.0);
      bounds.push_back(rep.bound_value);
    }
  } else {
    const ConvergenceCurve curve =
        (r_spec == "opt")
            ? convergence_curve(chain, t0, t1, RateChoice::Optimized)
            : convergence_curve(chain, t0, t1, RateChoice::Fixed, parse_rate(r_spec));
    ts = curve.t_values;
    rates = curve.r_used;
    bounds = curve.bounds;
  }

  bool ok = true;
  auto& os = sink.out();
  os << "t,r,bound,exact_tv,holds\n";
  for (size_t k = 0; k < ts.size(); ++k) {
    const double exact = exact_tv(trace.laws[static_cast<size_t>(ts[k])], pi);
    const bool holds = bounds[k] + kTolCmp >= exact;
    ok = ok && holds;
    os << ts[k] << ',' << fmt(rates[k]) << ',' << fmt(bounds[k]) << ','
       << fmt(exact) << ',' << (holds ? 1 : 0) << '\n';
  }
  return ok ? 0 : 1;
}

int run_compare(const SingleBirthChain& p_chain, const SingleBirthChain& q_chain,
                const TruncationPolicy& policy, double tol, Sink& sink) {
  const ProbVector pi_p = stationary(p_chain, policy);
  const ProbVector pi_q = stationary(q_chain, policy);
  const double exact = exact_tv(pi_p, pi_q);
  const SteinFactor sf = factor_for(p_chain);

  const long horizon = pi_q.size() + 32;
  const Domination dom = dominates(p_chain, q_chain, horizon);
  const char* ordering = "neither";
  if (dom == Domination::PDominatesQ) ordering = "p_dominates_q";
  if (dom == Domination::QDominatesP) ordering = "q_dominates_p";
  if (dom == Domination::Both) ordering = "both";

  struct Row {
    const char* variant;
    BoundReport rep;
  };
  std::vector<Row> rows;
  rows.push_back({"rowwise", rowwise_comparison_bound(p_chain, sf, q_chain, pi_q,
                                                horizon, tol)});
  if (dom != Domination::Neither)
    rows.push_back({"ordered", ordered_comparison_bound(p_chain, sf, pi_q, dom,
                                                    horizon, tol)});
  if (is_birth_death_shaped(p_chain) && is_birth_death_shaped(q_chain))
    rows.push_back({"rate_perturbation",
                    bd_comparison_bound(p_chain, q_chain, pi_q)});

  bool ok = true;
  auto& os = sink.out();
  os << "variant,bound,exact_tv,holds,detail\n";
  for (auto& row : rows) {
    row.rep.attach_oracle(exact);
    ok = ok && *row.rep.holds;
    os << row.variant << ',' << fmt(row.rep.bound_value) << ',' << fmt(exact)
       << ',' << (*row.rep.holds ? 1 : 0) << ",ordering=" << ordering << '\n';
  }
  return ok ? 0 : 1;
}

int run_truncation(const SingleBirthChain& chain, long n0, long n1,
                   const std::string& nu_spec, const TruncationPolicy& policy,
                   Sink& sink) {
  if (n0 < 0 || n1 < n0) throw InvalidParameter("truncation: need 0 <= n0 <= n1");

  const ProbVector full = stationary(chain, policy);
  const SteinFactor sf = factor_for(chain);

  bool ok = true;
  auto& os = sink.out();
  os << "n,bound,exact_tv,ratio,holds\n";
  for (long n = n0; n <= n1; ++n) {
    const ProbVector nu = resolve_nu(nu_spec, n);
    const SingleBirthChain finite = truncate_augment(chain, n, nu);
    const ProbVector x = exact_stationary_finite(finite);
    BoundReport rep = truncation_bound(chain, sf, n, nu, x);
    rep.attach_oracle(exact_tv(x, full));
    ok = ok && *rep.holds;
    os << n << ',' << fmt(rep.bound_value) << ',' << fmt(*rep.oracle_value) << ','
       << fmt(rep.bound_value / *rep.oracle_value) << ','
       << (*rep.holds ? 1 : 0) << '\n';
  }
  return ok ? 0 : 1;
}

// One pass/fail line per property. Throwing checks fail rather than abort so
// the battery always reports every line it attempted.
class Checker {
 public:
  explicit Checker(std::ostream& os) : os_(os) {}

  template <typename Fn>
  void run(const std::string& label, Fn&& body) {
    try {
      body();
      ++passed_;
      os_ << "[PASS] " << label << '\n';
    } catch (const std::exception& e) {
      ++failed_;
      os_ << "[FAIL] " << label << " (" << e.what() << ")\n";
    }
  }

  void skip(const std::string& label, const std::string& why) {
    os_ << "[SKIP] " << label << " (" << why << ")\n";
  }

  int finish() {
    os_ << "verify: " << passed_ << " passed, " << failed_ << " failed\n";
    return failed_ == 0 ? 0 : 1;
  }

 private:
  std::ostream& os_;
  int passed_ = 0;
  int failed_ = 0;
};

void require(bool cond, const std::string& what) {
  if (!cond) throw Error(what);
}

std::vector<TestFunction> random_test_functions(int count, long support,
                                                unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::vector<TestFunction> hs;
  for (int k = 0; k < count; ++k) {
    std::vector<double> vals(static_cast<size_t>(support));
    for (auto& v : vals) v = unif(rng);
    hs.emplace_back(std::move(vals), 0.0, 1.0);
  }
  return hs;
}

void check_poisson_residuals(const SingleBirthChain& chain, const ProbVector& pi,
                             long J, int count) {
  const auto hs = random_test_functions(count, J + 20, 20240901u);
  const auto sols = solve_poisson(chain, hs, pi, J);
  for (size_t k = 0; k < hs.size(); ++k) {
    const double res = verify_poisson(chain, hs[k], sols[k]);
    require(res <= kTolPoisson,
            "residual " + fmt(res) + " exceeds " + fmt(kTolPoisson));
  }
}

void check_tv_contraction(const SingleBirthChain& chain, const ProbVector& pi,
                          long t_max) {
  const long window = std::max({t_max + 10, pi.size() + 2, long{16}});
  const MarginalTrace trace = iterate_marginals(chain, t_max, window);
  double prev = exact_tv(trace.laws[0], pi);
  for (long t = 1; t <= t_max; ++t) {
    const double cur = exact_tv(trace.laws[static_cast<size_t>(t)], pi);
    require(cur <= prev + kTolCmp,
            "d_TV rose from " + fmt(prev) + " to " + fmt(cur) + " at t=" +
                std::to_string(t));
    prev = cur;
  }
}

int run_verify(const std::optional<SingleBirthChain>& user_chain,
               const TruncationPolicy& policy, Sink& sink) {
  Checker check(sink.out());

  auto check_geometric = [&](const SingleBirthChain& chain, double ratio) {
    check.run("stationary matches geometric law: " + chain.description(), [&] {
      const ProbVector pi = stationary(chain, policy);
      double worst = 0.0;
      for (long k = 0; k < pi.size(); ++k)
        worst = std::max(worst, std::abs(pi.at(k) - (1.0 - ratio) *
                                                        std::pow(ratio, double(k))));
      require(worst <= 1e-8, "max entry error " + fmt(worst));
    });
  };
  for (double p : {0.6, 0.75, 0.9})
    check_geometric(SingleBirthChain::reflected_srw(p), (1.0 - p) / p);
  for (double rho : {0.3, 0.5, 0.8})
    check_geometric(SingleBirthChain::mm1_embedded(rho), rho);

  const auto srw = SingleBirthChain::reflected_srw(0.75);
  const auto mm1 = SingleBirthChain::mm1_embedded(0.5);
  for (const auto* chain : {&srw, &mm1}) {
    const ProbVector pi = stationary(*chain, policy);
    check.run("poisson residual within budget: " + chain->description(),
              [&] { check_poisson_residuals(*chain, pi, 60, 10); });
    check.run("numerical factor within closed form: " + chain->description(), [&] {
      const SteinFactor closed = factor_for(*chain);
      const SteinFactor num = stein_factor_numerical(*chain, pi, 60, 60);
      require(num.value <= closed.value + 1e-6,
              "numerical " + fmt(num.value) + " vs closed " + fmt(closed.value));
    });
    check.run("stochastically monotone: " + chain->description(),
              [&] { require(is_stochastically_monotone(*chain, 60), "ordering fails"); });
    check.run("d_TV to stationarity non-increasing: " + chain->description(),
              [&] { check_tv_contraction(*chain, pi, 20); });
  }

  if (user_chain) {
    const SingleBirthChain& chain = *user_chain;
    ProbVector pi;
    check.run("stationary window converges: " + chain.description(),
              [&] { pi = stationary(chain, policy); });
    const long n_states = chain.state_count().value_or(-1);
    const long J = (n_states > 0) ? std::min<long>(60, n_states - 2) : 60;
    if (J < 0) {
      check.skip("poisson residual within budget: " + chain.description(),
                 "chain too small for an interior window");
    } else {
      check.run("poisson residual within budget: " + chain.description(),
                [&] { check_poisson_residuals(chain, pi, J, 5); });
    }
    if (is_birth_death_shaped(chain) && J >= 0) {
      check.run("numerical factor within closed form: " + chain.description(), [&] {
        const SteinFactor closed = stein_factor_bd(chain);
        const SteinFactor num = stein_factor_numerical(chain, pi, J, J);
        require(num.value <= closed.value + 1e-6,
                "numerical " + fmt(num.value) + " vs closed " + fmt(closed.value));
      });
    } else {
      check.skip("numerical factor within closed form: " + chain.description(),
                 "no closed form for this kernel");
    }
    long mono_horizon = 60;
    if (n_states > 0) mono_horizon = std::min(mono_horizon, n_states - 1);
    if (mono_horizon < 1) {
      check.skip("stochastically monotone: " + chain.description(),
                 "single state, nothing to order");
    } else {
      check.run("stochastically monotone: " + chain.description(), [&] {
        require(is_stochastically_monotone(chain, mono_horizon), "ordering fails");
      });
    }
  }

  return check.finish();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"total-variation bounds for single-birth Markov chains"};
  app.require_subcommand(1);

  std::string chain_path, chain2_path, out_path;
  TruncationPolicy policy;
  double tol = kTolBoundWindow;
  app.add_option("--tail-eps", policy.tail_eps, "stationary-window tail budget");
  app.add_option("--max-states", policy.max_states, "hard cap on computed windows");
  app.add_option("--tol", tol, "beyond-window allowance inside the bounds");

  long t0 = 0, t1 = 0, n0 = 0, n1 = 0;
  std::string r_spec = "1.0", mode = "rate", nu_spec = "point:n";

  auto* conv = app.add_subcommand("convergence",
                                  "bound d_TV(Z_t, pi) over a time range");
  conv->fallthrough();
  conv->add_option("--chain", chain_path, "chain config (JSON)")->required();
  conv->add_option("--t0", t0, "first time step")->required();
  conv->add_option("--t1", t1, "last time step")->required();
  conv->add_option("--r", r_spec, "rate r >= 1, or 'opt' for a per-step grid search");
  conv->add_option("--mode", mode, "rate: coupling formula; mean: iterated increments")
      ->check(CLI::IsMember({"rate", "mean"}));
  conv->add_option("--out", out_path, "write CSV here instead of stdout");

  auto* cmp = app.add_subcommand("compare",
                                 "bound d_TV between two stationary laws");
  cmp->fallthrough();
  cmp->add_option("--chain", chain_path, "first chain config (JSON)")->required();
  cmp->add_option("--chain2", chain2_path, "second chain config (JSON)")->required();
  cmp->add_option("--out", out_path, "write CSV here instead of stdout");

  auto* trunc = app.add_subcommand("truncation",
                                   "bound the cost of a northwest truncation");
  trunc->fallthrough();
  trunc->add_option("--chain", chain_path, "chain config (JSON)")->required();
  trunc->add_option("--n0", n0, "first cut state")->required();
  trunc->add_option("--n1", n1, "last cut state")->required();
  trunc->add_option("--nu", nu_spec, "re-entry law: point:<k>, point:n, or uniform");
  trunc->add_option("--out", out_path, "write CSV here instead of stdout");

  auto* verify = app.add_subcommand("verify", "self-check battery");
  verify->fallthrough();
  verify->add_option("--chain", chain_path, "also check this chain config (JSON)");
  verify->add_option("--out", out_path, "write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "sbstein: " << e.what() << '\n';
    return 2;
  }

  try {
    Sink sink;
    sink.open(out_path);
    if (*conv) {
      const auto chain = load_chain_file(chain_path);
      return run_convergence(chain, t0, t1, r_spec, mode, policy, sink);
    }
    if (*cmp) {
      const auto p_chain = load_chain_file(chain_path);
      const auto q_chain = load_chain_file(chain2_path);
      return run_compare(p_chain, q_chain, policy, tol, sink);
    }
    if (*trunc) {
      const auto chain = load_chain_file(chain_path);
      return run_truncation(chain, n0, n1, nu_spec, policy, sink);
    }
    std::optional<SingleBirthChain> user_chain;
    if (!chain_path.empty()) user_chain = load_chain_file(chain_path);
    return run_verify(user_chain, policy, sink);
  } catch (const sbstein::Error& e) {
    std::cerr << "sbstein: " << e.what() << '\n';
    return 2;
  }
}
