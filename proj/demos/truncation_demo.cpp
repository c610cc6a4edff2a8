// How much stationary accuracy does a finite truncation give up?
//
// Builds the embedded M/M/1 chain at rho = 0.5, truncates it at a range of
// cuts with the cut mass re-entering at the top state, and prints the
// certified distance bound next to the brute-force exact distance.

#include <cstdio>

#include "sbstein/sbstein.hpp"

int main() {
  using namespace sbstein;

  const auto chain = SingleBirthChain::mm1_embedded(0.5);
  const ProbVector full = stationary(chain);
  const SteinFactor sf = stein_factor_mm1(0.5);

  std::printf("%s, factor %.6f (%s)\n\n", chain.description().c_str(), sf.value,
              sf.tail_note.c_str());
  std::printf("%4s  %12s  %12s  %8s\n", "n", "bound", "exact", "ratio");
  for (long n = 2; n <= 14; n += 2) {
    const ProbVector nu = point_mass(n);
    const SingleBirthChain finite = truncate_augment(chain, n, nu);
    const ProbVector x = exact_stationary_finite(finite);
    BoundReport rep = truncation_bound(chain, sf, n, nu, x);
    rep.attach_oracle(exact_tv(x, full));
    std::printf("%4ld  %12.4e  %12.4e  %8.2f%s\n", n, rep.bound_value,
                *rep.oracle_value, rep.bound_value / *rep.oracle_value,
                *rep.holds ? "" : "  VIOLATED");
  }
  return 0;
}
