#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sbstein/chains.hpp"

using namespace sbstein;

namespace {

double geom_srw(double p, long k) {
  const double alpha = (2.0 * p - 1.0) / p;
  return alpha * std::pow(1.0 - alpha, double(k));
}

double geom_mm1(double rho, long k) {
  return (1.0 - rho) * std::pow(rho, double(k));
}

}  // namespace

TEST_CASE("reflected walk rows", "[chains]") {
  auto c = SingleBirthChain::reflected_srw(0.75);
  auto r0 = c.row(0, 2);
  REQUIRE(r0[0] == 0.75);
  REQUIRE(r0[1] == 0.25);
  auto r3 = c.row(3, 6);
  REQUIRE(r3[2] == 0.75);
  REQUIRE(r3[4] == 0.25);
  REQUIRE(r3[3] == 0.0);
  REQUIRE(c.birth_prob(0) == 0.25);
  REQUIRE(c.birth_prob(17) == 0.25);
}

TEST_CASE("reflected walk parameter domain", "[chains]") {
  REQUIRE_THROWS_AS(SingleBirthChain::reflected_srw(0.4), InvalidParameter);
  REQUIRE_THROWS_AS(SingleBirthChain::reflected_srw(0.5), InvalidParameter);
  REQUIRE_THROWS_AS(SingleBirthChain::reflected_srw(1.0), InvalidParameter);
}

TEST_CASE("mm1 rows are stochastic with the advertised entries", "[chains]") {
  const double rho = 0.5;
  auto c = SingleBirthChain::mm1_embedded(rho);
  for (long i : {0L, 1L, 5L, 40L}) {
    auto r = c.row(i, i + 2);
    double sum = 0.0;
    for (double v : r) sum += v;
    REQUIRE(std::abs(sum - 1.0) < 1e-13);
    REQUIRE(std::abs(r[0] - std::pow(1.5, -double(i + 1))) < 1e-15);
    REQUIRE(std::abs(r[static_cast<size_t>(i) + 1] - rho / (1.0 + rho)) < 1e-15);
  }
  REQUIRE_THROWS_AS(SingleBirthChain::mm1_embedded(0.0), InvalidParameter);
  REQUIRE_THROWS_AS(SingleBirthChain::mm1_embedded(1.0), InvalidParameter);
}

TEST_CASE("birth-death rows extend eventually-constant", "[chains]") {
  auto c = SingleBirthChain::birth_death({0.3, 0.2}, {0.0, 0.4});
  auto r0 = c.row(0, 3);
  REQUIRE(std::abs(r0[0] - 0.7) < 1e-15);
  REQUIRE(std::abs(r0[1] - 0.3) < 1e-15);
  auto r1 = c.row(1, 3);
  REQUIRE(std::abs(r1[0] - 0.4) < 1e-15);
  REQUIRE(std::abs(r1[1] - 0.4) < 1e-15);
  REQUIRE(std::abs(r1[2] - 0.2) < 1e-15);
  auto r9 = c.row(9, 11);
  REQUIRE(std::abs(r9[8] - 0.4) < 1e-15);
  REQUIRE(std::abs(r9[9] - 0.4) < 1e-15);
  REQUIRE(std::abs(r9[10] - 0.2) < 1e-15);
}

TEST_CASE("birth-death validation", "[chains]") {
  REQUIRE_THROWS_AS(SingleBirthChain::birth_death({0.3}, {0.1}), InvalidParameter);
  REQUIRE_THROWS_AS(SingleBirthChain::birth_death({0.6}, {0.0, 0.5}), InvalidParameter);
  REQUIRE_THROWS_AS(SingleBirthChain::birth_death({0.0}, {0.0, 0.5}),
                    ZeroBirthProbability);
}

TEST_CASE("explicit chain validation and queries", "[chains]") {
  auto c = SingleBirthChain::explicit_chain({{0.5, 0.5}, {1.0, 0.0}});
  REQUIRE(c.state_count().value() == 2);
  REQUIRE(c.birth_prob(0) == 0.5);
  REQUIRE(c.birth_prob(1) == 0.0);
  REQUIRE_THROWS_AS(c.row(2, 2), StateOutOfRange);
  REQUIRE_THROWS_AS(c.birth_prob(5), StateOutOfRange);

  REQUIRE_THROWS_AS(SingleBirthChain::explicit_chain({{0.2, 0.3, 0.5},
                                                      {0.5, 0.5, 0.0},
                                                      {0.0, 0.5, 0.5}}),
                    NotStochastic);  // mass above the superdiagonal
  REQUIRE_THROWS_AS(SingleBirthChain::explicit_chain({{0.5, 0.4}, {1.0, 0.0}}),
                    NotStochastic);  // row sum
  REQUIRE_THROWS_AS(SingleBirthChain::explicit_chain({{1.0, 0.0}, {1.0, 0.0}}),
                    ZeroBirthProbability);
}

TEST_CASE("stationary law matches the geometric closed forms", "[chains]") {
  TruncationPolicy pol;
  auto pi_srw = stationary(SingleBirthChain::reflected_srw(0.75), pol);
  REQUIRE(pi_srw.tail_mass <= pol.tail_eps);
  double worst = 0.0;
  for (long k = 0; k < pi_srw.size(); ++k)
    worst = std::max(worst, std::abs(pi_srw.at(k) - geom_srw(0.75, k)));
  REQUIRE(worst < 1e-10);

  auto pi_mm1 = stationary(SingleBirthChain::mm1_embedded(0.5), pol);
  REQUIRE(pi_mm1.tail_mass <= pol.tail_eps);
  worst = 0.0;
  for (long k = 0; k < pi_mm1.size(); ++k)
    worst = std::max(worst, std::abs(pi_mm1.at(k) - geom_mm1(0.5, k)));
  REQUIRE(worst < 1e-10);
}

TEST_CASE("stationary law is left-invariant on its window", "[chains]") {
  TruncationPolicy pol;
  for (auto chain : {SingleBirthChain::reflected_srw(0.8),
                     SingleBirthChain::mm1_embedded(0.7),
                     SingleBirthChain::birth_death({0.25}, {0.0, 0.75})}) {
    auto pi = stationary(chain, pol);
    const long W = pi.size();
    std::vector<double> flow(static_cast<size_t>(W) + 1, 0.0);
    for (long i = 0; i < W; ++i) {
      auto r = chain.row(i, i + 2);
      for (long j = 0; j <= i + 1; ++j)
        flow[static_cast<size_t>(j)] += pi.at(i) * r[static_cast<size_t>(j)];
    }
    double resid = 0.0;
    for (long j = 0; j < W; ++j) resid += std::abs(flow[static_cast<size_t>(j)] - pi.at(j));
    REQUIRE(resid <= 10.0 * pol.tail_eps);
  }
}

TEST_CASE("equivalent families agree on the stationary law", "[chains]") {
  TruncationPolicy pol;
  auto a = stationary(SingleBirthChain::reflected_srw(0.75), pol);
  auto b = stationary(SingleBirthChain::birth_death({0.25}, {0.0, 0.75}), pol);
  double diff = std::abs(a.tail_mass - b.tail_mass);
  for (long k = 0; k < std::max(a.size(), b.size()); ++k)
    diff += std::abs(a.at(k) - b.at(k));
  REQUIRE(diff <= 10.0 * pol.tail_eps);
}

TEST_CASE("stationary budget is enforced", "[chains]") {
  TruncationPolicy pol;
  pol.max_states = 120;
  REQUIRE_THROWS_AS(stationary(SingleBirthChain::mm1_embedded(0.9), pol),
                    BudgetExceeded);
}

TEST_CASE("explicit stationary is exact with no tail", "[chains]") {
  auto c = SingleBirthChain::explicit_chain({{0.5, 0.5}, {1.0, 0.0}});
  auto pi = stationary(c);
  REQUIRE(pi.tail_mass == 0.0);
  REQUIRE(std::abs(pi.at(0) - 2.0 / 3.0) < 1e-14);
  REQUIRE(std::abs(pi.at(1) - 1.0 / 3.0) < 1e-14);
}

TEST_CASE("stochastic monotonicity", "[chains]") {
  REQUIRE(is_stochastically_monotone(SingleBirthChain::reflected_srw(0.75), 60));
  REQUIRE(is_stochastically_monotone(SingleBirthChain::mm1_embedded(0.5), 60));
  // A chain that jumps down hard from state 1 is not monotone.
  auto bumpy = SingleBirthChain::birth_death({0.9, 0.1}, {0.0, 0.8});
  REQUIRE_FALSE(is_stochastically_monotone(bumpy, 10));
}

TEST_CASE("rowwise domination classification", "[chains]") {
  auto p75 = SingleBirthChain::reflected_srw(0.75);
  auto p80 = SingleBirthChain::reflected_srw(0.8);
  REQUIRE(dominates(p75, p80, 40) == Domination::PDominatesQ);
  REQUIRE(dominates(p80, p75, 40) == Domination::QDominatesP);
  REQUIRE(dominates(p75, p75, 40) == Domination::Both);
  auto m5 = SingleBirthChain::mm1_embedded(0.5);
  auto m6 = SingleBirthChain::mm1_embedded(0.6);
  REQUIRE(dominates(m6, m5, 40) == Domination::PDominatesQ);
}

TEST_CASE("truncate and augment", "[chains]") {
  auto c = SingleBirthChain::reflected_srw(0.75);
  auto q = truncate_augment(c, 3, point_mass(3));
  REQUIRE(q.state_count().value() == 4);
  auto r3 = q.row(3, 4);
  REQUIRE(std::abs(r3[2] - 0.75) < 1e-15);
  REQUIRE(std::abs(r3[3] - 0.25) < 1e-15);
  auto r1 = q.row(1, 4);
  REQUIRE(std::abs(r1[0] - 0.75) < 1e-15);
  REQUIRE(std::abs(r1[2] - 0.25) < 1e-15);

  ProbVector bad;
  bad.probs = {0.5};  // does not sum to 1
  REQUIRE_THROWS_AS(truncate_augment(c, 3, bad), InvalidParameter);
  ProbVector wide = point_mass(7);
  REQUIRE_THROWS_AS(truncate_augment(c, 3, wide), InvalidParameter);
}

TEST_CASE("uniform re-entry keeps the truncated chain stochastic", "[chains]") {
  ProbVector nu;
  nu.probs.assign(6, 1.0 / 6.0);
  auto q = truncate_augment(SingleBirthChain::mm1_embedded(0.5), 5, nu);
  for (long i = 0; i <= 5; ++i) {
    auto r = q.row(i, 6);
    double s = 0.0;
    for (double v : r) s += v;
    REQUIRE(std::abs(s - 1.0) < 1e-12);
  }
}
