#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qjf/random.hpp"
#include "qjf/stats.hpp"
#include "test_util.hpp"

using namespace qjf;

TEST_CASE("survival curve counting") {
  const std::vector<double> s = {10, 20, 30};
  const SurvivalCurve c = survival_curve(s);
  REQUIRE(c.support == std::vector<double>{10, 20, 30});
  CHECK(c.probability[0] == 1.0);
  CHECK(c.probability[1] == doctest::Approx(2.0 / 3.0));
  CHECK(c.probability[2] == doctest::Approx(1.0 / 3.0));

  const SurvivalCurve tied = survival_curve(std::vector<double>{5, 5, 5});
  REQUIRE(tied.support.size() == 1);
  CHECK(tied.support[0] == 5.0);
  CHECK(tied.probability[0] == 1.0);

  CHECK_THROWS_AS(survival_curve({}), std::invalid_argument);
}

TEST_CASE("survival curve tracks the exponential within a DKW envelope") {
  const double lambda = 2.0;
  const std::size_t n = 10000;
  RngEngine rng(5);
  std::vector<double> samples(n);
  for (auto& x : samples) x = exponential(rng, lambda);
  const SurvivalCurve c = survival_curve(samples);
  // 95% two-sided envelope for the ECDF, tripled per the tolerance spec.
  const double eps = std::sqrt(std::log(2.0 / 0.05) / (2.0 * static_cast<double>(n)));
  double worst = 0.0;
  for (std::size_t i = 0; i < c.support.size(); ++i)
    worst = std::max(worst, std::abs(c.probability[i] - std::exp(-lambda * c.support[i])));
  CHECK(worst < 3.0 * eps);
}

TEST_CASE("median conventions") {
  CHECK(median(std::vector<double>{3, 1, 2}) == 2.0);
  CHECK(median(std::vector<double>{1, 2, 3, 100}) == 2.5);
  CHECK(median(std::vector<double>{7}) == 7.0);
  CHECK_THROWS_AS(median({}), std::invalid_argument);
}

TEST_CASE("gain estimate basics") {
  const std::vector<double> with_fb = {10, 20, 30};
  const std::vector<double> without_fb = {5, 10, 15};
  const GainEstimate g = gain_estimate(with_fb, without_fb, 1000, 1);
  CHECK(g.g == 2.0);
  CHECK(g.ci_low <= g.g);
  CHECK(g.ci_high >= g.g);
  CHECK(g.n_with == 3);
  CHECK(g.n_without == 3);

  // Identical arms: unit gain, CI straddles 1.
  RngEngine rng(6);
  std::vector<double> arm(56);
  for (auto& x : arm) x = exponential(rng, 1.0 / 100.0);
  const GainEstimate same = gain_estimate(arm, arm, 2000, 2);
  CHECK(same.g == 1.0);
  CHECK(same.ci_low <= 1.0);
  CHECK(same.ci_high >= 1.0);

  CHECK_THROWS_AS(gain_estimate({}, without_fb, 100, 1), std::invalid_argument);
  CHECK_THROWS_AS(gain_estimate(with_fb, std::vector<double>{0, 0, 0}, 100, 1),
                  std::invalid_argument);
}

TEST_CASE("gain estimate is scale-equivariant") {
  RngEngine rng(7);
  std::vector<double> a(40), b(40);
  for (auto& x : a) x = 50.0 + 100.0 * uniform01(rng);
  for (auto& x : b) x = 20.0 + 60.0 * uniform01(rng);
  const double g0 = gain_estimate(a, b, 200, 3).g;

  std::vector<double> a2 = a, b2 = b;
  for (auto& x : a2) x *= 7.5;
  for (auto& x : b2) x *= 7.5;
  CHECK(gain_estimate(a2, b2, 200, 3).g == doctest::Approx(g0).epsilon(1e-12));

  std::vector<double> a3 = a;
  for (auto& x : a3) x *= 3.0;
  CHECK(gain_estimate(a3, b, 200, 3).g == doctest::Approx(3.0 * g0).epsilon(1e-12));
}

TEST_CASE("bootstrap is deterministic in the seed") {
  RngEngine rng(8);
  std::vector<double> a(30), b(30);
  for (auto& x : a) x = exponential(rng, 0.01);
  for (auto& x : b) x = exponential(rng, 0.02);
  const GainEstimate g1 = gain_estimate(a, b, 500, 77);
  const GainEstimate g2 = gain_estimate(a, b, 500, 77);
  CHECK(g1.ci_low == g2.ci_low);
  CHECK(g1.ci_high == g2.ci_high);
}

TEST_CASE("ks two-sample basics") {
  const std::vector<double> a = {1, 2, 3, 4};
  SUBCASE("identical samples") {
    const KsResult r = ks_two_sample(a, a);
    CHECK(r.d == 0.0);
    CHECK(r.p == 1.0);
  }
  SUBCASE("disjoint supports") {
    const std::vector<double> zeros = {0, 0, 0, 0};
    const std::vector<double> ones = {1, 1, 1, 1};
    const KsResult r = ks_two_sample(zeros, ones);
    CHECK(r.d == 1.0);
  }
  SUBCASE("hand-enumerated quarter offset") {
    // ECDF step differences peak at 1/4 for these interleaved supports.
    const std::vector<double> b = {1.5, 2.5, 3.5, 4.5};
    const KsResult r = ks_two_sample(a, b);
    CHECK(r.d == 0.25);
    CHECK(r.p == doctest::Approx(0.9969).epsilon(1e-3));
  }
  SUBCASE("size floor") {
    CHECK_THROWS_AS(ks_two_sample(std::vector<double>{1, 2, 3}, a),
                    std::invalid_argument);
  }
}

TEST_CASE("ks d is invariant under monotone transforms") {
  RngEngine rng(9);
  std::vector<double> a(50), b(60);
  for (auto& x : a) x = exponential(rng, 1.0);
  for (auto& x : b) x = 0.4 + exponential(rng, 2.0);
  const double d0 = ks_two_sample(a, b).d;
  auto warp = [](double x) { return std::exp(3.0 * x + 1.0); };
  for (auto& x : a) x = warp(x);
  for (auto& x : b) x = warp(x);
  CHECK(ks_two_sample(a, b).d == d0);
}

TEST_CASE("ks handles tied integer samples by weight") {
  // Counts with heavy ties; d computed from the weighted step functions.
  const std::vector<double> a = {1, 1, 1, 2, 2, 3, 3, 3};
  const std::vector<double> b = {1, 2, 2, 2, 3, 3, 4, 4};
  // F_a: 3/8, 5/8, 1, 1 ; F_b: 1/8, 4/8, 6/8, 1 at v = 1,2,3,4
  const KsResult r = ks_two_sample(a, b);
  CHECK(r.d == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("asymptotic p agrees with the permutation p on moderate samples") {
  RngEngine rng(10);
  std::vector<double> a(40), b(40);
  for (auto& x : a) x = exponential(rng, 1.0);
  for (auto& x : b) x = exponential(rng, 1.8);
  const KsResult asym = ks_two_sample(a, b);
  const double perm = ks_permutation_p(a, b, 10000, 11);
  // Loose agreement: same order of magnitude around the 1e-1..1e-2 scale.
  CHECK(asym.p > perm / 5.0);
  CHECK(asym.p < perm * 5.0);
}

TEST_CASE("ks null p-values are roughly uniform") {
  // 300-pair smoke version of the acceptance criterion (which runs 1000).
  RngEngine rng(12);
  int below = 0;
  const int reps = 300;
  std::vector<double> a(56), b(56);
  for (int r = 0; r < reps; ++r) {
    for (auto& x : a) x = exponential(rng, 1.0);
    for (auto& x : b) x = exponential(rng, 1.0);
    if (ks_two_sample(a, b).p < 0.05) ++below;
  }
  const double frac = static_cast<double>(below) / reps;
  CHECK(frac > 0.005);
  CHECK(frac < 0.09);
}

TEST_CASE("survival curve and median are consistent") {
  RngEngine rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 5 + static_cast<std::size_t>(uniform01(rng) * 60);
    std::vector<double> s(n);
    for (auto& x : s) x = std::floor(uniform01(rng) * 20.0);  // ties likely
    const double m = median(s);
    const SurvivalCurve c = survival_curve(s);
    // P(v) = probability at the first support point >= v (0 past the top).
    auto prob_at = [&](double v) {
      for (std::size_t i = 0; i < c.support.size(); ++i)
        if (c.support[i] >= v) return c.probability[i];
      return 0.0;
    };
    CHECK(prob_at(m) >= 0.5);
    CHECK(prob_at(m + 1e-9) <= 0.5 + 1e-12);
  }
}

TEST_CASE("predicted gain is the plain lifetime ratio") {
  CHECK(predicted_gain(240e-6, 70e-6) == doctest::Approx(3.4286).epsilon(1e-4));
  CHECK(predicted_gain(1.0, 1.0) == 1.0);
  CHECK(predicted_gain(217e-6, 70e-6) == doctest::Approx(3.1).epsilon(1e-12));
  CHECK_THROWS_AS(predicted_gain(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(predicted_gain(1.0, -1.0), std::invalid_argument);
}
