#include <catch2/catch_amalgamated.hpp>

#include <permix/demix_noiseless.hpp>

#include "../support/generators.hpp"

#include <algorithm>
#include <set>

using namespace permix;
using permix::testing::Rational;

TEST_CASE("minimal group size") {
  CHECK(min_group_size(1) == 1);
  CHECK(min_group_size(2) == 2);
  CHECK(min_group_size(3) == 2);
  CHECK(min_group_size(4) == 3);
  CHECK(min_group_size(8) == 4);
  CHECK(min_group_size(9) == 4);
}

TEST_CASE("signature bisection") {
  const auto sig1 = find_signature({Permutation::parse("2 3 1")});
  CHECK(sig1.tuple.empty());
  CHECK(sig1.pivot == Permutation::parse("2 3 1"));

  const auto a = Permutation::parse("1 2 3");
  const auto b = Permutation::parse("2 1 3");
  const auto sig2 = find_signature({a, b});
  CHECK(sig2.tuple.size() == 1);
  CHECK(chi(a, sig2.tuple) != chi(b, sig2.tuple));

  const auto h3 = hard_instance(3);
  const auto sig = find_signature(h3.sigma2);
  CHECK(sig.tuple.size() <= 2);
  for (const auto& p : h3.sigma2)
    if (!(p == sig.pivot)) REQUIRE(chi(p, sig.tuple) != chi(sig.pivot, sig.tuple));

  CHECK_THROWS_AS(find_signature({a, a}), std::invalid_argument);

  Rng rng{101};
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(8));
    const int k = 1 + static_cast<int>(rng.uniform_int(6));
    const auto perms =
        testing::random_distinct_permutations(n, std::min<int>(k, 24), rng);
    const auto s = find_signature(perms);
    int log2k = 0;
    while ((1 << (log2k + 1)) <= static_cast<int>(perms.size())) ++log2k;
    REQUIRE(s.tuple.size() <= log2k);
    for (const auto& p : perms)
      if (!(p == s.pivot)) REQUIRE(chi(p, s.tuple) != chi(s.pivot, s.tuple));
  }
}

TEST_CASE("discriminating tuples") {
  CHECK(find_tuple({Permutation::parse("3 1 2")}).empty());

  const auto t2 = find_tuple({Permutation::parse("1 2 3"), Permutation::parse("3 2 1")});
  CHECK(t2.size() == 1);

  Rng rng{103};
  for (int trial = 0; trial < 500; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(11));
    const int k = 1 + static_cast<int>(rng.uniform_int(6));
    if (k > 1 && n < 2) continue;
    const auto perms = testing::random_distinct_permutations(n, k, rng);
    const auto t = find_tuple(perms);
    REQUIRE(t.size() <= static_cast<int>(perms.size()) - 1);
    std::set<ChiVector> seen;
    for (const auto& p : perms) REQUIRE(seen.insert(chi(p, t)).second);
  }

  const auto dup = Permutation::parse("1 2");
  CHECK_THROWS_AS(find_tuple({dup, dup}), std::invalid_argument);
}

TEST_CASE("strong demixing base case") {
  for (int k : {1, 2, 5}) {
    TruthStrongOracle<Rational> oracle(DeltaMixture<Rational>(
        {{Permutation::identity(2), Rational(3, 4)},
         {Permutation::reversal(2), Rational(1, 4)}}));
    const auto got = demix_strong<Rational>(oracle, 2, k);
    CHECK(oracle.budget() == 1);
    REQUIRE(got.k() == 2);
    CHECK(got.components()[0].second == Rational(3, 4));
  }
}

TEST_CASE("strong demixing is comparison sort at k = 1") {
  Rng rng{111};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.uniform_int(9));
    const auto pi = random_permutation(n, rng);
    TruthStrongOracle<Rational> oracle(
        DeltaMixture<Rational>({{pi, Rational(1)}}));
    const auto got = demix_strong<Rational>(oracle, n, 1);
    REQUIRE(got.k() == 1);
    REQUIRE(got.components()[0].first == pi);
    REQUIRE(oracle.budget() <= strong_query_bound(n, 1));
  }
}

TEST_CASE("strong demixing recovers random grid mixtures") {
  Rng rng{113};
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const int n = 2 + static_cast<int>(rng.uniform_int(9));
    const auto planted = testing::random_grid_mixture(n, k, rng);
    TruthStrongOracle<Rational> oracle(planted);
    const auto got = demix_strong<Rational>(oracle, n, k);
    REQUIRE(got == planted);
    REQUIRE(oracle.budget() <= strong_query_bound(n, k));
  }
}

TEST_CASE("strong demixing float mode") {
  Rng rng{117};
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_int(3));
    const int n = 3 + static_cast<int>(rng.uniform_int(6));
    const auto perms = testing::random_distinct_permutations(n, k, rng);
    std::vector<double> w(static_cast<std::size_t>(k));
    double total = 0;
    for (double& x : w) total += (x = 0.2 + rng.uniform());
    std::vector<DeltaMixture<double>::Component> comps;
    for (int i = 0; i < k; ++i)
      comps.emplace_back(perms[static_cast<std::size_t>(i)],
                         w[static_cast<std::size_t>(i)] / total);
    const DeltaMixture<double> planted(std::move(comps));
    TruthStrongOracle<double> oracle(planted);
    const auto got = demix_strong<double>(oracle, n, k);
    REQUIRE(got.k() == planted.k());
    for (int i = 0; i < k; ++i) {
      REQUIRE(got.components()[static_cast<std::size_t>(i)].first ==
              planted.components()[static_cast<std::size_t>(i)].first);
      REQUIRE(std::abs(got.components()[static_cast<std::size_t>(i)].second -
                       planted.components()[static_cast<std::size_t>(i)].second) <
              1e-9);
    }
  }
}

TEST_CASE("insertion demixing base cases") {
  {
    TruthWeakOracle oracle({Permutation::identity(2)});
    CHECK(insertion_demixing(oracle, 2, 3) ==
          std::vector<Permutation>{Permutation::identity(2)});
  }
  {
    TruthWeakOracle oracle({Permutation::reversal(2)});
    CHECK(insertion_demixing(oracle, 2, 1) ==
          std::vector<Permutation>{Permutation::reversal(2)});
  }
  {
    TruthWeakOracle oracle({Permutation::identity(2), Permutation::reversal(2)});
    CHECK(insertion_demixing(oracle, 2, 2).size() == 2);
  }
}

TEST_CASE("insertion demixing recovers a singleton") {
  for (int n : {3, 6, 12}) {
    TruthWeakOracle oracle({Permutation::identity(n)});
    const auto got = insertion_demixing(oracle, n, 2);
    REQUIRE(got == std::vector<Permutation>{Permutation::identity(n)});
    REQUIRE(oracle.budget() <= weak_query_bound(n, 2));
  }
}

TEST_CASE("insertion demixing recovers random sets") {
  Rng rng{131};
  for (int trial = 0; trial < 60; ++trial) {
    const int k = 1 + static_cast<int>(rng.uniform_int(4));
    const int n = 2 + static_cast<int>(rng.uniform_int(11));
    auto planted = testing::random_distinct_permutations(n, k, rng);
    std::sort(planted.begin(), planted.end());
    TruthWeakOracle oracle(planted);
    const auto got = insertion_demixing(oracle, n, k);
    REQUIRE(got == planted);
    REQUIRE(oracle.budget() <= weak_query_bound(n, k));
  }
}

TEST_CASE("hard instances") {
  const auto h1 = hard_instance(1);
  CHECK(h1.sigma1 == std::vector<Permutation>{Permutation::reversal(2)});
  CHECK(h1.sigma2 == std::vector<Permutation>{Permutation::identity(2)});

  const auto h2 = hard_instance(2);
  auto expect1 = std::vector<Permutation>{Permutation::parse("2 1 3 4"),
                                          Permutation::parse("1 2 4 3")};
  auto expect2 = std::vector<Permutation>{Permutation::parse("1 2 3 4"),
                                          Permutation::parse("2 1 4 3")};
  std::sort(expect1.begin(), expect1.end());
  std::sort(expect2.begin(), expect2.end());
  CHECK(h2.sigma1 == expect1);
  CHECK(h2.sigma2 == expect2);

  for (int m : {1, 2, 3}) {
    const auto h = hard_instance(m);
    CHECK(h.sigma1.size() == (std::size_t{1} << (m - 1)));
    CHECK(h.sigma2.size() == (std::size_t{1} << (m - 1)));
    std::vector<Permutation> all = h.sigma1;
    all.insert(all.end(), h.sigma2.begin(), h.sigma2.end());
    for (const auto& p : all) {
      // adjacent-transposition involutions
      REQUIRE(p.compose(p) == Permutation::identity(2 * m));
      for (int j = 0; j < m; ++j) {
        const bool fixed = p(2 * j) == 2 * j && p(2 * j + 1) == 2 * j + 1;
        const bool swapped = p(2 * j) == 2 * j + 1 && p(2 * j + 1) == 2 * j;
        REQUIRE((fixed || swapped));
      }
    }
    std::sort(all.begin(), all.end());
    REQUIRE(std::adjacent_find(all.begin(), all.end()) == all.end());
  }
}

TEST_CASE("hard instances are indistinguishable below 2m") {
  const auto h2 = hard_instance(2);
  CHECK(indistinguishable(h2, 2));
  CHECK(indistinguishable(h2, 3));
  CHECK_FALSE(indistinguishable(h2, 4));

  const auto h3 = hard_instance(3);
  CHECK(indistinguishable(h3, 5));
  CHECK_FALSE(indistinguishable(h3, 6));

  CHECK_THROWS_AS(indistinguishable(h2, 1), std::invalid_argument);
}

TEST_CASE("hard instances agree on all short group queries") {
  // mixtures match every strong group-of-(m*-1) answer, the reason a demixer
  // restricted to that group size cannot tell them apart
  for (int m : {2, 3}) {
    const auto h = hard_instance(m);
    const auto m1 = DeltaMixture<double>::uniform(h.sigma1);
    const auto m2 = DeltaMixture<double>::uniform(h.sigma2);
    const int n = 2 * m;
    std::vector<std::pair<int, int>> all_pairs;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) all_pairs.push_back({i, j});

    std::vector<std::pair<int, int>> chosen(static_cast<std::size_t>(m - 1));
    auto rec = [&](auto&& self, int depth) -> bool {
      if (depth == m - 1) {
        const ComparisonTuple t(chosen);
        return strong_group_answer(m1, t) == strong_group_answer(m2, t);
      }
      for (const auto& pr : all_pairs) {
        chosen[static_cast<std::size_t>(depth)] = pr;
        if (!self(self, depth + 1)) return false;
      }
      return true;
    };
    REQUIRE(rec(rec, 0));
  }
}
