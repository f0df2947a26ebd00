#ifndef PERMIX_DEMIX_NOISELESS_HPP
#define PERMIX_DEMIX_NOISELESS_HPP

// Noiseless demixing of permutation mixtures from groups of pairwise
// comparisons: signature bisection, discriminating tuples, the strong-oracle
// recursion, insertion demixing over the weak oracle, and the hard-instance
// generator with exhaustive indistinguishability checking.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "permix/oracle.hpp"
#include "permix/permutation.hpp"

namespace permix {

/// Raised when oracle answers cannot come from any consistent mixture.
struct demix_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// m*_k = floor(log2 k) + 1: the minimal group size identifying a k-mixture.
inline int min_group_size(int k) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  return std::bit_width(static_cast<unsigned>(k)) - 1 + 1;
}

/// Query budget of the strong-oracle recursion: 1 + (k/2)(n-2)(n+1).
inline long long strong_query_bound(int n, int k) {
  return 1 + static_cast<long long>(k) * (n - 2) * (n + 1) / 2;
}

/// Query budget of insertion demixing: 1 + (k/2)(n-2)(n-1).
inline long long weak_query_bound(int n, int k) {
  return 1 + static_cast<long long>(k) * (n - 2) * (n - 1) / 2;
}

namespace detail {

inline void require_distinct(const std::vector<Permutation>& perms) {
  auto sorted = perms;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("permutations must be pairwise distinct");
}

// First index pair on which some two members of the set disagree; requires
// the set to contain at least two distinct permutations.
inline std::pair<int, int> first_disagreement(
    const std::vector<const Permutation*>& set) {
  const int n = set.front()->size();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const bool b0 = (*set.front())(i) < (*set.front())(j);
      for (std::size_t s = 1; s < set.size(); ++s)
        if (((*set[s])(i) < (*set[s])(j)) != b0) return {i, j};
    }
  throw demix_error("no disagreeing pair in a set of distinct permutations");
}

/// Insert a new top element into p ∈ S_{n} at rank q, producing an element
/// of S_{n+1} whose restriction to the old indices is p.
inline Permutation insert_new_element(const Permutation& p, int q) {
  const int n = p.size();
  std::vector<int> ranks(static_cast<std::size_t>(n) + 1);
  for (int e = 0; e < n; ++e)
    ranks[static_cast<std::size_t>(e)] = p(e) + (p(e) >= q ? 1 : 0);
  ranks[static_cast<std::size_t>(n)] = q;
  return Permutation::from_ranks(std::move(ranks));
}

}  // namespace detail

/// Signature of one member: a permutation π* in the set and a tuple ℐ with
/// |ℐ| ≤ floor(log2 k) such that χ(π*, ℐ) differs from χ(π, ℐ) for every
/// other member. Found by bisection: split on any pair where both halves are
/// nonempty and keep the smaller half.
struct Signature {
  Permutation pivot;
  ComparisonTuple tuple;
};

inline Signature find_signature(const std::vector<Permutation>& perms) {
  if (perms.empty()) throw std::invalid_argument("empty permutation set");
  detail::require_distinct(perms);
  std::vector<const Permutation*> live;
  live.reserve(perms.size());
  for (const auto& p : perms) live.push_back(&p);
  ComparisonTuple tuple;
  while (live.size() > 1) {
    const auto [i, j] = detail::first_disagreement(live);
    std::vector<const Permutation*> lt, gt;
    for (const auto* p : live)
      ((*p)(i) < (*p)(j) ? lt : gt).push_back(p);
    tuple.append({i, j});
    live = lt.size() <= gt.size() ? std::move(lt) : std::move(gt);
  }
  return {*live.front(), std::move(tuple)};
}

/// Discriminating tuple: |ℐ| ≤ k-1 and χ(π_i, ℐ) pairwise distinct. Walks
/// the inputs, appending one disagreeing pair whenever the new permutation
/// collides with an earlier one under the tuple built so far.
inline ComparisonTuple find_tuple(const std::vector<Permutation>& perms) {
  if (perms.empty()) throw std::invalid_argument("empty permutation set");
  detail::require_distinct(perms);
  const int n = perms.front().size();
  ComparisonTuple tuple;
  for (std::size_t j = 1; j < perms.size(); ++j) {
    const ChiVector cj = chi(perms[j], tuple);
    for (std::size_t i = 0; i < j; ++i) {
      if (chi(perms[i], tuple) != cj) continue;
      // at most one earlier collision is possible
      bool appended = false;
      for (int r = 0; r < n && !appended; ++r)
        for (int s = 0; s < n && !appended; ++s)
          if (r != s && perms[i](r) < perms[i](s) &&
              perms[j](r) > perms[j](s)) {
            tuple.append({r, s});
            appended = true;
          }
      if (!appended)
        throw demix_error("distinct permutations with no disagreeing pair");
      break;
    }
  }
  return tuple;
}

/// Recover a hidden k-component delta mixture, weights included, from a
/// strong oracle answering groups of m*_k pairwise comparisons. Recursion on
/// n: recover the mixture of restrictions, then insert the top element into
/// each component via the weight-difference sequence read off n-1 queries.
/// Uses at most 1 + (k/2)(n-2)(n+1) queries.
template <class W, StrongOracle<W> O>
DeltaMixture<W> demix_strong(O& oracle, int n, int k) {
  const int m = min_group_size(k);
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (n == 1)
    return DeltaMixture<W>({{Permutation::identity(1), W(1)}});

  if (n == 2) {
    ComparisonTuple base(std::vector<std::pair<int, int>>(
        static_cast<std::size_t>(m), {0, 1}));
    const ChiDist<W> ans = oracle.query(base);
    std::vector<typename DeltaMixture<W>::Component> comps;
    for (const auto& [v, w] : ans) {
      if (weight_traits<W>::is_zero(w)) continue;
      comps.emplace_back(v.bits.front() ? Permutation::identity(2)
                                        : Permutation::reversal(2),
                         w);
    }
    return DeltaMixture<W>(std::move(comps));
  }

  const DeltaMixture<W> sub = demix_strong<W>(oracle, n - 1, k);
  const int top = n - 1;  // element being inserted
  std::vector<typename DeltaMixture<W>::Component> recovered;
  std::vector<typename DeltaMixture<W>::Component> remaining(
      sub.components().begin(), sub.components().end());

  while (!remaining.empty()) {
    std::vector<Permutation> support;
    support.reserve(remaining.size());
    for (const auto& [p, w] : remaining) support.push_back(p);
    const Signature sig = find_signature(support);
    const ChiVector target = chi(sig.pivot, sig.tuple);
    const int ell = sig.tuple.size();

    // f[t] = total hidden weight of components restricting to the pivot that
    // rank the new element after the pivot's t-th ranked element; f[0] is the
    // pivot's aggregated weight.
    std::vector<W> f(static_cast<std::size_t>(n) + 1, W(0));
    for (const auto& [p, w] : remaining)
      if (p == sig.pivot) f[0] = w;

    for (int t = 1; t <= n - 1; ++t) {
      const int e = sig.pivot.element_at_rank(t - 1);
      ComparisonTuple query = sig.tuple;
      for (int pad = ell; pad < m; ++pad) query.append({e, top});
      ChiDist<W> ans = oracle.query(query);
      // subtract components already recovered at this level
      for (const auto& [p, w] : recovered) {
        const ChiVector v = chi(p, query);
        auto it = ans.find(v);
        if (it == ans.end())
          throw demix_error("oracle answer inconsistent with recovered part");
        it->second -= w;
      }
      W ft(0);
      for (const auto& [v, w] : ans) {
        if (weight_traits<W>::is_zero(w)) continue;
        if (w < W(0) && !weight_traits<W>::is_zero(w))
          throw demix_error("oracle answer inconsistent: negative residual");
        bool match = true;
        for (int r = 0; r < ell; ++r)
          if (v.bits[static_cast<std::size_t>(r)] !=
              target.bits[static_cast<std::size_t>(r)]) {
            match = false;
            break;
          }
        if (match && v.bits[static_cast<std::size_t>(ell)]) ft += w;
      }
      f[static_cast<std::size_t>(t)] = ft;
    }

    for (int q = 0; q <= n - 1; ++q) {
      W wq = f[static_cast<std::size_t>(q)] - f[static_cast<std::size_t>(q) + 1];
      if (weight_traits<W>::is_zero(wq)) continue;
      if (wq < W(0)) throw demix_error("weight sequence not nonincreasing");
      recovered.emplace_back(detail::insert_new_element(sig.pivot, q), wq);
    }

    std::erase_if(remaining,
                  [&](const auto& c) { return c.first == sig.pivot; });
  }
  return DeltaMixture<W>(std::move(recovered));
}

/// Learn a hidden set of at most k permutations from a weak oracle answering
/// groups of k+1 pairwise comparisons, by inserting element ν into each
/// member of the recovered set on [ν-1]. The discriminating tuple is reused
/// across levels until the set grows. At most 1 + (k/2)(n-2)(n-1) queries.
template <WeakOracle O>
std::vector<Permutation> insertion_demixing(O& oracle, int n, int k) {
  if (n < 2) throw std::invalid_argument("n must be >= 2");
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  const int width = k + 1;

  // base case on [2]
  ComparisonTuple base(std::vector<std::pair<int, int>>(
      static_cast<std::size_t>(width), {0, 1}));
  std::vector<Permutation> current;
  for (const ChiVector& v : oracle.query(base)) {
    current.push_back(v.bits.front() ? Permutation::identity(2)
                                     : Permutation::reversal(2));
  }
  std::sort(current.begin(), current.end());

  ComparisonTuple tuple;  // separates `current`; rebuilt only when it grows
  std::size_t prev_size = 1;

  for (int nu = 3; nu <= n; ++nu) {
    const int kp = static_cast<int>(current.size());
    if (kp > static_cast<int>(prev_size)) tuple = find_tuple(current);
    const int ell = tuple.size();
    if (ell + 2 > width)
      throw demix_error("separating tuple too long for the group size");
    const int top = nu - 1;

    std::vector<Permutation> next;
    for (const Permutation& sigma : current) {
      const ChiVector target = chi(sigma, tuple);
      auto matches_target = [&](const ChiVector& v) {
        for (int r = 0; r < ell; ++r)
          if (v.bits[static_cast<std::size_t>(r)] !=
              target.bits[static_cast<std::size_t>(r)])
            return false;
        return true;
      };

      std::vector<ChiVector> first_x, last_x;
      for (int r = 2; r <= nu - 1; ++r) {
        const int a = sigma.element_at_rank(r - 2);
        const int b = sigma.element_at_rank(r - 1);
        ComparisonTuple query = tuple;
        const std::pair<int, int> pad =
            ell > 0 ? tuple[0] : std::pair<int, int>{a, top};
        for (int c = ell; c < width - 2; ++c) query.append(pad);
        query.append({a, top});
        query.append({top, b});
        std::vector<ChiVector> x;
        for (const ChiVector& v : oracle.query(query))
          if (matches_target(v)) x.push_back(v);
        for (const ChiVector& v : x)
          if (v.bits[static_cast<std::size_t>(width) - 2] &&
              v.bits[static_cast<std::size_t>(width) - 1])
            next.push_back(detail::insert_new_element(sigma, r - 1));
        if (r == 2) first_x = x;
        if (r == nu - 1) last_x = std::move(x);
      }
      for (const ChiVector& v : first_x)
        if (!v.bits[static_cast<std::size_t>(width) - 2])
          next.push_back(detail::insert_new_element(sigma, 0));
      for (const ChiVector& v : last_x)
        if (!v.bits[static_cast<std::size_t>(width) - 1])
          next.push_back(detail::insert_new_element(sigma, nu - 1));
    }
    std::sort(next.begin(), next.end());
    next.erase(std::unique(next.begin(), next.end()), next.end());
    if (next.empty()) throw demix_error("no insertion matched an oracle answer");
    prev_size = current.size();
    current = std::move(next);
  }
  return current;
}

/// The two 2^{m-1}-permutation families on [2m] built from adjacent
/// transpositions: π_v swaps ranks 2j-1, 2j exactly when v_j = 1; Σ1 holds
/// the odd-parity v, Σ2 the even-parity v.
struct HardInstance {
  int m = 1;
  std::vector<Permutation> sigma1;
  std::vector<Permutation> sigma2;

  int n() const { return 2 * m; }
};

inline HardInstance hard_instance(int m) {
  if (m < 1) throw std::invalid_argument("m must be >= 1");
  HardInstance h;
  h.m = m;
  const int n = 2 * m;
  for (std::uint32_t v = 0; v < (std::uint32_t{1} << m); ++v) {
    std::vector<int> ranks(static_cast<std::size_t>(n));
    for (int j = 0; j < m; ++j) {
      const bool swap = (v >> j) & 1;
      ranks[static_cast<std::size_t>(2 * j)] = swap ? 2 * j + 1 : 2 * j;
      ranks[static_cast<std::size_t>(2 * j + 1)] = swap ? 2 * j : 2 * j + 1;
    }
    auto& side = (std::popcount(v) % 2 == 1) ? h.sigma1 : h.sigma2;
    side.push_back(Permutation::from_ranks(std::move(ranks)));
  }
  std::sort(h.sigma1.begin(), h.sigma1.end());
  std::sort(h.sigma2.begin(), h.sigma2.end());
  return h;
}

/// True iff the uniform mixtures over Σ1 and Σ2 answer every ℓ-wise strong
/// query identically; exhaustive over all C(2m, ℓ) index sets.
inline bool indistinguishable(const HardInstance& h, int ell) {
  if (ell < 2 || ell > h.n())
    throw std::invalid_argument("ell must lie in [2, 2m]");
  const auto m1 = DeltaMixture<double>::uniform(h.sigma1);
  const auto m2 = DeltaMixture<double>::uniform(h.sigma2);
  bool same = true;
  for_each_combination(h.n(), ell, [&](const std::vector<int>& c) {
    if (!same) return;
    const IndexSet J(c);
    if (lwise_strong_answer(m1, J) != lwise_strong_answer(m2, J)) same = false;
  });
  return same;
}

}  // namespace permix

#endif  // PERMIX_DEMIX_NOISELESS_HPP
