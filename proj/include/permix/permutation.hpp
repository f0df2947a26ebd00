#ifndef PERMIX_PERMUTATION_HPP
#define PERMIX_PERMUTATION_HPP

// Permutation algebra: Kendall tau, restrictions, relative orders,
// comparison vectors, block structures.
//
// All indices and ranks are 0-based in code. The text format used on the
// wire is the 1-based rank-order listing (the element ranked first comes
// first); see display()/from_display().

#include <algorithm>
#include <compare>
#include <cstdint>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace permix {

/// Sorted, deduplicated set of 0-based indices.
class IndexSet {
 public:
  IndexSet() = default;
  explicit IndexSet(std::vector<int> indices) : v_(std::move(indices)) {
    std::sort(v_.begin(), v_.end());
    v_.erase(std::unique(v_.begin(), v_.end()), v_.end());
  }
  static IndexSet full(int n) {
    std::vector<int> v(static_cast<std::size_t>(n));
    std::iota(v.begin(), v.end(), 0);
    IndexSet s;
    s.v_ = std::move(v);
    return s;
  }

  int size() const { return static_cast<int>(v_.size()); }
  bool empty() const { return v_.empty(); }
  int operator[](int i) const { return v_[static_cast<std::size_t>(i)]; }
  bool contains(int x) const {
    return std::binary_search(v_.begin(), v_.end(), x);
  }
  const std::vector<int>& values() const { return v_; }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  friend auto operator<=>(const IndexSet&, const IndexSet&) = default;

 private:
  std::vector<int> v_;
};

/// A permutation of {0, ..., n-1}; π(i) is the rank of element i.
class Permutation {
 public:
  Permutation() = default;

  /// Build from the rank map: ranks[i] = π(i). Must be a bijection.
  static Permutation from_ranks(std::vector<int> ranks) {
    Permutation p;
    p.ranks_ = std::move(ranks);
    p.check();
    return p;
  }

  static Permutation identity(int n) {
    if (n < 1) throw std::invalid_argument("permutation size must be >= 1");
    std::vector<int> r(static_cast<std::size_t>(n));
    std::iota(r.begin(), r.end(), 0);
    Permutation p;
    p.ranks_ = std::move(r);
    return p;
  }

  /// π(i) = n-1-i: ranks everything in reverse index order.
  static Permutation reversal(int n) {
    Permutation p = identity(n);
    std::reverse(p.ranks_.begin(), p.ranks_.end());
    return p;
  }

  /// Build from rank-order element listing, 1-based: elems[r] is the element
  /// ranked r+1. E.g. {3,2,4,1} means π(3)=1, π(2)=2, π(4)=3, π(1)=4.
  static Permutation from_display(const std::vector<int>& elems) {
    const int n = static_cast<int>(elems.size());
    std::vector<int> ranks(elems.size(), -1);
    for (int r = 0; r < n; ++r) {
      const int e = elems[static_cast<std::size_t>(r)] - 1;
      if (e < 0 || e >= n)
        throw std::invalid_argument("display element out of range");
      ranks[static_cast<std::size_t>(e)] = r;
    }
    return from_ranks(std::move(ranks));
  }

  /// Parse whitespace-separated display notation, e.g. "3 2 4 1".
  static Permutation parse(const std::string& line) {
    std::istringstream in(line);
    std::vector<int> elems;
    int x = 0;
    while (in >> x) elems.push_back(x);
    if (elems.empty()) throw std::invalid_argument("empty permutation line");
    return from_display(elems);
  }

  int size() const { return static_cast<int>(ranks_.size()); }
  /// Rank of element i (0-based).
  int operator()(int i) const { return ranks_[static_cast<std::size_t>(i)]; }
  const std::vector<int>& ranks() const { return ranks_; }

  /// Element ranked r-th (0-based); the inverse map evaluated at r.
  int element_at_rank(int r) const {
    if (inv_.empty()) {
      // lazily materialized; Permutation is otherwise immutable
      const_cast<Permutation*>(this)->build_inverse();
    }
    return inv_[static_cast<std::size_t>(r)];
  }

  Permutation inverse() const {
    std::vector<int> r(ranks_.size());
    for (int i = 0; i < size(); ++i)
      r[static_cast<std::size_t>(ranks_[static_cast<std::size_t>(i)])] = i;
    return from_ranks(std::move(r));
  }

  /// Composition (a.compose(b))(i) = a(b(i)).
  Permutation compose(const Permutation& b) const {
    if (size() != b.size())
      throw std::invalid_argument("composing permutations of different sizes");
    std::vector<int> r(ranks_.size());
    for (int i = 0; i < size(); ++i)
      r[static_cast<std::size_t>(i)] = (*this)(b(i));
    return from_ranks(std::move(r));
  }

  /// 1-based rank-order element listing (the paper-style display notation).
  std::vector<int> display() const {
    std::vector<int> out(ranks_.size());
    for (int i = 0; i < size(); ++i)
      out[static_cast<std::size_t>((*this)(i))] = i + 1;
    return out;
  }

  std::string to_string() const {
    std::ostringstream out;
    const auto d = display();
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (i) out << ' ';
      out << d[i];
    }
    return out.str();
  }

  friend bool operator==(const Permutation& a, const Permutation& b) {
    return a.ranks_ == b.ranks_;
  }
  friend std::strong_ordering operator<=>(const Permutation& a,
                                          const Permutation& b) {
    return a.ranks_ <=> b.ranks_;
  }

 private:
  void check() const {
    if (ranks_.empty())
      throw std::invalid_argument("permutation size must be >= 1");
    std::vector<char> seen(ranks_.size(), 0);
    for (int v : ranks_) {
      if (v < 0 || v >= size() || seen[static_cast<std::size_t>(v)])
        throw std::invalid_argument("ranks are not a bijection");
      seen[static_cast<std::size_t>(v)] = 1;
    }
  }
  void build_inverse() {
    inv_.resize(ranks_.size());
    for (int i = 0; i < size(); ++i)
      inv_[static_cast<std::size_t>(ranks_[static_cast<std::size_t>(i)])] = i;
  }

  std::vector<int> ranks_;
  std::vector<int> inv_;  // cache for element_at_rank
};

/// Injection from a sorted index set J into {0, ..., n-1}.
/// values[t] is the image of domain[t].
struct Injection {
  IndexSet domain;
  std::vector<int> values;

  friend auto operator<=>(const Injection&, const Injection&) = default;
};

/// Bijection from a sorted index set J onto {0, ..., |J|-1}: the relative
/// order of J's elements. values[t] is the local rank of domain[t].
struct RelativeOrder {
  IndexSet domain;
  std::vector<int> values;

  /// Local rank of index j (must be in the domain).
  int rank_of(int j) const {
    const auto& d = domain.values();
    const auto it = std::lower_bound(d.begin(), d.end(), j);
    if (it == d.end() || *it != j)
      throw std::invalid_argument("index not in relative-order domain");
    return values[static_cast<std::size_t>(it - d.begin())];
  }

  /// Display listing of the domain's elements in local rank order, 1-based.
  std::string to_string() const {
    std::vector<int> by_rank(values.size());
    for (std::size_t t = 0; t < values.size(); ++t)
      by_rank[static_cast<std::size_t>(values[t])] =
          domain[static_cast<int>(t)] + 1;
    std::ostringstream out;
    for (std::size_t i = 0; i < by_rank.size(); ++i) {
      if (i) out << ' ';
      out << by_rank[i];
    }
    return out.str();
  }

  friend auto operator<=>(const RelativeOrder&, const RelativeOrder&) = default;
};

/// An ordered tuple of index pairs (i_r, j_r), i_r != j_r; repeats allowed.
class ComparisonTuple {
 public:
  ComparisonTuple() = default;
  explicit ComparisonTuple(std::vector<std::pair<int, int>> pairs)
      : pairs_(std::move(pairs)) {
    for (const auto& [i, j] : pairs_)
      if (i == j)
        throw std::invalid_argument("comparison pair has equal coordinates");
  }

  int size() const { return static_cast<int>(pairs_.size()); }
  bool empty() const { return pairs_.empty(); }
  const std::pair<int, int>& operator[](int r) const {
    return pairs_[static_cast<std::size_t>(r)];
  }
  const std::vector<std::pair<int, int>>& pairs() const { return pairs_; }
  void append(std::pair<int, int> p) {
    if (p.first == p.second)
      throw std::invalid_argument("comparison pair has equal coordinates");
    pairs_.push_back(p);
  }

  /// Set of all indices appearing in the tuple.
  IndexSet support() const {
    std::vector<int> v;
    v.reserve(pairs_.size() * 2);
    for (const auto& [i, j] : pairs_) {
      v.push_back(i);
      v.push_back(j);
    }
    return IndexSet(std::move(v));
  }

  friend auto operator<=>(const ComparisonTuple&, const ComparisonTuple&) =
      default;

 private:
  std::vector<std::pair<int, int>> pairs_;
};

/// Binary answer vector to a comparison tuple.
struct ChiVector {
  std::vector<std::uint8_t> bits;

  int size() const { return static_cast<int>(bits.size()); }
  friend auto operator<=>(const ChiVector&, const ChiVector&) = default;

  std::string to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (auto b : bits) s.push_back(b ? '1' : '0');
    return s;
  }
};

/// Sequence of (B_j, B'_j) pairs: disjoint index sets B_j paired with
/// disjoint contiguous rank windows B'_j listed in increasing order.
class BlockStructure {
 public:
  struct Block {
    IndexSet indices;    // B_j
    int image_lo = 0;    // min of the contiguous B'_j
    int image_hi = -1;   // max of B'_j (inclusive)
    int size() const { return image_hi - image_lo + 1; }
  };

  BlockStructure() = default;
  explicit BlockStructure(std::vector<Block> blocks)
      : blocks_(std::move(blocks)) {
    int prev_hi = -1;
    std::vector<int> all;
    for (const auto& b : blocks_) {
      if (b.indices.empty() || b.indices.size() != b.size())
        throw std::invalid_argument("block sizes do not match");
      if (b.image_lo <= prev_hi)
        throw std::invalid_argument("block images must be increasing");
      prev_hi = b.image_hi;
      for (int i : b.indices) all.push_back(i);
    }
    IndexSet u(all);
    if (u.size() != static_cast<int>(all.size()))
      throw std::invalid_argument("block index sets must be disjoint");
  }

  const std::vector<Block>& blocks() const { return blocks_; }
  /// Union of the B_j.
  IndexSet support() const {
    std::vector<int> all;
    for (const auto& b : blocks_)
      for (int i : b.indices) all.push_back(i);
    return IndexSet(std::move(all));
  }
  /// Sum of block sizes.
  int total_size() const {
    int s = 0;
    for (const auto& b : blocks_) s += b.size();
    return s;
  }

 private:
  std::vector<Block> blocks_;
};

namespace detail {

// Counts inversions of v in place; O(n log n) merge sort.
inline long long count_inversions(std::vector<int>& v, std::vector<int>& tmp,
                                  int lo, int hi) {
  if (hi - lo <= 1) return 0;
  const int mid = lo + (hi - lo) / 2;
  long long inv = count_inversions(v, tmp, lo, mid) +
                  count_inversions(v, tmp, mid, hi);
  int a = lo, b = mid, t = lo;
  while (a < mid && b < hi) {
    if (v[static_cast<std::size_t>(a)] <= v[static_cast<std::size_t>(b)]) {
      tmp[static_cast<std::size_t>(t++)] = v[static_cast<std::size_t>(a++)];
    } else {
      inv += mid - a;
      tmp[static_cast<std::size_t>(t++)] = v[static_cast<std::size_t>(b++)];
    }
  }
  while (a < mid) tmp[static_cast<std::size_t>(t++)] = v[static_cast<std::size_t>(a++)];
  while (b < hi) tmp[static_cast<std::size_t>(t++)] = v[static_cast<std::size_t>(b++)];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return inv;
}

}  // namespace detail

/// Kendall tau distance: number of index pairs ordered oppositely by a and b.
/// O(n log n) by counting inversions of a read in b's rank order.
inline long long kendall_tau(const Permutation& a, const Permutation& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("kendall_tau: size mismatch");
  const int n = a.size();
  std::vector<int> w(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r)
    w[static_cast<std::size_t>(r)] = a(b.element_at_rank(r));
  std::vector<int> tmp(w.size());
  return detail::count_inversions(w, tmp, 0, n);
}

/// Restriction π|_J: the injection j ↦ π(j) on J.
inline Injection restrict_to(const Permutation& p, const IndexSet& J) {
  if (J.empty()) throw std::invalid_argument("restrict: empty index set");
  Injection inj;
  inj.domain = J;
  inj.values.reserve(static_cast<std::size_t>(J.size()));
  for (int j : J) {
    if (j < 0 || j >= p.size())
      throw std::invalid_argument("restrict: index out of range");
    inj.values.push_back(p(j));
  }
  return inj;
}

/// Rank-compress an injection to a relative order on its domain.
inline RelativeOrder compress(const Injection& inj) {
  const int l = inj.domain.size();
  std::vector<int> order(static_cast<std::size_t>(l));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return inj.values[static_cast<std::size_t>(a)] <
           inj.values[static_cast<std::size_t>(b)];
  });
  RelativeOrder ro;
  ro.domain = inj.domain;
  ro.values.assign(static_cast<std::size_t>(l), 0);
  for (int r = 0; r < l; ++r)
    ro.values[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
  return ro;
}

/// Relative order π‖_J: the restriction rank-compressed onto {0,...,|J|-1}.
inline RelativeOrder relative_order(const Permutation& p, const IndexSet& J) {
  return compress(restrict_to(p, J));
}

/// Comparison vector χ(π, ℐ): bit r is 1 iff π(i_r) < π(j_r).
inline ChiVector chi(const Permutation& p, const ComparisonTuple& t) {
  ChiVector v;
  v.bits.reserve(static_cast<std::size_t>(t.size()));
  for (const auto& [i, j] : t.pairs()) {
    if (i < 0 || i >= p.size() || j < 0 || j >= p.size())
      throw std::invalid_argument("chi: index out of range");
    v.bits.push_back(static_cast<std::uint8_t>(p(i) < p(j)));
  }
  return v;
}

/// Comparison vector read off a relative order (indices must lie in its
/// domain). Agrees with chi on the original permutation.
inline ChiVector chi(const RelativeOrder& ro, const ComparisonTuple& t) {
  ChiVector v;
  v.bits.reserve(static_cast<std::size_t>(t.size()));
  for (const auto& [i, j] : t.pairs())
    v.bits.push_back(static_cast<std::uint8_t>(ro.rank_of(i) < ro.rank_of(j)));
  return v;
}

/// True iff π maps each B_j onto B'_j setwise.
inline bool satisfies_block(const Permutation& p, const BlockStructure& bs) {
  for (const auto& b : bs.blocks()) {
    std::vector<int> image;
    image.reserve(static_cast<std::size_t>(b.indices.size()));
    for (int i : b.indices) {
      if (i < 0 || i >= p.size())
        throw std::invalid_argument("block index out of range");
      image.push_back(p(i));
    }
    std::sort(image.begin(), image.end());
    if (image.front() != b.image_lo || image.back() != b.image_hi)
      return false;
    // sorted distinct values spanning [lo, hi] with |image| = hi-lo+1
    // are exactly {lo, ..., hi}
  }
  return true;
}

/// Hausdorff distance between two nonempty finite integer sets.
inline int hausdorff_distance(const IndexSet& A, const IndexSet& B) {
  if (A.empty() || B.empty())
    throw std::invalid_argument("hausdorff: empty set");
  auto directed = [](const IndexSet& X, const IndexSet& Y) {
    int worst = 0;
    for (int x : X) {
      const auto& v = Y.values();
      auto it = std::lower_bound(v.begin(), v.end(), x);
      int best = std::numeric_limits<int>::max();
      if (it != v.end()) best = std::min(best, *it - x);
      if (it != v.begin()) best = std::min(best, x - *(it - 1));
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(A, B), directed(B, A));
}

/// Image set π(B).
inline IndexSet image_set(const Permutation& p, const IndexSet& B) {
  std::vector<int> v;
  v.reserve(static_cast<std::size_t>(B.size()));
  for (int i : B) v.push_back(p(i));
  return IndexSet(std::move(v));
}

/// Visit every sorted ell-subset of {0,...,n-1} in lexicographic order.
template <class F>
void for_each_combination(int n, int ell, F&& fn) {
  if (ell < 0 || ell > n) return;
  std::vector<int> c(static_cast<std::size_t>(ell));
  std::iota(c.begin(), c.end(), 0);
  while (true) {
    fn(static_cast<const std::vector<int>&>(c));
    int i = ell - 1;
    while (i >= 0 && c[static_cast<std::size_t>(i)] == n - ell + i) --i;
    if (i < 0) break;
    ++c[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < ell; ++j)
      c[static_cast<std::size_t>(j)] = c[static_cast<std::size_t>(j - 1)] + 1;
  }
}

}  // namespace permix

#endif  // PERMIX_PERMUTATION_HPP
