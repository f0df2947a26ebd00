#ifndef PERMIX_ORACLE_HPP
#define PERMIX_ORACLE_HPP

// Query models for noiseless mixtures of permutations: strong/weak oracles
// answering groups of pairwise comparisons or ℓ-wise comparisons, plus
// comparison moments.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "permix/permutation.hpp"

namespace permix {

template <class W>
struct weight_traits {
  static bool is_unit_total(const W& s) { return s == W(1); }
  static bool is_zero(const W& w) { return w == W(0); }
};

template <>
struct weight_traits<double> {
  static bool is_unit_total(double s) { return std::abs(s - 1.0) <= 1e-12; }
  // float mode works to a fixed tolerance; see demix_strong
  static bool is_zero(double w) { return std::abs(w) <= 1e-9; }
};

/// Weighted set of permutations Σ w_i δ_{π_i}. Equal permutations are merged;
/// components are kept sorted for deterministic iteration. W is the weight
/// type: double, or an exact rational for drift-free demixing arithmetic.
template <class W = double>
class DeltaMixture {
 public:
  using Component = std::pair<Permutation, W>;

  DeltaMixture(std::vector<Component> components) {
    if (components.empty())
      throw std::invalid_argument("delta mixture needs a component");
    const int n = components.front().first.size();
    std::map<Permutation, W> merged;
    W total(0);
    for (auto& [p, w] : components) {
      if (p.size() != n)
        throw std::invalid_argument("delta mixture components must share one size");
      if (w <= W(0)) throw std::invalid_argument("weights must be positive");
      merged[p] += w;
      total += w;
    }
    if (!weight_traits<W>::is_unit_total(total))
      throw std::invalid_argument("weights must sum to 1");
    components_.assign(merged.begin(), merged.end());
  }

  static DeltaMixture uniform(const std::vector<Permutation>& perms) {
    std::vector<Component> c;
    const W w = W(1) / W(static_cast<int>(perms.size()));
    for (const auto& p : perms) c.emplace_back(p, w);
    return DeltaMixture(std::move(c));
  }

  const std::vector<Component>& components() const { return components_; }
  int size() const { return components_.front().first.size(); }
  int k() const { return static_cast<int>(components_.size()); }

  std::vector<Permutation> support() const {
    std::vector<Permutation> s;
    s.reserve(components_.size());
    for (const auto& [p, w] : components_) s.push_back(p);
    return s;
  }

  friend bool operator==(const DeltaMixture& a, const DeltaMixture& b) {
    return a.components_ == b.components_;
  }

 private:
  std::vector<Component> components_;
};

/// Answer of the strong group oracle: the distribution of χ(π, ℐ).
template <class W>
using ChiDist = std::map<ChiVector, W>;

/// Strong oracle answer as a free function (no budget accounting).
template <class W>
ChiDist<W> strong_group_answer(const DeltaMixture<W>& m,
                               const ComparisonTuple& t) {
  if (t.empty()) throw std::invalid_argument("empty comparison tuple");
  ChiDist<W> out;
  for (const auto& [p, w] : m.components()) out[chi(p, t)] += w;
  return out;
}

/// Weak oracle answer: the set of realized χ vectors, canonically ordered.
inline std::vector<ChiVector> weak_group_answer(
    const std::vector<Permutation>& perms, const ComparisonTuple& t) {
  if (perms.empty()) throw std::invalid_argument("empty permutation set");
  std::vector<ChiVector> out;
  out.reserve(perms.size());
  for (const auto& p : perms) out.push_back(chi(p, t));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// ℓ-wise strong oracle: distribution of π‖_J.
template <class W>
std::map<RelativeOrder, W> lwise_strong_answer(const DeltaMixture<W>& m,
                                               const IndexSet& J) {
  if (J.size() < 2) throw std::invalid_argument("l-wise query needs |J| >= 2");
  std::map<RelativeOrder, W> out;
  for (const auto& [p, w] : m.components()) out[relative_order(p, J)] += w;
  return out;
}

/// ℓ-wise weak oracle: set of relative orders, canonically ordered.
inline std::vector<RelativeOrder> lwise_weak_answer(
    const std::vector<Permutation>& perms, const IndexSet& J) {
  if (J.size() < 2) throw std::invalid_argument("l-wise query needs |J| >= 2");
  std::vector<RelativeOrder> out;
  out.reserve(perms.size());
  for (const auto& p : perms) out.push_back(relative_order(p, J));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline constexpr int kComparisonMomentCap = 20;

/// Comparison moment 𝔪(π, ℐ): the 2^m vector of probabilities of each χ
/// outcome, entry at v computed by the defining product formula
/// E[Π_r (X_{i_r j_r})^{v_r} (1 - X_{i_r j_r})^{1-v_r}]. Bit r of the index
/// is v_r (least significant bit first).
template <class W>
std::vector<W> comparison_moment(const DeltaMixture<W>& m,
                                 const ComparisonTuple& t) {
  const int len = t.size();
  if (len < 1) throw std::invalid_argument("empty comparison tuple");
  if (len > kComparisonMomentCap)
    throw std::invalid_argument("comparison moment: tuple longer than cap 20");
  std::vector<W> out(std::size_t{1} << len, W(0));
  for (const auto& [p, w] : m.components()) {
    const ChiVector c = chi(p, t);
    for (std::uint32_t v = 0; v < (std::uint32_t{1} << len); ++v) {
      W prod = w;
      for (int r = 0; r < len; ++r) {
        const int vr = (v >> r) & 1;
        const int xr = c.bits[static_cast<std::size_t>(r)];
        if (vr != xr) {
          prod = W(0);
          break;
        }
      }
      out[v] += prod;
    }
  }
  return out;
}

/// Number of queries answered so far.
struct OracleBudget {
  long long count = 0;
  void charge() { ++count; }
};

/// Ground-truth strong oracle over a hidden delta mixture.
template <class W = double>
class TruthStrongOracle {
 public:
  explicit TruthStrongOracle(DeltaMixture<W> m) : mixture_(std::move(m)) {}

  ChiDist<W> query(const ComparisonTuple& t) {
    budget_.charge();
    return strong_group_answer(mixture_, t);
  }
  long long budget() const { return budget_.count; }
  int size() const { return mixture_.size(); }

 private:
  DeltaMixture<W> mixture_;
  OracleBudget budget_;
};

/// Ground-truth weak oracle over a hidden set of permutations.
class TruthWeakOracle {
 public:
  explicit TruthWeakOracle(std::vector<Permutation> perms)
      : perms_(std::move(perms)) {
    if (perms_.empty()) throw std::invalid_argument("empty permutation set");
  }

  std::vector<ChiVector> query(const ComparisonTuple& t) {
    budget_.charge();
    return weak_group_answer(perms_, t);
  }
  long long budget() const { return budget_.count; }

 private:
  std::vector<Permutation> perms_;
  OracleBudget budget_;
};

template <class O, class W>
concept StrongOracle = requires(O o, const ComparisonTuple& t) {
  { o.query(t) } -> std::convertible_to<ChiDist<W>>;
  { o.budget() } -> std::convertible_to<long long>;
};

template <class O>
concept WeakOracle = requires(O o, const ComparisonTuple& t) {
  { o.query(t) } -> std::convertible_to<std::vector<ChiVector>>;
  { o.budget() } -> std::convertible_to<long long>;
};

}  // namespace permix

#endif  // PERMIX_ORACLE_HPP
