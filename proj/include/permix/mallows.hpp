#ifndef PERMIX_MALLOWS_HPP
#define PERMIX_MALLOWS_HPP

// Mallows model and mixtures: exact PMF, repeated-insertion sampling,
// marginalization, block-satisfaction probabilities.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permix/distribution.hpp"
#include "permix/permutation.hpp"
#include "permix/rng.hpp"

namespace permix {

/// Raised when an exact enumeration is requested above the configured cap.
struct enumeration_cap_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a requested mode cannot run at the given parameters.
struct feasibility_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr int kDefaultEnumerationCap = 8;

/// Mallows model M(π, φ): mass at σ proportional to φ^{d_KT(σ, π)}.
struct MallowsModel {
  Permutation central;
  double phi = 0.5;

  MallowsModel(Permutation c, double phi_) : central(std::move(c)), phi(phi_) {
    if (!(phi > 0.0 && phi < 1.0))
      throw std::invalid_argument("phi must lie in (0,1)");
  }

  int size() const { return central.size(); }
  /// Inverse-temperature parametrization β = 1/log(1/φ).
  double beta() const { return 1.0 / std::log(1.0 / phi); }
};

/// Mixture of Mallows models sharing one noise parameter.
class MallowsMixture {
 public:
  struct Component {
    double weight;
    Permutation central;
  };

  MallowsMixture(std::vector<Component> components, double phi)
      : components_(std::move(components)), phi_(phi) {
    if (components_.empty())
      throw std::invalid_argument("mixture needs at least one component");
    if (!(phi_ > 0.0 && phi_ < 1.0))
      throw std::invalid_argument("phi must lie in (0,1)");
    const int n = components_.front().central.size();
    double total = 0;
    for (const auto& c : components_) {
      if (c.central.size() != n)
        throw std::invalid_argument("mixture components must share one size");
      if (c.weight <= 0)
        throw std::invalid_argument("mixture weights must be positive");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("mixture weights must sum to 1");
  }

  static MallowsMixture single(MallowsModel m) {
    return MallowsMixture({{1.0, std::move(m.central)}}, m.phi);
  }

  const std::vector<Component>& components() const { return components_; }
  double phi() const { return phi_; }
  int size() const { return components_.front().central.size(); }
  int k() const { return static_cast<int>(components_.size()); }
  double min_weight() const {
    double g = 1.0;
    for (const auto& c : components_) g = std::min(g, c.weight);
    return g;
  }

 private:
  std::vector<Component> components_;
  double phi_;
};

/// i.i.d. draws plus the provenance needed to reproduce them.
struct SampleSet {
  std::vector<Permutation> draws;
  std::uint64_t seed = 0;
  std::string generator;
  double phi = 0.0;

  int n() const {
    if (draws.empty()) throw std::invalid_argument("empty sample set");
    return draws.front().size();
  }
};

/// log Z(φ) = Σ_{i=1}^{n} log(1 + φ + ... + φ^{i-1}).
inline double log_normalizer(int n, double phi) {
  if (n < 1) throw std::invalid_argument("n must be >= 1");
  if (!(phi > 0.0 && phi < 1.0))
    throw std::invalid_argument("phi must lie in (0,1)");
  double s = 0;
  for (int i = 1; i <= n; ++i)
    s += std::log((1.0 - std::pow(phi, i)) / (1.0 - phi));
  return s;
}

/// log f_{M(π,φ)}(σ) = d_KT(σ, π) log φ − log Z(φ).
inline double log_pmf(const MallowsModel& m, const Permutation& s) {
  if (m.size() != s.size()) throw std::invalid_argument("log_pmf: size mismatch");
  return static_cast<double>(kendall_tau(s, m.central)) * std::log(m.phi) -
         log_normalizer(m.size(), m.phi);
}

inline double log_pmf(const MallowsMixture& mix, const Permutation& s) {
  // log-sum-exp over components
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms;
  terms.reserve(mix.components().size());
  for (const auto& c : mix.components()) {
    const double t = std::log(c.weight) + log_pmf(MallowsModel(c.central, mix.phi()), s);
    terms.push_back(t);
    best = std::max(best, t);
  }
  double acc = 0;
  for (double t : terms) acc += std::exp(t - best);
  return best + std::log(acc);
}

/// Exact draw from M(π, φ) by repeated insertion, O(n²): sample from
/// M(id, φ) inserting element i at position j ≤ i with probability
/// φ^{i-j} / (1 + φ + ... + φ^{i-1}), then relabel by π.
inline Permutation sample_rim(const MallowsModel& m, Rng& rng) {
  const int n = m.size();
  const double phi = m.phi;
  std::vector<int> order;  // elements in rank order, 0-based
  order.reserve(static_cast<std::size_t>(n));
  double h = 0;  // 1 + φ + ... + φ^{i-1}, updated incrementally
  double top = 1;  // φ^{i-1}
  for (int i = 1; i <= n; ++i) {
    if (i == 1) {
      h = 1;
      top = 1;
    } else {
      top *= phi;
      h += top;
    }
    const double u = rng.uniform() * h;
    // walk positions j = i, i-1, ..., 1 with weights 1, φ, φ², ...
    double acc = 0, w = 1;
    int pos = 1;
    for (int j = i; j >= 1; --j) {
      acc += w;
      if (u <= acc || j == 1) {
        pos = j;
        break;
      }
      w *= phi;
    }
    order.insert(order.begin() + (pos - 1), i - 1);
  }
  std::vector<int> id_ranks(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r)
    id_ranks[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
  // relabel: σ(e) = σ₀(π(e)); right-invariance carries M(id,φ) to M(π,φ)
  std::vector<int> ranks(static_cast<std::size_t>(n));
  for (int e = 0; e < n; ++e)
    ranks[static_cast<std::size_t>(e)] =
        id_ranks[static_cast<std::size_t>(m.central(e))];
  return Permutation::from_ranks(std::move(ranks));
}

inline Permutation sample_rim(const MallowsMixture& mix, Rng& rng) {
  double u = rng.uniform();
  for (const auto& c : mix.components()) {
    if (u < c.weight || &c == &mix.components().back())
      return sample_rim(MallowsModel(c.central, mix.phi()), rng);
    u -= c.weight;
  }
  return sample_rim(MallowsModel(mix.components().back().central, mix.phi()), rng);
}

inline SampleSet sample_many(const MallowsMixture& mix, int count,
                             std::uint64_t seed) {
  Rng rng{seed};
  SampleSet s;
  s.seed = seed;
  s.generator = "rim";
  s.phi = mix.phi();
  s.draws.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) s.draws.push_back(sample_rim(mix, rng));
  return s;
}

/// P_{σ~M(π,φ)}{σ(i) < σ(j)} for an oriented pair π(i) < π(j):
/// (d+1)/(1-φ^{d+1}) - d/(1-φ^d) with d = π(j) - π(i).
inline double pairwise_prob(const MallowsModel& m, int i, int j) {
  if (i < 0 || i >= m.size() || j < 0 || j >= m.size())
    throw std::invalid_argument("pairwise_prob: index out of range");
  const int d = m.central(j) - m.central(i);
  if (d <= 0)
    throw std::invalid_argument("pairwise_prob: pair must satisfy π(i) < π(j)");
  const double phi = m.phi;
  return (d + 1) / (1.0 - std::pow(phi, d + 1)) - d / (1.0 - std::pow(phi, d));
}

/// Uniformly random permutation (Fisher-Yates on the rank vector).
inline Permutation random_permutation(int n, Rng& rng) {
  std::vector<int> ranks(static_cast<std::size_t>(n));
  std::iota(ranks.begin(), ranks.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(ranks[static_cast<std::size_t>(i)],
              ranks[rng.uniform_int(static_cast<std::uint64_t>(i) + 1)]);
  return Permutation::from_ranks(std::move(ranks));
}

/// Visit every permutation of {0,...,n-1} in lexicographic rank order.
template <class F>
void for_each_permutation(int n, F&& fn) {
  std::vector<int> ranks(static_cast<std::size_t>(n));
  std::iota(ranks.begin(), ranks.end(), 0);
  do {
    fn(Permutation::from_ranks(ranks));
  } while (std::next_permutation(ranks.begin(), ranks.end()));
}

/// Full PMF table over S_n; requires n ≤ cap (default 8, 8! = 40320 atoms).
inline DiscreteDist<Permutation> exact_dist(
    const MallowsMixture& mix, int cap = kDefaultEnumerationCap) {
  if (mix.size() > cap)
    throw enumeration_cap_error(
        "exact_dist: n exceeds the enumeration cap (" + std::to_string(cap) +
        "); use the sampling path");
  std::vector<MallowsModel> models;
  std::vector<double> logw;
  for (const auto& c : mix.components()) {
    models.emplace_back(c.central, mix.phi());
    logw.push_back(std::log(c.weight));
  }
  DiscreteDist<Permutation> out;
  for_each_permutation(mix.size(), [&](const Permutation& s) {
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> terms;
    terms.reserve(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
      terms.push_back(logw[i] + log_pmf(models[i], s));
      best = std::max(best, terms.back());
    }
    double acc = 0;
    for (double t : terms) acc += std::exp(t - best);
    out.add(s, std::exp(best + std::log(acc)));
  });
  return out;
}

inline DiscreteDist<Permutation> exact_dist(
    const MallowsModel& m, int cap = kDefaultEnumerationCap) {
  return exact_dist(MallowsMixture::single(m), cap);
}

/// Marginal 𝓜|_J: pushforward of a permutation distribution under σ ↦ σ|_J.
inline DiscreteDist<Injection> marginal(const DiscreteDist<Permutation>& d,
                                        const IndexSet& J) {
  return d.map([&](const Permutation& s) { return restrict_to(s, J); });
}

/// Empirical marginal (1/N) Σ δ_{σ_m|_J}.
inline DiscreteDist<Injection> marginal(const SampleSet& samples,
                                        const IndexSet& J) {
  if (samples.draws.empty()) throw std::invalid_argument("empty sample set");
  DiscreteDist<Injection> out;
  const double w = 1.0 / static_cast<double>(samples.draws.size());
  for (const auto& s : samples.draws) out.add(restrict_to(s, J), w);
  return out;
}

/// Exact P{σ satisfies bs} via enumeration; requires n ≤ cap.
inline double block_prob_exact(const MallowsModel& m, const BlockStructure& bs,
                               int cap = kDefaultEnumerationCap) {
  if (m.size() > cap)
    throw enumeration_cap_error(
        "block_prob_exact: n exceeds the enumeration cap; use Monte Carlo");
  const double logz = log_normalizer(m.size(), m.phi);
  const double logphi = std::log(m.phi);
  double p = 0;
  for_each_permutation(m.size(), [&](const Permutation& s) {
    if (satisfies_block(s, bs))
      p += std::exp(static_cast<double>(kendall_tau(s, m.central)) * logphi -
                    logz);
  });
  return p;
}

/// Monte-Carlo estimate of P{σ satisfies bs} from `draws` RIM samples.
inline double block_prob_mc(const MallowsModel& m, const BlockStructure& bs,
                            int draws, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("block_prob_mc: draws must be >= 1");
  long long hits = 0;
  for (int i = 0; i < draws; ++i)
    if (satisfies_block(sample_rim(m, rng), bs)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(draws);
}

/// Lemma-style lower bound φ^{ℓD} (1-φ)^{3ℓ} / (2 (6ℓ)^{2ℓ}) on the
/// block-satisfaction probability when d_H(π(B_i), B'_i) ≤ D for all i.
inline double block_prob_lower_bound(double phi, int ell, int D) {
  return std::pow(phi, static_cast<double>(ell) * D) *
         std::pow(1.0 - phi, 3.0 * ell) /
         (2.0 * std::pow(6.0 * ell, 2.0 * ell));
}

}  // namespace permix

#endif  // PERMIX_MALLOWS_HPP
