#ifndef PERMIX_DEMIX_MALLOWS_HPP
#define PERMIX_DEMIX_MALLOWS_HPP

// Noisy demixing pipeline: learning relative orders on small index sets from
// Mallows-mixture samples, simulating the weak comparison oracle, demixing
// the central permutations, and estimating mixture weights.
//
// Two modes share one candidate-class machinery. Theoretical mode follows
// the threshold-acceptance listing with the dimension-free constants η, ζ
// (kept in log space; at any realistic parameters the implied grid size
// overflows, which is reported as a feasibility error). Practical mode is
// the default: it selects the candidate minimizing the marginal TV, with
// optional rank-window pruning of the injection class.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permix/demix_noiseless.hpp"
#include "permix/distribution.hpp"
#include "permix/mallows.hpp"
#include "permix/oracle.hpp"
#include "permix/parallel.hpp"
#include "permix/permutation.hpp"
#include "permix/rng.hpp"

namespace permix {

/// ln η(k, ℓ, φ, γ) = (3ℓ)^{ℓ+1} ln(γ/(6k)) + ((4ℓ)^ℓ + 2kℓ²) ln((1-φ)/ℓ).
inline double log_eta(int k, int ell, double phi, double gamma) {
  if (k < 1 || ell < 1) throw std::invalid_argument("log_eta: k, ell must be >= 1");
  if (!(phi > 0.0 && phi < 1.0))
    throw std::invalid_argument("log_eta: phi must lie in (0,1)");
  if (!(gamma > 0.0 && gamma <= 1.0 / k + 1e-15))
    throw std::invalid_argument("log_eta: gamma must lie in (0, 1/k]");
  const double l = ell;
  return std::pow(3 * l, l + 1) * std::log(gamma / (6 * k)) +
         (std::pow(4 * l, l) + 2.0 * k * l * l) * std::log((1 - phi) / l);
}

/// ln ζ(k, ℓ, φ, γ) = (9ℓ)^{ℓ+1} + (6ℓ)^{ℓ+1} ln(k/γ)
///                  + (3(4ℓ)^ℓ + 8kℓ²) ln(ℓ/(1-φ)).
inline double log_zeta(int k, int ell, double phi, double gamma) {
  if (k < 1 || ell < 1) throw std::invalid_argument("log_zeta: k, ell must be >= 1");
  if (!(phi > 0.0 && phi < 1.0))
    throw std::invalid_argument("log_zeta: phi must lie in (0,1)");
  if (!(gamma > 0.0 && gamma <= 1.0 / k + 1e-15))
    throw std::invalid_argument("log_zeta: gamma must lie in (0, 1/k]");
  const double l = ell;
  return std::pow(9 * l, l + 1) + std::pow(6 * l, l + 1) * std::log(k / gamma) +
         (3 * std::pow(4 * l, l) + 8.0 * k * l * l) * std::log(l / (1 - phi));
}

enum class DemixMode { kTheoretical, kPractical };
enum class MarginalBackend {
  kAuto,      // exact tables when n fits the enumeration cap, else simulate
  kExact,     // enumeration-backed exact candidate marginals
  kSimulate,  // empirical candidate marginals from shared per-injection draws
};

struct DemixConfig {
  DemixMode mode = DemixMode::kPractical;
  /// Simulation draws per candidate (theoretical) or per injection (practical
  /// simulate backend).
  long long n_prime = 20000;
  /// Acceptance TV threshold. Theoretical mode derives η/2 when unset;
  /// settable only as a calibration hook.
  std::optional<double> threshold;
  double delta = 0.05;
  std::uint64_t seed = 0;
  /// Weight grid size L; 0 selects max(2k, ceil(3/γ)) in practical mode.
  int weight_grid = 0;
  bool prune = true;
  /// Rank-window radius; 0 selects ceil(3/(1-φ)).
  int prune_radius = 0;
  MarginalBackend backend = MarginalBackend::kAuto;
  int enumeration_cap = kDefaultEnumerationCap;

  void validate() const {
    if (n_prime < 1) throw std::invalid_argument("n_prime must be >= 1");
    if (threshold && !(*threshold > 0.0 && *threshold <= 1.0))
      throw std::invalid_argument("threshold must lie in (0,1]");
  }
};

/// Canonical enumeration of ℓ-tuples of distinct values in {0,...,n-1}
/// (= injections once a sorted domain is fixed), with rank lookup.
class InjectionIndexer {
 public:
  InjectionIndexer(int n, int ell) : n_(n), ell_(ell) {
    if (ell < 1 || ell > n)
      throw std::invalid_argument("indexer needs 1 <= ell <= n");
    std::vector<int> vals;
    std::vector<char> used(static_cast<std::size_t>(n), 0);
    build(vals, used);
  }

  int n() const { return n_; }
  int ell() const { return ell_; }
  int count() const { return static_cast<int>(codes_.size()); }

  long long code_of(const int* vals) const {
    long long c = 0;
    for (int t = 0; t < ell_; ++t) c = c * n_ + vals[t];
    return c;
  }

  int id_of(const int* vals) const {
    const long long c = code_of(vals);
    const auto it = std::lower_bound(codes_.begin(), codes_.end(), c);
    if (it == codes_.end() || *it != c)
      throw std::invalid_argument("tuple is not an injection");
    return static_cast<int>(it - codes_.begin());
  }
  int id_of(const std::vector<int>& vals) const { return id_of(vals.data()); }

  const int* tuple_of(int id) const {
    return tuples_.data() + static_cast<std::size_t>(id) * ell_;
  }

 private:
  void build(std::vector<int>& vals, std::vector<char>& used) {
    if (static_cast<int>(vals.size()) == ell_) {
      codes_.push_back(code_of(vals.data()));
      tuples_.insert(tuples_.end(), vals.begin(), vals.end());
      return;
    }
    for (int v = 0; v < n_; ++v) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      vals.push_back(v);
      build(vals, used);
      vals.pop_back();
      used[static_cast<std::size_t>(v)] = 0;
    }
  }

  int n_, ell_;
  std::vector<int> tuples_;      // count × ell, lexicographic
  std::vector<long long> codes_; // ascending
};

/// Deterministic completion of ρ : J → [n] to a permutation with π|_J = ρ:
/// unassigned elements take the unassigned ranks in increasing index order.
/// The marginal on J is unaffected by the completion choice.
inline Permutation complete_injection(int n, const IndexSet& J,
                                      const std::vector<int>& rho_values) {
  std::vector<int> ranks(static_cast<std::size_t>(n), -1);
  std::vector<char> taken(static_cast<std::size_t>(n), 0);
  for (int t = 0; t < J.size(); ++t) {
    ranks[static_cast<std::size_t>(J[t])] =
        rho_values[static_cast<std::size_t>(t)];
    taken[static_cast<std::size_t>(rho_values[static_cast<std::size_t>(t)])] = 1;
  }
  int next = 0;
  for (int e = 0; e < n; ++e) {
    if (ranks[static_cast<std::size_t>(e)] >= 0) continue;
    while (taken[static_cast<std::size_t>(next)]) ++next;
    ranks[static_cast<std::size_t>(e)] = next++;
  }
  return Permutation::from_ranks(std::move(ranks));
}

namespace detail {

/// Marginals of M(id, φ) on every ℓ-subset of positions: row(K)[tid] is the
/// probability that σ takes the indexer's tid-th value tuple on the sorted
/// set K. By right-invariance these rows carry every candidate's marginal.
class IdentityMarginalTable {
 public:
  IdentityMarginalTable(int n, double phi, const InjectionIndexer& indexer,
                        int cap)
      : n_(n), indexer_(indexer) {
    if (n > cap)
      throw enumeration_cap_error(
          "exact marginal table needs n <= the enumeration cap");
    const int ell = indexer.ell();
    for_each_combination(n, ell, [&](const std::vector<int>& K) {
      rows_[K].assign(static_cast<std::size_t>(indexer.count()), 0.0);
    });
    const double logphi = std::log(phi);
    const double logz = log_normalizer(n, phi);
    std::vector<int> vals(static_cast<std::size_t>(ell));
    for_each_permutation(n, [&](const Permutation& s) {
      const double p =
          std::exp(static_cast<double>(kendall_tau(s, Permutation::identity(n))) *
                       logphi -
                   logz);
      for (auto& [K, row] : rows_) {
        for (int t = 0; t < ell; ++t)
          vals[static_cast<std::size_t>(t)] = s(K[static_cast<std::size_t>(t)]);
        row[static_cast<std::size_t>(indexer_.id_of(vals))] += p;
      }
    });
  }

  /// Marginal row of M(π_ρ, φ)|_J over the indexer's tuple ids, for the
  /// injection with values rho_values on the sorted domain J.
  std::vector<double> candidate_row(const std::vector<int>& rho_values) const {
    const int ell = indexer_.ell();
    std::vector<int> K(rho_values);
    std::sort(K.begin(), K.end());
    const auto it = rows_.find(K);
    if (it == rows_.end())
      throw std::logic_error("marginal table missing a combination row");
    std::vector<int> pos(static_cast<std::size_t>(ell));
    for (int t = 0; t < ell; ++t)
      pos[static_cast<std::size_t>(t)] = static_cast<int>(
          std::lower_bound(K.begin(), K.end(),
                           rho_values[static_cast<std::size_t>(t)]) -
          K.begin());
    std::vector<double> out(static_cast<std::size_t>(indexer_.count()), 0.0);
    std::vector<int> mapped(static_cast<std::size_t>(ell));
    for (int tid = 0; tid < indexer_.count(); ++tid) {
      const int* psi = indexer_.tuple_of(tid);
      for (int t = 0; t < ell; ++t)
        mapped[static_cast<std::size_t>(t)] = psi[pos[static_cast<std::size_t>(t)]];
      out[static_cast<std::size_t>(indexer_.id_of(mapped))] =
          it->second[static_cast<std::size_t>(tid)];
    }
    return out;
  }

 private:
  int n_;
  const InjectionIndexer& indexer_;
  std::map<std::vector<int>, std::vector<double>> rows_;
};

inline std::vector<double> simulated_row(int n, double phi, const IndexSet& J,
                                         const std::vector<int>& rho_values,
                                         const InjectionIndexer& indexer,
                                         long long n_prime, Rng rng) {
  const MallowsModel model(complete_injection(n, J, rho_values), phi);
  std::vector<double> out(static_cast<std::size_t>(indexer.count()), 0.0);
  std::vector<int> vals(static_cast<std::size_t>(J.size()));
  for (long long i = 0; i < n_prime; ++i) {
    const Permutation s = sample_rim(model, rng);
    for (int t = 0; t < J.size(); ++t)
      vals[static_cast<std::size_t>(t)] = s(J[t]);
    out[static_cast<std::size_t>(indexer.id_of(vals))] += 1.0;
  }
  for (double& v : out) v /= static_cast<double>(n_prime);
  return out;
}

inline std::vector<double> data_row(const SampleSet& samples, const IndexSet& J,
                                    const InjectionIndexer& indexer) {
  std::vector<double> out(static_cast<std::size_t>(indexer.count()), 0.0);
  std::vector<int> vals(static_cast<std::size_t>(J.size()));
  for (const auto& s : samples.draws) {
    for (int t = 0; t < J.size(); ++t)
      vals[static_cast<std::size_t>(t)] = s(J[t]);
    out[static_cast<std::size_t>(indexer.id_of(vals))] += 1.0;
  }
  const double inv = 1.0 / static_cast<double>(samples.draws.size());
  for (double& v : out) v *= inv;
  return out;
}

/// Deterministic 1-D k-means (quantile init, 32 Lloyd rounds).
inline std::vector<double> kmeans_1d(std::vector<double> values, int k) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  std::vector<double> centers(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c)
    centers[static_cast<std::size_t>(c)] =
        values[std::min(n - 1, static_cast<std::size_t>(
                                   (2.0 * c + 1) / (2.0 * k) * n))];
  for (int round = 0; round < 32; ++round) {
    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<long long> cnt(static_cast<std::size_t>(k), 0);
    for (double v : values) {
      int best = 0;
      for (int c = 1; c < k; ++c)
        if (std::abs(v - centers[static_cast<std::size_t>(c)]) <
            std::abs(v - centers[static_cast<std::size_t>(best)]))
          best = c;
      sum[static_cast<std::size_t>(best)] += v;
      ++cnt[static_cast<std::size_t>(best)];
    }
    bool moved = false;
    for (int c = 0; c < k; ++c) {
      if (cnt[static_cast<std::size_t>(c)] == 0) continue;
      const double m = sum[static_cast<std::size_t>(c)] /
                       static_cast<double>(cnt[static_cast<std::size_t>(c)]);
      if (m != centers[static_cast<std::size_t>(c)]) moved = true;
      centers[static_cast<std::size_t>(c)] = m;
    }
    if (!moved) break;
  }
  return centers;
}

}  // namespace detail

/// The discretized candidate class 𝓜(n, k, φ, γ, J, L): injections (after
/// optional pruning) and the weight grid, plus the analytic pre-prune count.
struct CandidateClass {
  int n = 0;
  int k = 0;
  double phi = 0.5;
  double gamma = 0.5;
  IndexSet J;
  int L = 0;
  std::vector<std::vector<int>> injections;  // values on sorted J
  std::vector<std::vector<int>> weight_grid; // numerators r, Σr = L, r ≥ γL
  long long unpruned_injections = 0;         // |S_{n,J}|

  /// Analytic candidate count before pruning:
  /// (number of weight grids) × |S_{n,J}|^k.
  long long total_count() const {
    long long c = static_cast<long long>(weight_grid.size());
    for (int i = 0; i < k; ++i) c *= unpruned_injections;
    return c;
  }
};

/// Weight numerators {r ∈ [L]^k : r_i ≥ γL, Σ r_i = L}, lexicographic.
inline std::vector<std::vector<int>> make_weight_grid(int k, int L,
                                                      double gamma) {
  const int lo = std::max(1, static_cast<int>(std::ceil(gamma * L - 1e-9)));
  std::vector<std::vector<int>> grid;
  std::vector<int> r(static_cast<std::size_t>(k));
  auto rec = [&](auto&& self, int i, int left) -> void {
    if (i == k - 1) {
      if (left >= lo && left <= L) {
        r[static_cast<std::size_t>(i)] = left;
        grid.push_back(r);
      }
      return;
    }
    for (int v = lo; v <= left - lo * (k - 1 - i); ++v) {
      r[static_cast<std::size_t>(i)] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, L);
  return grid;
}

/// Default practical-mode grid size.
inline int default_weight_grid(int k, double gamma) {
  return std::max(2 * k, static_cast<int>(std::ceil(3.0 / gamma)));
}

/// Default rank-window pruning radius, from the geometric displacement tail
/// of the Mallows model.
inline int default_prune_radius(double phi) {
  return static_cast<int>(std::ceil(3.0 / (1.0 - phi)));
}

/// Per-position allowed ranks under rank-window pruning: ranks within
/// `radius` of some k-means center of the observed σ(j).
inline std::vector<std::vector<int>> prune_windows(const SampleSet& samples,
                                                   const IndexSet& J, int k,
                                                   int radius) {
  const int n = samples.n();
  std::vector<std::vector<int>> allowed(static_cast<std::size_t>(J.size()));
  for (int t = 0; t < J.size(); ++t) {
    std::vector<double> vals;
    vals.reserve(samples.draws.size());
    for (const auto& s : samples.draws)
      vals.push_back(static_cast<double>(s(J[t])));
    const std::vector<double> centers = detail::kmeans_1d(std::move(vals), k);
    for (int rank = 0; rank < n; ++rank)
      for (double c : centers)
        if (std::abs(rank - c) <= radius + 1e-9) {
          allowed[static_cast<std::size_t>(t)].push_back(rank);
          break;
        }
  }
  return allowed;
}

/// Build the candidate class; pruning intersects the injection list with the
/// rank windows (pass prune = false, or no samples, for the full class).
inline CandidateClass make_candidate_class(int n, int k, double phi,
                                           double gamma, const IndexSet& J,
                                           int L,
                                           const SampleSet* samples = nullptr,
                                           bool prune = false,
                                           int prune_radius = 0) {
  if (J.empty()) throw std::invalid_argument("candidate class needs nonempty J");
  if (J[J.size() - 1] >= n || J[0] < 0)
    throw std::invalid_argument("J indices out of range");
  CandidateClass cc;
  cc.n = n;
  cc.k = k;
  cc.phi = phi;
  cc.gamma = gamma;
  cc.J = J;
  cc.L = L;
  cc.weight_grid = make_weight_grid(k, L, gamma);
  const int ell = J.size();
  cc.unpruned_injections = 1;
  for (int t = 0; t < ell; ++t) cc.unpruned_injections *= (n - t);

  std::vector<std::vector<int>> allowed;
  if (prune && samples != nullptr) {
    allowed = prune_windows(*samples, J, k,
                            prune_radius > 0 ? prune_radius
                                             : default_prune_radius(phi));
  } else {
    allowed.assign(static_cast<std::size_t>(ell), {});
    for (auto& a : allowed) {
      a.resize(static_cast<std::size_t>(n));
      std::iota(a.begin(), a.end(), 0);
    }
  }

  std::vector<int> vals;
  std::vector<char> used(static_cast<std::size_t>(n), 0);
  auto rec = [&](auto&& self, int t) -> void {
    if (t == ell) {
      cc.injections.push_back(vals);
      return;
    }
    for (int v : allowed[static_cast<std::size_t>(t)]) {
      if (used[static_cast<std::size_t>(v)]) continue;
      used[static_cast<std::size_t>(v)] = 1;
      vals.push_back(v);
      self(self, t + 1);
      vals.pop_back();
      used[static_cast<std::size_t>(v)] = 0;
    }
  };
  rec(rec, 0);
  return cc;
}

/// Exact-backend context for one (n, φ, ℓ): the tuple indexer plus the
/// identity-marginal table. Reusable across index sets of the same size.
struct ExactMarginalContext;

/// Cache of exact-backend contexts keyed by ℓ, for one fixed (n, φ).
class MarginalTableCache {
 public:
  MarginalTableCache() = default;
  const ExactMarginalContext& get(int n, double phi, int ell, int cap);

 private:
  std::map<int, std::shared_ptr<const ExactMarginalContext>> by_ell_;
  int n_ = -1;
  double phi_ = -1;
};

/// Outcome of one candidate search.
struct SubOrderResult {
  std::vector<RelativeOrder> orders;  // relative orders of the winning candidate
  double best_tv = std::numeric_limits<double>::infinity();
  double runner_up_tv = std::numeric_limits<double>::infinity();
  long long evaluated = 0;   // candidates fully scored
  long long enumerated = 0;  // candidates visited (incl. pruned by bound)
};

namespace detail {

inline void atomic_min(std::atomic<double>& target, double value) {
  double cur = target.load(std::memory_order_relaxed);
  while (value < cur &&
         !target.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

/// Argmin-TV search over (weight grid) × (k-tuples of injection rows).
/// Rows with equal weights enumerate non-decreasing index tuples only (the
/// mixture is invariant under component order). Ties resolve to the first
/// candidate in enumeration order, independent of the worker count.
inline SubOrderResult argmin_search(const CandidateClass& cc,
                                    const std::vector<std::vector<double>>& rows,
                                    const std::vector<double>& data) {
  const int k = cc.k;
  const int count = static_cast<int>(rows.size());
  if (count == 0) throw feasibility_error("empty candidate set after pruning");
  const std::size_t dim = data.size();

  // Sound per-row lower bound: any mixture giving row i weight ≥ γ has
  // TV ≥ ½ Σ_x (γ row_i[x] - data[x])⁺.
  std::vector<double> lb(static_cast<std::size_t>(count), 0.0);
  parallel_for(count, [&](long long i) {
    double s = 0;
    const auto& r = rows[static_cast<std::size_t>(i)];
    for (std::size_t x = 0; x < dim; ++x)
      s += std::max(0.0, cc.gamma * r[x] - data[x]);
    lb[static_cast<std::size_t>(i)] = 0.5 * s;
  });
  std::vector<int> order(static_cast<std::size_t>(count));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return lb[static_cast<std::size_t>(a)] <
                                              lb[static_cast<std::size_t>(b)]; });

  struct Best {
    double tv = std::numeric_limits<double>::infinity();
    double runner = std::numeric_limits<double>::infinity();
    std::size_t grid_index = 0;
    std::vector<int> tuple;  // positions in `order`
    long long evaluated = 0;
    long long enumerated = 0;
  };
  std::atomic<double> global_best{std::numeric_limits<double>::infinity()};
  std::mutex merge_mutex;
  Best overall;

  const bool equal_weights = [&] {
    for (const auto& g : cc.weight_grid)
      for (int i = 1; i < k; ++i)
        if (g[static_cast<std::size_t>(i)] != g[0]) return false;
    return true;
  }();

  std::vector<double> w(static_cast<std::size_t>(k));
  for (std::size_t gi = 0; gi < cc.weight_grid.size(); ++gi) {
    for (int i = 0; i < k; ++i)
      w[static_cast<std::size_t>(i)] =
          static_cast<double>(cc.weight_grid[gi][static_cast<std::size_t>(i)]) /
          cc.L;

    parallel_for(count, [&](long long first) {
      Best local;
      std::vector<int> tuple(static_cast<std::size_t>(k));
      tuple[0] = static_cast<int>(first);
      std::vector<double> acc(dim);

      auto eval_tuple = [&]() {
        ++local.enumerated;
        double bound = 0;
        for (int i = 0; i < k; ++i)
          bound = std::max(bound, lb[static_cast<std::size_t>(
                                      order[static_cast<std::size_t>(
                                          tuple[static_cast<std::size_t>(i)])])]);
        const double best_now = global_best.load(std::memory_order_relaxed);
        if (bound > best_now) return;
        double s = 0;
        const double cutoff = 2.0 * best_now;
        for (std::size_t x = 0; x < dim; ++x) {
          double v = -data[x];
          for (int i = 0; i < k; ++i)
            v += w[static_cast<std::size_t>(i)] *
                 rows[static_cast<std::size_t>(order[static_cast<std::size_t>(
                     tuple[static_cast<std::size_t>(i)])])][x];
          s += std::abs(v);
          if ((x & 63) == 63 && s > cutoff && s > 2.0 * local.runner) return;
        }
        ++local.evaluated;
        const double tv_val = 0.5 * s;
        if (tv_val < local.tv ||
            (tv_val == local.tv &&
             (gi < local.grid_index ||
              (gi == local.grid_index && tuple < local.tuple)))) {
          local.runner = local.tv;
          local.tv = tv_val;
          local.grid_index = gi;
          local.tuple = tuple;
          atomic_min(global_best, tv_val);
        } else if (tv_val < local.runner) {
          local.runner = tv_val;
        }
      };

      auto rec = [&](auto&& self, int i) -> void {
        if (i == k) {
          eval_tuple();
          return;
        }
        const int start = equal_weights ? tuple[static_cast<std::size_t>(i - 1)] : 0;
        for (int j = start; j < count; ++j) {
          tuple[static_cast<std::size_t>(i)] = j;
          self(self, i + 1);
        }
      };
      if (k == 1) {
        eval_tuple();
      } else {
        rec(rec, 1);
      }

      std::lock_guard<std::mutex> lock(merge_mutex);
      overall.evaluated += local.evaluated;
      overall.enumerated += local.enumerated;
      if (local.tv < overall.tv ||
          (local.tv == overall.tv &&
           (local.grid_index < overall.grid_index ||
            (local.grid_index == overall.grid_index &&
             local.tuple < overall.tuple)))) {
        overall.runner = std::min({overall.runner, overall.tv, local.runner});
        overall.tv = local.tv;
        overall.grid_index = local.grid_index;
        overall.tuple = local.tuple;
      } else {
        overall.runner = std::min(overall.runner, local.tv);
      }
    });
  }

  if (!std::isfinite(overall.tv))
    throw feasibility_error("candidate search found no scorable candidate");

  SubOrderResult res;
  res.best_tv = overall.tv;
  res.runner_up_tv = overall.runner;
  res.evaluated = overall.evaluated;
  res.enumerated = overall.enumerated;
  std::vector<RelativeOrder> orders;
  for (int i = 0; i < k; ++i) {
    Injection inj;
    inj.domain = cc.J;
    inj.values =
        cc.injections[static_cast<std::size_t>(order[static_cast<std::size_t>(
            overall.tuple[static_cast<std::size_t>(i)])])];
    orders.push_back(compress(inj));
  }
  std::sort(orders.begin(), orders.end());
  orders.erase(std::unique(orders.begin(), orders.end()), orders.end());
  res.orders = std::move(orders);
  return res;
}

/// Literal threshold-acceptance listing: draw n_prime permutations from each
/// candidate mixture, accept when the marginal TV is within the threshold,
/// and keep the last accepted candidate's relative orders.
inline std::vector<RelativeOrder> threshold_accept_search(
    const CandidateClass& cc, const SampleSet& samples, long long n_prime,
    double threshold, Rng rng) {
  const InjectionIndexer indexer(cc.n, cc.J.size());
  const std::vector<double> data = data_row(samples, cc.J, indexer);
  std::vector<RelativeOrder> accepted;
  std::vector<int> tuple(static_cast<std::size_t>(cc.k), 0);
  std::vector<int> vals(static_cast<std::size_t>(cc.J.size()));
  long long candidate_index = 0;
  for (const auto& g : cc.weight_grid) {
    auto rec = [&](auto&& self, int i) -> void {
      if (i == cc.k) {
        std::vector<MallowsMixture::Component> comps;
        for (int c = 0; c < cc.k; ++c)
          comps.push_back(
              {static_cast<double>(g[static_cast<std::size_t>(c)]) / cc.L,
               complete_injection(
                   cc.n, cc.J,
                   cc.injections[static_cast<std::size_t>(
                       tuple[static_cast<std::size_t>(c)])])});
        const MallowsMixture mixture(std::move(comps), cc.phi);
        Rng stream = rng.split(static_cast<std::uint64_t>(candidate_index++));
        std::vector<double> row(static_cast<std::size_t>(indexer.count()), 0.0);
        for (long long d = 0; d < n_prime; ++d) {
          const Permutation s = sample_rim(mixture, stream);
          for (int t = 0; t < cc.J.size(); ++t)
            vals[static_cast<std::size_t>(t)] = s(cc.J[t]);
          row[static_cast<std::size_t>(indexer.id_of(vals))] += 1.0;
        }
        double s = 0;
        for (std::size_t x = 0; x < row.size(); ++x)
          s += std::abs(row[x] / static_cast<double>(n_prime) - data[x]);
        if (0.5 * s <= threshold) {
          accepted.clear();
          for (int c = 0; c < cc.k; ++c) {
            Injection inj;
            inj.domain = cc.J;
            inj.values = cc.injections[static_cast<std::size_t>(
                tuple[static_cast<std::size_t>(c)])];
            accepted.push_back(compress(inj));
          }
          std::sort(accepted.begin(), accepted.end());
          accepted.erase(std::unique(accepted.begin(), accepted.end()),
                         accepted.end());
        }
        return;
      }
      for (int j = 0; j < static_cast<int>(cc.injections.size()); ++j) {
        tuple[static_cast<std::size_t>(i)] = j;
        self(self, i + 1);
      }
    };
    rec(rec, 0);
  }
  return accepted;
}

}  // namespace detail

struct ExactMarginalContext {
  InjectionIndexer indexer;
  detail::IdentityMarginalTable table;

  ExactMarginalContext(int n, double phi, int ell, int cap)
      : indexer(n, ell), table(n, phi, indexer, cap) {}
};

inline const ExactMarginalContext& MarginalTableCache::get(int n, double phi,
                                                           int ell, int cap) {
  if (n_ != n || phi_ != phi) {
    by_ell_.clear();
    n_ = n;
    phi_ = phi;
  }
  auto it = by_ell_.find(ell);
  if (it == by_ell_.end())
    it = by_ell_
             .emplace(ell, std::make_shared<const ExactMarginalContext>(
                               n, phi, ell, cap))
             .first;
  return *it->second;
}

/// Learn the set of relative orders {π_i‖_J} of the mixture's centrals from
/// samples. Practical mode returns the argmin-TV candidate's orders;
/// theoretical mode follows the threshold-acceptance listing with the
/// dimension-free constants (erroring out when the implied grid size is not
/// representable).
inline SubOrderResult sub_order_detailed(const SampleSet& samples, int k,
                                         double phi, double gamma,
                                         const DemixConfig& cfg,
                                         const IndexSet& J,
                                         MarginalTableCache* cache = nullptr) {
  cfg.validate();
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (J.empty()) throw std::invalid_argument("sub_order needs nonempty J");
  const int n = samples.n();
  const int ell = J.size();

  if (cfg.mode == DemixMode::kTheoretical) {
    const double leta = log_eta(k, ell, phi, gamma);
    const double log_grid = std::log(3.0 * k) - leta;
    if (log_grid > std::log(1e12))
      throw feasibility_error(
          "theoretical mode infeasible: L = ceil(3k/eta) needs about e^" +
          std::to_string(log_grid) +
          " candidates per weight; use practical mode");
    const double eta = std::exp(leta);
    const int L = static_cast<int>(std::ceil(3.0 * k / eta));
    const CandidateClass cc = make_candidate_class(n, k, phi, gamma, J, L);
    SubOrderResult res;
    res.orders = detail::threshold_accept_search(
        cc, samples, cfg.n_prime, cfg.threshold.value_or(eta / 2.0),
        Rng(cfg.seed).split(0x5u));
    res.enumerated = cc.total_count();
    return res;
  }

  const int L = cfg.weight_grid > 0 ? cfg.weight_grid
                                    : default_weight_grid(k, gamma);
  const CandidateClass cc = make_candidate_class(
      n, k, phi, gamma, J, L, &samples, cfg.prune, cfg.prune_radius);
  if (cc.injections.empty())
    throw feasibility_error("empty candidate set after pruning");
  if (cc.weight_grid.empty())
    throw feasibility_error("weight grid empty under the gamma constraint");

  const bool exact = cfg.backend == MarginalBackend::kExact ||
                     (cfg.backend == MarginalBackend::kAuto &&
                      n <= cfg.enumeration_cap);
  std::vector<std::vector<double>> rows(cc.injections.size());
  if (exact) {
    MarginalTableCache local;
    const ExactMarginalContext& ctx = (cache ? *cache : local)
                                          .get(n, phi, ell, cfg.enumeration_cap);
    const std::vector<double> data = detail::data_row(samples, J, ctx.indexer);
    parallel_for(static_cast<long long>(cc.injections.size()), [&](long long i) {
      rows[static_cast<std::size_t>(i)] =
          ctx.table.candidate_row(cc.injections[static_cast<std::size_t>(i)]);
    });
    return detail::argmin_search(cc, rows, data);
  }
  const InjectionIndexer indexer(n, ell);
  const std::vector<double> data = detail::data_row(samples, J, indexer);
  const Rng base(cfg.seed);
  parallel_for(static_cast<long long>(cc.injections.size()), [&](long long i) {
    rows[static_cast<std::size_t>(i)] = detail::simulated_row(
        n, phi, J, cc.injections[static_cast<std::size_t>(i)], indexer,
        cfg.n_prime, base.split(static_cast<std::uint64_t>(i)));
  });
  return detail::argmin_search(cc, rows, data);
}

inline std::vector<RelativeOrder> sub_order(const SampleSet& samples, int k,
                                            double phi, double gamma,
                                            const DemixConfig& cfg,
                                            const IndexSet& J,
                                            MarginalTableCache* cache = nullptr) {
  return sub_order_detailed(samples, k, phi, gamma, cfg, J, cache).orders;
}

/// Weak-oracle simulation backed by samples: answers a comparison tuple by
/// learning the relative orders on the tuple's support and reading the bits
/// off each order. Results are memoized per index set within one consumer.
class SimulatedWeakOracle {
 public:
  struct QueryRecord {
    IndexSet J;
    double best_tv = 0;
    double runner_up_tv = 0;
    bool memo_hit = false;
  };

  SimulatedWeakOracle(const SampleSet& samples, int k, double phi, double gamma,
                      DemixConfig cfg)
      : samples_(samples), k_(k), phi_(phi), gamma_(gamma), cfg_(std::move(cfg)) {}

  std::vector<ChiVector> query(const ComparisonTuple& t) {
    budget_.charge();
    const IndexSet J = t.support();
    QueryRecord rec;
    rec.J = J;
    auto it = memo_.find(J);
    if (it == memo_.end()) {
      SubOrderResult r =
          sub_order_detailed(samples_, k_, phi_, gamma_, cfg_, J, &tables_);
      rec.best_tv = r.best_tv;
      rec.runner_up_tv = r.runner_up_tv;
      it = memo_.emplace(J, std::move(r.orders)).first;
    } else {
      rec.memo_hit = true;
    }
    records_.push_back(rec);
    std::vector<ChiVector> out;
    for (const RelativeOrder& tau : it->second) out.push_back(chi(tau, t));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }

  long long budget() const { return budget_.count; }
  const std::vector<QueryRecord>& records() const { return records_; }

 private:
  const SampleSet& samples_;
  int k_;
  double phi_;
  double gamma_;
  DemixConfig cfg_;
  OracleBudget budget_;
  MarginalTableCache tables_;
  std::map<IndexSet, std::vector<RelativeOrder>> memo_;
  std::vector<QueryRecord> records_;
};

struct DemixMallowsResult {
  std::vector<Permutation> centrals;
  long long queries = 0;
  std::vector<SimulatedWeakOracle::QueryRecord> records;
};

/// Recover the set of central permutations of a Mallows mixture from samples
/// by running insertion demixing over the simulated weak oracle.
inline DemixMallowsResult demix_mallows(const SampleSet& samples, int k,
                                        double phi, double gamma, double delta,
                                        DemixConfig cfg) {
  cfg.validate();
  const int n = samples.n();
  if (cfg.mode == DemixMode::kTheoretical) {
    // N' per the listing: ζ(k, 2k+2, φ, γ) log(n^{2k+3}/δ), in log space
    const double lz = log_zeta(k, 2 * k + 2, phi, gamma);
    const double log_np =
        lz + std::log((2.0 * k + 3) * std::log(static_cast<double>(n)) +
                      std::log(1.0 / delta));
    if (log_np > std::log(1e15))
      throw feasibility_error(
          "theoretical mode infeasible: N' is about e^" +
          std::to_string(log_np) + "; use practical mode");
    cfg.n_prime = static_cast<long long>(std::ceil(std::exp(log_np)));
  }
  cfg.delta = delta;
  SimulatedWeakOracle oracle(samples, k, phi, gamma, cfg);
  DemixMallowsResult res;
  res.centrals = insertion_demixing(oracle, n, k);
  res.queries = oracle.budget();
  res.records = oracle.records();
  return res;
}

/// Estimate mixture weights for known distinct centrals: grid-argmin of the
/// marginal TV on the support of a discriminating tuple.
inline std::vector<double> estimate_weights(const SampleSet& samples, double phi,
                                            double gamma,
                                            const std::vector<Permutation>& perms,
                                            const DemixConfig& cfg) {
  cfg.validate();
  const int k = static_cast<int>(perms.size());
  if (k < 1) throw std::invalid_argument("need at least one permutation");
  detail::require_distinct(perms);
  const int n = samples.n();
  for (const auto& p : perms)
    if (p.size() != n)
      throw std::invalid_argument("permutation size does not match samples");
  if (k == 1) return {1.0};

  const ComparisonTuple t = find_tuple(perms);
  const IndexSet J = t.support();
  const long long N = static_cast<long long>(samples.draws.size());
  const int L =
      cfg.weight_grid > 0
          ? cfg.weight_grid
          : static_cast<int>(std::ceil(k * std::sqrt(static_cast<double>(N))));
  const auto grid = make_weight_grid(k, L, gamma);
  if (grid.empty())
    throw feasibility_error("weight grid empty under the gamma constraint");

  const InjectionIndexer indexer(n, J.size());
  const std::vector<double> data = detail::data_row(samples, J, indexer);

  const bool exact = cfg.backend == MarginalBackend::kExact ||
                     (cfg.backend == MarginalBackend::kAuto &&
                      n <= cfg.enumeration_cap);
  std::vector<std::vector<double>> rows(perms.size());
  if (exact) {
    const detail::IdentityMarginalTable table(n, phi, indexer,
                                              cfg.enumeration_cap);
    for (std::size_t i = 0; i < perms.size(); ++i)
      rows[i] = table.candidate_row(restrict_to(perms[i], J).values);
  } else {
    const long long n_prime =
        cfg.n_prime > 0
            ? cfg.n_prime
            : static_cast<long long>(
                  std::ceil(k * static_cast<double>(N) *
                            std::log(static_cast<double>(N))));
    const Rng base(cfg.seed);
    parallel_for(static_cast<long long>(perms.size()), [&](long long i) {
      rows[static_cast<std::size_t>(i)] = detail::simulated_row(
          n, phi, J, restrict_to(perms[static_cast<std::size_t>(i)], J).values,
          indexer, n_prime, base.split(static_cast<std::uint64_t>(i)));
    });
  }

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_gi = 0;
  for (std::size_t gi = 0; gi < grid.size(); ++gi) {
    double s = 0;
    for (std::size_t x = 0; x < data.size(); ++x) {
      double v = -data[x];
      for (int i = 0; i < k; ++i)
        v += static_cast<double>(grid[gi][static_cast<std::size_t>(i)]) / L *
             rows[static_cast<std::size_t>(i)][x];
      s += std::abs(v);
    }
    if (0.5 * s < best) {
      best = 0.5 * s;
      best_gi = gi;
    }
  }
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i)
    w.push_back(static_cast<double>(grid[best_gi][static_cast<std::size_t>(i)]) / L);
  return w;
}

}  // namespace permix

#endif  // PERMIX_DEMIX_MALLOWS_HPP
