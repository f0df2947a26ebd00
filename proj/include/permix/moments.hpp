#ifndef PERMIX_MOMENTS_HPP
#define PERMIX_MOMENTS_HPP

// Verification machinery for the high-noise analysis: distance moments and
// moment matching, exact TV between Mallows mixtures with its ε-scaling, the
// minimum-TV estimator over the equally-weighted class, and the insertion
// group-determinant matrix L with numerical invertibility certification.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "permix/demix_noiseless.hpp"
#include "permix/distribution.hpp"
#include "permix/mallows.hpp"
#include "permix/oracle.hpp"
#include "permix/permutation.hpp"

namespace permix {

/// ℓ-th distance moment of the mixture at σ: Σ_i w_i d_KT(σ, π_i)^ℓ.
inline double distance_moment(const DeltaMixture<double>& m,
                              const Permutation& s, int ell) {
  if (ell < 1) throw std::invalid_argument("moment order must be >= 1");
  if (s.size() != m.size())
    throw std::invalid_argument("distance_moment: size mismatch");
  double acc = 0;
  for (const auto& [p, w] : m.components())
    acc += w * std::pow(static_cast<double>(kendall_tau(s, p)),
                        static_cast<double>(ell));
  return acc;
}

/// Largest ell ≤ max_ell such that the two mixtures' distance moments agree
/// at every σ ∈ S_n up to order ell; 0 if the first moments already differ.
inline int moments_match(const DeltaMixture<double>& a,
                         const DeltaMixture<double>& b, int max_ell,
                         int cap = kDefaultEnumerationCap) {
  if (a.size() != b.size())
    throw std::invalid_argument("moments_match: size mismatch");
  const int n = a.size();
  if (n > cap)
    throw enumeration_cap_error("moments_match: n exceeds the enumeration cap");
  int matched = max_ell;
  for_each_permutation(n, [&](const Permutation& s) {
    for (int ell = 1; ell <= matched; ++ell) {
      const double da = distance_moment(a, s, ell);
      const double db = distance_moment(b, s, ell);
      if (std::abs(da - db) > 1e-9 * std::max(1.0, std::abs(da))) {
        matched = ell - 1;
        break;
      }
    }
  });
  return matched;
}

inline int moments_match(const HardInstance& h, int max_ell,
                         int cap = kDefaultEnumerationCap) {
  return moments_match(DeltaMixture<double>::uniform(h.sigma1),
                       DeltaMixture<double>::uniform(h.sigma2), max_ell, cap);
}

/// Exact TV between two Mallows mixtures by full-PMF enumeration.
inline double tv_mixtures_exact(const MallowsMixture& a,
                                const MallowsMixture& b,
                                int cap = kDefaultEnumerationCap) {
  if (a.size() != b.size())
    throw std::invalid_argument("tv_mixtures_exact: size mismatch");
  if (a.phi() != b.phi())
    throw std::invalid_argument("tv_mixtures_exact: mixtures must share phi");
  return tv(exact_dist(a, cap), exact_dist(b, cap));
}

/// Exact TV of the hard-instance equally-weighted mixtures on a grid of
/// ε = 1 - φ, with the log-log least-squares slope.
struct EpsScan {
  std::vector<double> eps_grid;   // strictly decreasing
  std::vector<double> tv_values;  // in [0, 1]
  double fitted_slope = 0;
};

inline EpsScan tv_slope_scan(const HardInstance& h,
                             std::vector<double> eps_grid,
                             bool drop_largest_eps = false,
                             int cap = kDefaultEnumerationCap) {
  if (eps_grid.size() < 2)
    throw std::invalid_argument("eps grid needs at least two points");
  for (std::size_t i = 0; i < eps_grid.size(); ++i) {
    if (!(eps_grid[i] > 0 && eps_grid[i] < 1))
      throw std::invalid_argument("eps values must lie in (0,1)");
    if (i && !(eps_grid[i] < eps_grid[i - 1]))
      throw std::invalid_argument("eps grid must be strictly decreasing");
  }
  EpsScan scan;
  scan.eps_grid = std::move(eps_grid);
  auto mixture = [&](const std::vector<Permutation>& perms, double phi) {
    std::vector<MallowsMixture::Component> comps;
    const double w = 1.0 / static_cast<double>(perms.size());
    for (const auto& p : perms) comps.push_back({w, p});
    return MallowsMixture(std::move(comps), phi);
  };
  for (double eps : scan.eps_grid) {
    const double phi = 1.0 - eps;
    scan.tv_values.push_back(tv_mixtures_exact(mixture(h.sigma1, phi),
                                               mixture(h.sigma2, phi), cap));
  }
  // OLS on (log ε, log TV); the largest ε may carry pre-asymptotic curvature
  const std::size_t lo = drop_largest_eps ? 1 : 0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double count = 0;
  for (std::size_t i = lo; i < scan.eps_grid.size(); ++i) {
    if (scan.tv_values[i] <= 0)
      throw std::domain_error("tv is zero on the grid; slope undefined");
    const double x = std::log(scan.eps_grid[i]);
    const double y = std::log(scan.tv_values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    count += 1;
  }
  scan.fitted_slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return scan;
}

/// Minimum-TV estimator over the equally-weighted class: the mixture (as an
/// unordered multiset of k centrals over S_n) whose exact PMF is closest in
/// TV to the empirical PMF. Ties break lexicographically on the sorted
/// candidate list.
inline MallowsMixture min_tv_estimate(const SampleSet& samples, int n, int k,
                                      double phi,
                                      long long max_candidates = 1000000,
                                      int cap = kDefaultEnumerationCap) {
  if (k < 1) throw std::invalid_argument("k must be >= 1");
  if (samples.n() != n)
    throw std::invalid_argument("sample size does not match n");
  if (n > cap)
    throw enumeration_cap_error("min_tv_estimate: n exceeds the enumeration cap");

  std::vector<Permutation> perms;
  for_each_permutation(n, [&](const Permutation& p) { perms.push_back(p); });
  const long long count = static_cast<long long>(perms.size());
  long long candidates = 1;  // C(count + k - 1, k)
  for (int i = 1; i <= k; ++i)
    candidates = candidates * (count + k - i) / i;
  if (candidates > max_candidates)
    throw feasibility_error("min_tv_estimate: candidate class has " +
                            std::to_string(candidates) +
                            " members, above the cap " +
                            std::to_string(max_candidates));

  // per-permutation exact PMF rows over lexicographic S_n ids
  const double logphi = std::log(phi);
  const double logz = log_normalizer(n, phi);
  std::vector<std::vector<double>> rows(perms.size());
  for (std::size_t i = 0; i < perms.size(); ++i) {
    rows[i].resize(perms.size());
    for (std::size_t j = 0; j < perms.size(); ++j)
      rows[i][j] = std::exp(
          static_cast<double>(kendall_tau(perms[j], perms[i])) * logphi - logz);
  }
  std::vector<double> empirical(perms.size(), 0.0);
  for (const auto& s : samples.draws) {
    const auto it = std::lower_bound(perms.begin(), perms.end(), s);
    empirical[static_cast<std::size_t>(it - perms.begin())] += 1.0;
  }
  for (double& v : empirical) v /= static_cast<double>(samples.draws.size());

  const double wk = 1.0 / k;
  std::vector<int> pick(static_cast<std::size_t>(k), 0);
  std::vector<int> best_pick;
  double best_tv = std::numeric_limits<double>::infinity();
  std::vector<double> mix(perms.size());
  auto rec = [&](auto&& self, int i, int from) -> void {
    if (i == k) {
      double s = 0;
      for (std::size_t x = 0; x < mix.size(); ++x) {
        double v = -empirical[x];
        for (int c = 0; c < k; ++c)
          v += wk * rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(c)])][x];
        s += std::abs(v);
      }
      if (0.5 * s < best_tv) {
        best_tv = 0.5 * s;
        best_pick.assign(pick.begin(), pick.end());
      }
      return;
    }
    for (int j = from; j < static_cast<int>(perms.size()); ++j) {
      pick[static_cast<std::size_t>(i)] = j;
      self(self, i + 1, j);
    }
  };
  rec(rec, 0, 0);

  std::vector<MallowsMixture::Component> comps;
  for (int c = 0; c < k; ++c)
    comps.push_back({wk, perms[static_cast<std::size_t>(
                             best_pick[static_cast<std::size_t>(c)])]});
  return MallowsMixture(std::move(comps), phi);
}

/// The insertion group-determinant matrix on S_{r+1}: entry (π, σ) collects
/// the insertion indices s with π∘σ⁻¹ = τ_s, where τ_s fixes the first s
/// ranks and inserts the top rank right after them. τ_r and τ_{r+1} both
/// equal the identity, so the identity relation is ambiguous; the convention
/// decides how the two indices combine (sum 2r+1, max r+1, or min r).
enum class LConvention { kSum, kMax, kMin };

inline const char* to_string(LConvention c) {
  switch (c) {
    case LConvention::kSum: return "sum";
    case LConvention::kMax: return "max";
    case LConvention::kMin: return "min";
  }
  return "sum";
}

struct LMatrix {
  int r = 1;
  LConvention convention = LConvention::kSum;
  /// r+1 diagonal blocks of side r!; block b collects the permutations
  /// ranking element b first.
  std::vector<Eigen::MatrixXd> blocks;
  /// Lexicographic enumeration of S_{r+1} with each permutation's
  /// (block, offset) position.
  std::vector<Permutation> perms;
  std::vector<std::pair<int, int>> position;

  double entry(int pi_id, int sigma_id) const {
    const auto [bp, op] = position[static_cast<std::size_t>(pi_id)];
    const auto [bs, os] = position[static_cast<std::size_t>(sigma_id)];
    if (bp != bs) return 0.0;
    return blocks[static_cast<std::size_t>(bp)](op, os);
  }
};

inline constexpr int kLMatrixCap = 7;

/// τ_s of the construction, 1-based s in [r+1], as a permutation of size r+1.
inline Permutation tau_insertion(int r, int s) {
  if (s < 1 || s > r + 1) throw std::invalid_argument("tau: s out of range");
  std::vector<int> ranks(static_cast<std::size_t>(r) + 1);
  for (int i = 0; i <= r; ++i) {
    int v;
    if (i <= s - 1)
      v = i;
    else if (i == s)
      v = r;
    else
      v = i - 1;
    ranks[static_cast<std::size_t>(i)] = v;
  }
  return Permutation::from_ranks(std::move(ranks));
}

inline LMatrix build_L(int r, LConvention convention = LConvention::kSum) {
  if (r < 1) throw std::invalid_argument("r must be >= 1");
  if (r > kLMatrixCap)
    throw std::invalid_argument("build_L: r above the cap " +
                                std::to_string(kLMatrixCap));
  LMatrix L;
  L.r = r;
  L.convention = convention;
  const int n = r + 1;
  for_each_permutation(n, [&](const Permutation& p) { L.perms.push_back(p); });
  long long fact = 1;
  for (int i = 2; i <= r; ++i) fact *= i;
  const int block_side = static_cast<int>(fact);

  L.position.resize(L.perms.size());
  std::vector<int> next_offset(static_cast<std::size_t>(n), 0);
  for (std::size_t id = 0; id < L.perms.size(); ++id) {
    const int b = L.perms[id].element_at_rank(0);
    L.position[id] = {b, next_offset[static_cast<std::size_t>(b)]++};
  }
  L.blocks.assign(static_cast<std::size_t>(n),
                  Eigen::MatrixXd::Zero(block_side, block_side));

  std::vector<Permutation> taus;
  for (int s = 1; s <= n; ++s) taus.push_back(tau_insertion(r, s));

  for (std::size_t sid = 0; sid < L.perms.size(); ++sid) {
    const auto [bs, os] = L.position[sid];
    for (int s = 1; s <= n; ++s) {
      const Permutation pi = taus[static_cast<std::size_t>(s - 1)].compose(
          L.perms[sid]);  // π = τ_s ∘ σ ⇔ π∘σ⁻¹ = τ_s
      const auto it = std::lower_bound(L.perms.begin(), L.perms.end(), pi);
      const std::size_t pid = static_cast<std::size_t>(it - L.perms.begin());
      const auto [bp, op] = L.position[pid];
      double& cell = L.blocks[static_cast<std::size_t>(bp)](op, os);
      switch (convention) {
        case LConvention::kSum:
          cell += s;
          break;
        case LConvention::kMax:
          cell = std::max(cell, static_cast<double>(s));
          break;
        case LConvention::kMin:
          cell = cell == 0 ? s : std::min(cell, static_cast<double>(s));
          break;
      }
    }
  }
  return L;
}

struct InvertibilityReport {
  bool invertible = false;
  double min_singular_value = 0;             // min over blocks
  std::vector<double> block_min_singular;    // per block
  std::vector<double> block_max_singular;
};

/// Certify invertibility of every diagonal block of L by singular values:
/// a block passes when its smallest singular value exceeds 1e-8 times its
/// spectral norm.
inline InvertibilityReport check_L_invertible(
    int r, LConvention convention = LConvention::kSum) {
  const LMatrix L = build_L(r, convention);
  InvertibilityReport rep;
  rep.invertible = true;
  rep.min_singular_value = std::numeric_limits<double>::infinity();
  for (const auto& block : L.blocks) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(block);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double smax = sv(0);
    rep.block_min_singular.push_back(smin);
    rep.block_max_singular.push_back(smax);
    rep.min_singular_value = std::min(rep.min_singular_value, smin);
    if (!(smin > 1e-8 * smax)) rep.invertible = false;
  }
  return rep;
}

}  // namespace permix

#endif  // PERMIX_MOMENTS_HPP
