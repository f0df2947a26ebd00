#ifndef PERMIX_DISTRIBUTION_HPP
#define PERMIX_DISTRIBUTION_HPP

#include <cmath>
#include <map>
#include <stdexcept>

namespace permix {

/// Finite distribution over ordered atoms. Atom must be strictly ordered so
/// iteration is deterministic.
template <class Atom>
class DiscreteDist {
 public:
  using map_type = std::map<Atom, double>;

  DiscreteDist() = default;

  static DiscreteDist point_mass(Atom a) {
    DiscreteDist d;
    d.mass_[std::move(a)] = 1.0;
    return d;
  }

  void add(const Atom& a, double mass) {
    if (mass < 0) throw std::invalid_argument("negative probability mass");
    if (mass > 0) mass_[a] += mass;
  }

  double mass(const Atom& a) const {
    auto it = mass_.find(a);
    return it == mass_.end() ? 0.0 : it->second;
  }

  double total_mass() const {
    double s = 0;
    for (const auto& [a, m] : mass_) s += m;
    return s;
  }

  /// Rescale so the total mass is 1. Errors on an all-zero distribution.
  void normalize() {
    const double s = total_mass();
    if (s <= 0) throw std::invalid_argument("cannot normalize zero mass");
    for (auto& [a, m] : mass_) m /= s;
  }

  std::size_t support_size() const { return mass_.size(); }
  const map_type& atoms() const { return mass_; }
  auto begin() const { return mass_.begin(); }
  auto end() const { return mass_.end(); }

  /// Pushforward under f; masses of colliding images accumulate.
  template <class F>
  auto map(F&& f) const {
    using Out = decltype(f(std::declval<const Atom&>()));
    DiscreteDist<Out> out;
    for (const auto& [a, m] : mass_) out.add(f(a), m);
    return out;
  }

 private:
  map_type mass_;
};

/// Total variation distance (1/2) Σ |a - b| over the union of supports.
template <class Atom>
double tv(const DiscreteDist<Atom>& a, const DiscreteDist<Atom>& b) {
  double s = 0;
  auto ia = a.begin(), ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      s += ia->second;
      ++ia;
    } else if (ib->first < ia->first) {
      s += ib->second;
      ++ib;
    } else {
      s += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  for (; ia != a.end(); ++ia) s += ia->second;
  for (; ib != b.end(); ++ib) s += ib->second;
  return 0.5 * s;
}

}  // namespace permix

#endif  // PERMIX_DISTRIBUTION_HPP
