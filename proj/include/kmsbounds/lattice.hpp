#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <initializer_list>
#include <iterator>
#include <optional>
#include <ostream>
#include <vector>

#include "kmsbounds/errors.hpp"

namespace kmsbounds {

/// A point of Z^nu. Sites are totally ordered lexicographically by coordinates.
struct Site {
  std::vector<int> coords;

  Site() = default;
  Site(std::initializer_list<int> c) : coords(c) {}
  explicit Site(std::vector<int> c) : coords(std::move(c)) {}

  int dimension() const { return static_cast<int>(coords.size()); }

  friend bool operator==(const Site&, const Site&) = default;
  friend auto operator<=>(const Site&, const Site&) = default;
};

inline std::ostream& operator<<(std::ostream& os, const Site& s) {
  os << '(';
  for (std::size_t i = 0; i < s.coords.size(); ++i) {
    if (i) os << ',';
    os << s.coords[i];
  }
  return os << ')';
}

/// Manhattan (graph) distance on Z^nu.
inline int graph_distance(const Site& a, const Site& b) {
  if (a.coords.size() != b.coords.size()) {
    throw invalid_argument_error("graph_distance: sites of different lattice dimension");
  }
  int d = 0;
  for (std::size_t i = 0; i < a.coords.size(); ++i) d += std::abs(a.coords[i] - b.coords[i]);
  return d;
}

inline Site origin(int nu) { return Site(std::vector<int>(static_cast<std::size_t>(nu), 0)); }

inline Site translate(const Site& s, const Site& by) {
  if (s.coords.size() != by.coords.size()) {
    throw invalid_argument_error("translate: sites of different lattice dimension");
  }
  Site out = s;
  for (std::size_t i = 0; i < out.coords.size(); ++i) out.coords[i] += by.coords[i];
  return out;
}

/// Finite set of sites, kept sorted and duplicate-free. Tensor legs of any
/// operator on the region follow this order (first site = most significant).
class Region {
 public:
  Region() = default;
  Region(std::initializer_list<Site> sites) : sites_(sites) { normalize(); }
  explicit Region(std::vector<Site> sites) : sites_(std::move(sites)) { normalize(); }

  static Region single(Site s) { return Region(std::vector<Site>{std::move(s)}); }

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  const std::vector<Site>& sites() const { return sites_; }
  const Site& operator[](std::size_t i) const { return sites_[i]; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }

  const Site& min() const {
    if (sites_.empty()) throw invalid_argument_error("Region::min on empty region");
    return sites_.front();
  }

  bool contains(const Site& s) const { return std::binary_search(sites_.begin(), sites_.end(), s); }

  /// True when `other` is a subset of this region.
  bool includes(const Region& other) const {
    return std::includes(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end());
  }

  bool intersects(const Region& other) const {
    auto a = sites_.begin();
    auto b = other.sites_.begin();
    while (a != sites_.end() && b != other.sites_.end()) {
      if (*a == *b) return true;
      if (*a < *b) ++a; else ++b;
    }
    return false;
  }

  std::optional<std::size_t> index_of(const Site& s) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
    if (it == sites_.end() || *it != s) return std::nullopt;
    return static_cast<std::size_t>(it - sites_.begin());
  }

  Region unite(const Region& other) const {
    std::vector<Site> out;
    std::set_union(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                   std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  Region intersect(const Region& other) const {
    std::vector<Site> out;
    std::set_intersection(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                          std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  Region minus(const Region& other) const {
    std::vector<Site> out;
    std::set_difference(sites_.begin(), sites_.end(), other.sites_.begin(), other.sites_.end(),
                        std::back_inserter(out));
    return from_sorted(std::move(out));
  }

  /// Sub-region selected by bit i of `mask` <-> sites()[i].
  Region subset(std::uint64_t mask) const {
    std::vector<Site> out;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (mask & (std::uint64_t{1} << i)) out.push_back(sites_[i]);
    }
    return from_sorted(std::move(out));
  }

  /// Bit mask of `sub` relative to this region; `sub` must be included.
  std::uint64_t mask_of(const Region& sub) const {
    std::uint64_t m = 0;
    for (const auto& s : sub) {
      auto i = index_of(s);
      if (!i) throw invalid_argument_error("Region::mask_of: site outside region");
      m |= std::uint64_t{1} << *i;
    }
    return m;
  }

  friend bool operator==(const Region&, const Region&) = default;
  friend auto operator<=>(const Region&, const Region&) = default;

 private:
  static Region from_sorted(std::vector<Site> s) {
    Region r;
    r.sites_ = std::move(s);
    return r;
  }

  void normalize() {
    std::sort(sites_.begin(), sites_.end());
    sites_.erase(std::unique(sites_.begin(), sites_.end()), sites_.end());
  }

  std::vector<Site> sites_;
};

inline std::ostream& operator<<(std::ostream& os, const Region& r) {
  os << '{';
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (i) os << ' ';
    os << r[i];
  }
  return os << '}';
}

/// Bit masks of all subsets of an n-site region, by cardinality then mask value.
inline std::vector<std::uint64_t> subsets_by_size(std::size_t n) {
  std::vector<std::uint64_t> masks(std::size_t{1} << n);
  for (std::size_t m = 0; m < masks.size(); ++m) masks[m] = m;
  std::stable_sort(masks.begin(), masks.end(), [](std::uint64_t a, std::uint64_t b) {
    return __builtin_popcountll(a) < __builtin_popcountll(b);
  });
  return masks;
}

/// Box {0..length-1}^nu.
inline Region box_window(int nu, int length) {
  if (nu < 1 || length < 1) throw invalid_argument_error("box_window: nu and length must be >= 1");
  std::vector<Site> sites;
  std::vector<int> c(static_cast<std::size_t>(nu), 0);
  while (true) {
    sites.emplace_back(c);
    int k = nu - 1;
    while (k >= 0 && ++c[static_cast<std::size_t>(k)] == length) {
      c[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
  }
  return Region(std::move(sites));
}

/// Box {-radius..radius}^nu, centred at the origin.
inline Region centered_window(int nu, int radius) {
  if (radius < 0) throw invalid_argument_error("centered_window: radius must be >= 0");
  Region b = box_window(nu, 2 * radius + 1);
  std::vector<Site> shifted;
  for (const auto& s : b) {
    Site t = s;
    for (auto& c : t.coords) c -= radius;
    shifted.push_back(std::move(t));
  }
  return Region(std::move(shifted));
}

/// Unordered nearest-neighbour pairs (graph distance 1) inside `window`.
inline std::vector<Region> nearest_neighbor_bonds(const Region& window) {
  std::vector<Region> bonds;
  for (std::size_t a = 0; a < window.size(); ++a) {
    for (std::size_t b = a + 1; b < window.size(); ++b) {
      if (graph_distance(window[a], window[b]) == 1) bonds.push_back(Region{window[a], window[b]});
    }
  }
  return bonds;
}

/// Sites of `window` whose 2*nu lattice neighbours all lie inside `window`.
inline Region nearest_neighbor_interior(const Region& window) {
  std::vector<Site> inner;
  for (const auto& s : window) {
    bool all = true;
    for (std::size_t k = 0; k < s.coords.size() && all; ++k) {
      for (int step : {-1, 1}) {
        Site n = s;
        n.coords[k] += step;
        if (!window.contains(n)) { all = false; break; }
      }
    }
    if (all) inner.push_back(s);
  }
  return Region(std::move(inner));
}

}  // namespace kmsbounds
