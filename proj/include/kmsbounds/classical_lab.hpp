#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kmsbounds/lattice.hpp"
#include "kmsbounds/quadrature.hpp"

namespace kmsbounds {

using Vec3 = Eigen::Vector3d;
using Rotation = Eigen::Matrix3d;

/// Real function of the unit vectors on `region`, one per site in region order.
struct ClassicalPotential {
  Region region;
  std::function<double(std::span<const Vec3>)> eval;
  std::optional<double> sup_norm;  // closed form, when known
};

using ClassicalObservable = ClassicalPotential;

/// -J (delta (s1 s1' + s2 s2') + s3 s3') on the bond {x, y}.
inline ClassicalPotential classical_heisenberg_bond(const Site& x, const Site& y, double coupling, double delta) {
  if (x == y) throw invalid_argument_error("classical_heisenberg_bond: a bond needs two sites");
  return {Region{x, y},
          [coupling, delta](std::span<const Vec3> s) {
            return -coupling * (delta * (s[0](0) * s[1](0) + s[0](1) * s[1](1)) + s[0](2) * s[1](2));
          },
          std::abs(coupling) * std::max(std::abs(delta), 1.0)};
}

/// c * <n, s_x> on one site.
inline ClassicalPotential classical_field(const Site& x, const Vec3& direction, double c = 1.0) {
  return {Region::single(x), [direction, c](std::span<const Vec3> s) { return c * direction.dot(s[0]); },
          std::abs(c) * direction.norm()};
}

inline Vec3 spherical_point(double theta, double phi) {
  return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
}

/// Product rule on S^2: Gauss-Legendre in cos(theta) with q nodes times the
/// trapezoid rule in phi with 2q nodes. Weights sum to 1.
class SphereGrid {
 public:
  explicit SphereGrid(int q = 16) : q_(q) {
    if (q < 1) throw invalid_argument_error("SphereGrid: order must be >= 1");
    const auto gl = gauss_legendre(q, -1.0, 1.0);
    const int m = 2 * q;
    for (int i = 0; i < q; ++i) {
      const double z = gl.nodes[static_cast<std::size_t>(i)];
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (int k = 0; k < m; ++k) {
        const double phi = 2.0 * std::numbers::pi * k / m;
        nodes_.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
        weights_.push_back(gl.weights[static_cast<std::size_t>(i)] / (2.0 * m));
      }
    }
  }

  int order() const { return q_; }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<Vec3>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }

  double integrate(const std::function<double(const Vec3&)>& f) const {
    double s = 0.0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) s += weights_[i] * f(nodes_[i]);
    return s;
  }

 private:
  int q_;
  std::vector<Vec3> nodes_;
  std::vector<double> weights_;
};

namespace detail {

/// Positions of `sub` inside `window`.
inline std::vector<std::size_t> positions_in(const Region& sub, const Region& window) {
  std::vector<std::size_t> pos;
  for (const auto& s : sub) {
    const auto i = window.index_of(s);
    if (!i) throw invalid_argument_error("classical: function region is not inside the window");
    pos.push_back(*i);
  }
  return pos;
}

/// Evaluates a function whose sites sit at `pos` of a window configuration.
class BoundFunction {
 public:
  BoundFunction(const ClassicalPotential& f, const Region& window)
      : f_(&f), pos_(positions_in(f.region, window)), buf_(pos_.size()) {}

  double operator()(std::span<const Vec3> config) const {
    for (std::size_t i = 0; i < pos_.size(); ++i) buf_[i] = config[pos_[i]];
    return f_->eval(buf_);
  }

 private:
  const ClassicalPotential* f_;
  std::vector<std::size_t> pos_;
  mutable std::vector<Vec3> buf_;
};

/// Calls visit(config, weight) for every node of the product rule on `window`.
template <class Visit>
void for_each_configuration(const Region& window, const SphereGrid& grid, Visit&& visit) {
  const std::size_t n = window.size();
  const std::size_t m = grid.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<Vec3> config(n);
  while (true) {
    double w = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      config[i] = grid.nodes()[idx[i]];
      w *= grid.weights()[idx[i]];
    }
    visit(std::span<const Vec3>(config), w);
    std::size_t k = n;
    while (k > 0 && ++idx[k - 1] == m) idx[--k] = 0;
    if (k == 0) break;
  }
}

inline double max_abs_on(const ClassicalPotential& phi, const std::vector<std::vector<Vec3>>& per_site,
                         std::vector<std::size_t>* best) {
  const std::size_t n = per_site.size();
  std::vector<std::size_t> idx(n, 0);
  std::vector<Vec3> config(n);
  double top = -1.0;
  while (true) {
    for (std::size_t i = 0; i < n; ++i) config[i] = per_site[i][idx[i]];
    const double v = std::abs(phi.eval(config));
    if (v > top) {
      top = v;
      if (best) *best = idx;
    }
    std::size_t k = n;
    while (k > 0 && ++idx[k - 1] == per_site[k - 1].size()) idx[--k] = 0;
    if (k == 0) break;
  }
  return top;
}

}  // namespace detail

/// sup |phi| over (S^2)^region: coarse (theta, phi) grid of `coarse`^2
/// directions per site, then `rounds` rounds of local refinement that halve
/// the search box around the current maximiser. Regions of more than two
/// sites need a closed form.
inline double classical_supnorm(const ClassicalPotential& phi, int coarse = 64, int rounds = 3) {
  const std::size_t n = phi.region.size();
  if (n == 0) return std::abs(phi.eval({}));
  if (n > 2) {
    if (phi.sup_norm) return *phi.sup_norm;
    throw invalid_argument_error("classical_supnorm: regions beyond two sites need a closed-form norm");
  }
  if (coarse < 2) throw invalid_argument_error("classical_supnorm: coarse grid needs >= 2 points per axis");
  const double pi = std::numbers::pi;
  std::vector<std::pair<double, double>> angles;
  std::vector<Vec3> dirs;
  for (int i = 0; i < coarse; ++i) {
    const double th = pi * i / (coarse - 1);
    for (int k = 0; k < coarse; ++k) {
      const double ph = 2.0 * pi * k / coarse;
      angles.emplace_back(th, ph);
      dirs.push_back(spherical_point(th, ph));
    }
  }
  std::vector<std::vector<Vec3>> per_site(n, dirs);
  std::vector<std::size_t> best;
  double top = detail::max_abs_on(phi, per_site, &best);

  std::vector<std::pair<double, double>> centre(n);
  for (std::size_t s = 0; s < n; ++s) centre[s] = angles[best[s]];
  double h_theta = pi / (coarse - 1), h_phi = 2.0 * pi / coarse;
  constexpr int kLocal = 9;
  for (int r = 0; r < rounds; ++r) {
    std::vector<std::vector<std::pair<double, double>>> local_angles(n);
    for (std::size_t s = 0; s < n; ++s) {
      per_site[s].clear();
      for (int a = 0; a < kLocal; ++a) {
        for (int b = 0; b < kLocal; ++b) {
          const double th = centre[s].first + h_theta * (2.0 * a / (kLocal - 1) - 1.0);
          const double ph = centre[s].second + h_phi * (2.0 * b / (kLocal - 1) - 1.0);
          local_angles[s].emplace_back(th, ph);
          per_site[s].push_back(spherical_point(th, ph));
        }
      }
    }
    const double v = detail::max_abs_on(phi, per_site, &best);
    if (v > top) top = v;
    for (std::size_t s = 0; s < n; ++s) centre[s] = local_angles[s][best[s]];
    h_theta *= 0.5;
    h_phi *= 0.5;
  }
  return top;
}

inline constexpr std::size_t kMaxClassicalWindow = 3;

/// Finite-volume classical Gibbs expectation by product quadrature.
inline double classical_gibbs_expectation(const Region& window, std::span<const ClassicalPotential> potentials,
                                          double beta, const ClassicalObservable& f,
                                          const SphereGrid& grid = SphereGrid()) {
  if (window.size() > kMaxClassicalWindow) throw invalid_argument_error("classical_gibbs_expectation: window too large");
  std::vector<detail::BoundFunction> h;
  for (const auto& p : potentials) h.emplace_back(p, window);
  const detail::BoundFunction obs(f, window);
  std::vector<double> energy, value, weight;
  detail::for_each_configuration(window, grid, [&](std::span<const Vec3> c, double w) {
    double e = 0.0;
    for (const auto& term : h) e += term(c);
    energy.push_back(e);
    value.push_back(obs(c));
    weight.push_back(w);
  });
  double emin = energy.empty() ? 0.0 : energy[0];
  for (double e : energy) emin = std::min(emin, e);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    const double b = weight[i] * std::exp(-beta * (energy[i] - emin));
    num += b * value[i];
    den += b;
  }
  return num / den;
}

inline void check_rotation(const Rotation& r, double tol = 1e-10) {
  if ((r.transpose() * r - Rotation::Identity()).norm() > tol || std::abs(r.determinant() - 1.0) > tol) {
    throw invalid_argument_error("rotation matrix is not in SO(3)");
  }
}

/// rho_hat f: f evaluated with the vector at site x replaced by R^{-1} s_x.
inline ClassicalPotential rotate_at(const ClassicalPotential& f, const Site& x, const Rotation& r) {
  const auto pos = f.region.index_of(x);
  if (!pos) return f;
  const Rotation rinv = r.transpose();
  const std::size_t p = *pos;
  auto inner = f.eval;
  return {f.region,
          [inner, rinv, p](std::span<const Vec3> s) {
            std::vector<Vec3> moved(s.begin(), s.end());
            moved[p] = rinv * moved[p];
            return inner(moved);
          },
          f.sup_norm};
}

/// Haar-random rotation from a uniform unit quaternion.
inline Rotation random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

inline Rotation rotation_about_z(double angle) {
  return Eigen::AngleAxisd(angle, Vec3::UnitZ()).toRotationMatrix();
}

/// |omega(a) - omega(e^{beta sum_{X ni x}(phi_X - rho_hat phi_X)} rho_hat a)| under the finite Gibbs measure.
inline double invariance_residual(const Region& window, std::span<const ClassicalPotential> potentials, double beta,
                                  const ClassicalObservable& a, const Site& x, const Rotation& r,
                                  const SphereGrid& grid = SphereGrid()) {
  check_rotation(r);
  if (!window.contains(x)) throw invalid_argument_error("invariance_residual: x is not in the window");
  const double lhs = classical_gibbs_expectation(window, potentials, beta, a, grid);

  std::vector<ClassicalPotential> touching, rotated;
  for (const auto& p : potentials) {
    if (!p.region.contains(x)) continue;
    touching.push_back(p);
    rotated.push_back(rotate_at(p, x, r));
  }
  const Region a_region = a.region.unite(Region::single(x));
  const auto a_pos = detail::positions_in(a.region, a_region);
  auto a_eval = a.eval;
  const ClassicalObservable a_ext{a_region, [a_eval, a_pos](std::span<const Vec3> s) {
                                    std::vector<Vec3> sub;
                                    for (auto i : a_pos) sub.push_back(s[i]);
                                    return a_eval(sub);
                                  },
                                  std::nullopt};
  const ClassicalObservable a_rot = rotate_at(a_ext, x, r);

  std::vector<detail::BoundFunction> t, tr;
  for (const auto& p : touching) t.emplace_back(p, window);
  for (const auto& p : rotated) tr.emplace_back(p, window);
  const detail::BoundFunction ar(a_rot, window);
  const ClassicalObservable rhs_obs{window,
                                    [&](std::span<const Vec3> c) {
                                      double d = 0.0;
                                      for (std::size_t i = 0; i < t.size(); ++i) d += t[i](c) - tr[i](c);
                                      return std::exp(beta * d) * ar(c);
                                    },
                                    std::nullopt};
  const double rhs = classical_gibbs_expectation(window, potentials, beta, rhs_obs, grid);
  return std::abs(lhs - rhs);
}

struct KernelBoundCheck {
  double sample_max = 0.0;     // max over rotations and configurations of |prod (I - rho_hat) phi_l|
  double expansion_max = 0.0;  // max over configurations of the Haar-averaged kernel
  double rhs = 0.0;            // 2^n prod ||phi_l||
};

/// Kernel bound for bonds X_1..X_n all containing x: both the per-rotation
/// product and its rotation average (through the eta_x expansion with the
/// single-site weight e^{-beta psi_x}) stay below 2^n prod ||phi_l||.
inline KernelBoundCheck classical_kernel_bound_check(const Site& x, std::span<const ClassicalPotential> bonds,
                                                     const std::optional<ClassicalPotential>& psi_x, double beta,
                                                     int rotation_samples, std::uint64_t seed, int config_q = 3,
                                                     const SphereGrid& eta_grid = SphereGrid()) {
  const std::size_t n = bonds.size();
  if (n > 3) throw invalid_argument_error("classical_kernel_bound_check: at most three bonds");
  if (rotation_samples < 1) throw invalid_argument_error("classical_kernel_bound_check: need rotation samples");
  Region support = Region::single(x);
  KernelBoundCheck out;
  out.rhs = std::pow(2.0, static_cast<double>(n));
  for (const auto& b : bonds) {
    if (!b.region.contains(x)) throw invalid_argument_error("classical_kernel_bound_check: bond misses x");
    support = support.unite(b.region);
    out.rhs *= classical_supnorm(b);
  }
  if (n == 0) return out;
  const std::size_t xpos = *support.index_of(x);
  std::vector<detail::BoundFunction> phis;
  for (const auto& b : bonds) phis.emplace_back(b, support);

  std::mt19937_64 rng(seed);
  std::vector<Rotation> rots;
  for (int k = 0; k < rotation_samples; ++k) rots.push_back(random_rotation(rng));

  std::optional<detail::BoundFunction> psi;
  const Region xr = Region::single(x);
  if (psi_x) psi.emplace(*psi_x, xr);
  std::vector<double> eta_w;
  double z = 0.0;
  for (std::size_t i = 0; i < eta_grid.size(); ++i) {
    const Vec3& s = eta_grid.nodes()[i];
    const double w = eta_grid.weights()[i] * (psi ? std::exp(-beta * (*psi)(std::span<const Vec3>(&s, 1))) : 1.0);
    eta_w.push_back(w);
    z += w;
  }
  for (auto& w : eta_w) w /= z;

  const SphereGrid config_grid(config_q);
  std::vector<Vec3> moved;
  detail::for_each_configuration(support, config_grid, [&](std::span<const Vec3> c, double) {
    moved.assign(c.begin(), c.end());
    std::vector<double> phi_here(n);
    for (std::size_t l = 0; l < n; ++l) phi_here[l] = phis[l](c);
    for (const auto& r : rots) {
      moved[xpos] = r.transpose() * c[xpos];
      double p = 1.0;
      for (std::size_t l = 0; l < n; ++l) p *= phi_here[l] - phis[l](moved);
      out.sample_max = std::max(out.sample_max, std::abs(p));
    }
    // eta_x of each product over a subset of the bonds, by sphere quadrature at x
    std::vector<double> eta_prod(std::size_t{1} << n, 0.0);
    for (std::size_t i = 0; i < eta_grid.size(); ++i) {
      moved[xpos] = eta_grid.nodes()[i];
      std::vector<double> vals(n);
      for (std::size_t l = 0; l < n; ++l) vals[l] = phis[l](moved);
      for (std::uint64_t mask = 0; mask < eta_prod.size(); ++mask) {
        double p = 1.0;
        for (std::size_t l = 0; l < n; ++l) {
          if (mask >> l & 1U) p *= vals[l];
        }
        eta_prod[mask] += eta_w[i] * p;
      }
    }
    const std::uint64_t full = (std::uint64_t{1} << n) - 1;
    double k = 0.0;
    for (std::uint64_t a = 0; a <= full; ++a) {
      double p = 1.0;
      for (std::size_t l = 0; l < n; ++l) {
        if (a >> l & 1U) p *= phi_here[l];
      }
      const int sign = (n - static_cast<std::size_t>(__builtin_popcountll(a))) % 2 == 0 ? 1 : -1;
      k += sign * p * eta_prod[full & ~a];
    }
    out.expansion_max = std::max(out.expansion_max, std::abs(k));
  });
  return out;
}

}  // namespace kmsbounds
