#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kmsbounds/errors.hpp"
#include "kmsbounds/lattice.hpp"

namespace kmsbounds {

using complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;

inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// d^sites, throwing dimension_cap_error once it exceeds `cap`.
inline std::size_t checked_dimension(int local_dim, std::size_t sites,
                                     std::size_t cap = kDefaultDimensionCap) {
  std::size_t dim = 1;
  for (std::size_t i = 0; i < sites; ++i) {
    dim *= static_cast<std::size_t>(local_dim);
    if (dim > cap) {
      throw dimension_cap_error("operator dimension " + std::to_string(local_dim) + "^" +
                                std::to_string(sites) + " exceeds cap " + std::to_string(cap));
    }
  }
  return dim;
}

inline bool is_hermitian(const Matrix& m, double rel_tol = 1e-12) {
  if (m.rows() != m.cols()) return false;
  const double scale = m.norm();
  return (m - m.adjoint()).norm() <= rel_tol * std::max(scale, 1e-300);
}

/// Dense operator on the tensor product of the single-site spaces of `region`.
class LocalOperator {
 public:
  LocalOperator(Region region, Matrix matrix, int local_dim)
      : region_(std::move(region)), matrix_(std::move(matrix)), local_dim_(local_dim) {
    if (local_dim_ < 2) throw invalid_argument_error("LocalOperator: local dimension must be >= 2");
    const auto dim = checked_dimension(local_dim_, region_.size());
    if (matrix_.rows() != static_cast<Eigen::Index>(dim) ||
        matrix_.cols() != static_cast<Eigen::Index>(dim)) {
      throw invalid_argument_error("LocalOperator: matrix is " + std::to_string(matrix_.rows()) +
                                   "x" + std::to_string(matrix_.cols()) + ", expected " +
                                   std::to_string(dim) + "x" + std::to_string(dim));
    }
  }

  static LocalOperator identity(Region region, int local_dim) {
    const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim, region.size()));
    return {std::move(region), Matrix::Identity(dim, dim), local_dim};
  }

  static LocalOperator zero(Region region, int local_dim) {
    const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim, region.size()));
    return {std::move(region), Matrix::Zero(dim, dim), local_dim};
  }

  /// c times the unit, carried by the empty region.
  static LocalOperator scalar(complex c, int local_dim) {
    Matrix m(1, 1);
    m(0, 0) = c;
    return {Region{}, std::move(m), local_dim};
  }

  const Region& region() const { return region_; }
  const Matrix& matrix() const { return matrix_; }
  int local_dim() const { return local_dim_; }
  Eigen::Index dim() const { return matrix_.rows(); }

  bool is_hermitian(double rel_tol = 1e-12) const { return kmsbounds::is_hermitian(matrix_, rel_tol); }

  LocalOperator adjoint() const { return {region_, matrix_.adjoint(), local_dim_}; }

  LocalOperator operator-() const { return {region_, -matrix_, local_dim_}; }

  friend LocalOperator operator*(complex c, const LocalOperator& a) {
    return {a.region_, c * a.matrix_, a.local_dim_};
  }
  friend LocalOperator operator*(double c, const LocalOperator& a) { return complex(c) * a; }

 private:
  Region region_;
  Matrix matrix_;
  int local_dim_;
};

namespace detail {

/// Offsets of the digits of `sub` inside the index space of `target`.
struct LegMap {
  std::vector<std::size_t> sub_offset;   // sub index -> offset in target index
  std::vector<std::size_t> rest_bases;   // target indices whose sub digits are all zero
};

inline LegMap leg_map(const Region& sub, const Region& target, int d) {
  const std::size_t n = target.size();
  std::vector<std::size_t> stride(n);
  std::size_t s = 1;
  for (std::size_t k = n; k-- > 0;) {
    stride[k] = s;
    s *= static_cast<std::size_t>(d);
  }
  const std::size_t total = s;
  std::vector<std::size_t> pos;
  for (const auto& site : sub) pos.push_back(*target.index_of(site));

  LegMap map;
  std::size_t sub_dim = 1;
  for (std::size_t i = 0; i < pos.size(); ++i) sub_dim *= static_cast<std::size_t>(d);
  map.sub_offset.resize(sub_dim);
  for (std::size_t idx = 0; idx < sub_dim; ++idx) {
    std::size_t rem = idx, off = 0;
    for (std::size_t k = pos.size(); k-- > 0;) {
      off += (rem % static_cast<std::size_t>(d)) * stride[pos[k]];
      rem /= static_cast<std::size_t>(d);
    }
    map.sub_offset[idx] = off;
  }
  std::vector<bool> in_sub(n, false);
  for (auto p : pos) in_sub[p] = true;
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    bool zero = true;
    for (std::size_t k = n; k-- > 0;) {
      if (in_sub[k] && rem % static_cast<std::size_t>(d) != 0) { zero = false; break; }
      rem /= static_cast<std::size_t>(d);
    }
    if (zero) map.rest_bases.push_back(idx);
  }
  return map;
}

/// tr over leg `pos` of (rho_pos * a): the single-site functional with
/// density `rho` applied to one tensor leg, leaving the others untouched.
inline Matrix contract_leg(const Matrix& a, int d, std::size_t n, std::size_t pos, const Matrix& rho) {
  std::size_t stride = 1;
  for (std::size_t k = pos + 1; k < n; ++k) stride *= static_cast<std::size_t>(d);
  const auto dd = static_cast<std::size_t>(d);
  const std::size_t out_dim = static_cast<std::size_t>(a.rows()) / dd;
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(out_dim));
  auto insert = [&](std::size_t r, std::size_t digit) {
    return (r / stride) * stride * dd + digit * stride + r % stride;
  };
  for (std::size_t r = 0; r < out_dim; ++r) {
    for (std::size_t c = 0; c < out_dim; ++c) {
      complex acc = 0.0;
      for (std::size_t i = 0; i < dd; ++i) {
        for (std::size_t j = 0; j < dd; ++j) {
          const complex w = rho(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
          if (w == complex(0.0)) continue;
          acc += w * a(static_cast<Eigen::Index>(insert(r, i)), static_cast<Eigen::Index>(insert(c, j)));
        }
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// A (x) 1 on `target`, legs ordered by the site order of `target`.
inline LocalOperator embed(const LocalOperator& a, const Region& target) {
  if (!target.includes(a.region())) {
    throw invalid_argument_error("embed: operator region is not contained in target region");
  }
  if (target == a.region()) return a;
  const int d = a.local_dim();
  const auto dim = static_cast<Eigen::Index>(checked_dimension(d, target.size()));
  const auto map = detail::leg_map(a.region(), target, d);
  Matrix out = Matrix::Zero(dim, dim);
  const auto& m = a.matrix();
  const auto sub_dim = map.sub_offset.size();
  for (auto base : map.rest_bases) {
    for (std::size_t i = 0; i < sub_dim; ++i) {
      for (std::size_t j = 0; j < sub_dim; ++j) {
        out(static_cast<Eigen::Index>(base + map.sub_offset[i]),
            static_cast<Eigen::Index>(base + map.sub_offset[j])) =
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      }
    }
  }
  return {target, std::move(out), d};
}

namespace detail {
inline void require_same_dim(const LocalOperator& a, const LocalOperator& b) {
  if (a.local_dim() != b.local_dim()) throw invalid_argument_error("operators with different local dimension");
}
}  // namespace detail

inline LocalOperator operator+(const LocalOperator& a, const LocalOperator& b) {
  detail::require_same_dim(a, b);
  if (a.region() == b.region()) return {a.region(), a.matrix() + b.matrix(), a.local_dim()};
  const Region r = a.region().unite(b.region());
  return {r, embed(a, r).matrix() + embed(b, r).matrix(), a.local_dim()};
}

inline LocalOperator operator-(const LocalOperator& a, const LocalOperator& b) { return a + (-b); }

inline LocalOperator operator*(const LocalOperator& a, const LocalOperator& b) {
  detail::require_same_dim(a, b);
  if (a.region() == b.region()) return {a.region(), a.matrix() * b.matrix(), a.local_dim()};
  const Region r = a.region().unite(b.region());
  return {r, embed(a, r).matrix() * embed(b, r).matrix(), a.local_dim()};
}

inline LocalOperator commutator(const LocalOperator& a, const LocalOperator& b) { return a * b - b * a; }

/// Spectral norm. Hermitian input uses max |eigenvalue|, otherwise the largest singular value.
inline double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (is_hermitian(m)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

inline double operator_norm(const LocalOperator& a, std::size_t max_dim = kDefaultDimensionCap) {
  if (static_cast<std::size_t>(a.dim()) > max_dim) {
    throw dimension_cap_error("operator_norm: dimension " + std::to_string(a.dim()) + " exceeds cap " +
                              std::to_string(max_dim));
  }
  return operator_norm(a.matrix());
}

/// Spin-j representation with Condon-Shortley phases.
struct SpinRep {
  int two_j;

  explicit SpinRep(int two_j_) : two_j(two_j_) {
    if (two_j < 1) throw invalid_argument_error("SpinRep: two_j must be >= 1");
  }
  double j() const { return two_j / 2.0; }
  int dim() const { return two_j + 1; }
};

/// S^1, S^2, S^3 as d x d matrices in the basis m = j, j-1, ..., -j.
inline std::array<Matrix, 3> spin_matrix_set(SpinRep rep) {
  const int d = rep.dim();
  const double j = rep.j();
  Matrix sz = Matrix::Zero(d, d), sp = Matrix::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double m = j - k;
    sz(k, k) = m;
    if (k > 0) sp(k - 1, k) = std::sqrt(j * (j + 1) - m * (m + 1));  // S+ |m> -> |m+1>
  }
  const Matrix sm = sp.adjoint();
  const Matrix sx = 0.5 * (sp + sm);
  const Matrix sy = complex(0.0, -0.5) * (sp - sm);
  return {sx, sy, sz};
}

inline std::array<LocalOperator, 3> spin_matrices(SpinRep rep, const Site& site) {
  auto m = spin_matrix_set(rep);
  const Region r = Region::single(site);
  return {LocalOperator(r, m[0], rep.dim()), LocalOperator(r, m[1], rep.dim()),
          LocalOperator(r, m[2], rep.dim())};
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

}  // namespace kmsbounds
