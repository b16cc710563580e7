#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "kmsbounds/interaction.hpp"

namespace kmsbounds {

/// rho = e^{-beta psi} / tr e^{-beta psi} for a Hermitian single-site potential.
inline Matrix gibbs_single_site(const LocalOperator& psi_x, double beta) {
  if (psi_x.region().size() != 1) throw invalid_argument_error("gibbs_single_site: operator must live on one site");
  if (!psi_x.is_hermitian()) throw not_hermitian_error("gibbs_single_site: potential is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(psi_x.matrix());
  const auto& lam = es.eigenvalues();
  const double shift = lam.minCoeff();
  Eigen::VectorXd w(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) w(i) = std::exp(-beta * (lam(i) - shift));
  w /= w.sum();
  Matrix rho = es.eigenvectors() * w.cast<complex>().asDiagonal() * es.eigenvectors().adjoint();
  return 0.5 * (rho + rho.adjoint());
}

/// Single-site reference states eta_x, one density matrix per site.
class EtaFamily {
 public:
  EtaFamily(double beta, std::map<Site, Matrix> rho, int local_dim)
      : beta_(beta), rho_(std::move(rho)), local_dim_(local_dim) {
    for (const auto& [site, r] : rho_) {
      if (r.rows() != local_dim_ || r.cols() != local_dim_) {
        throw invalid_argument_error("EtaFamily: density matrix has wrong dimension");
      }
      if (!is_hermitian(r, 1e-12) || std::abs(r.trace() - complex(1.0)) > 1e-12) {
        throw invalid_argument_error("EtaFamily: density matrix must be Hermitian with unit trace");
      }
      Eigen::SelfAdjointEigenSolver<Matrix> es(r, Eigen::EigenvaluesOnly);
      if (es.eigenvalues().minCoeff() < -1e-12) throw invalid_argument_error("EtaFamily: density matrix is not PSD");
    }
  }

  /// eta_x = Gibbs state of Psi_x at `beta` for every site of `sites`.
  static EtaFamily from_interaction(const InteractionFamily& fam, const Region& sites, double beta) {
    std::map<Site, Matrix> rho;
    for (const auto& s : sites) rho.emplace(s, gibbs_single_site(fam.psi(s), beta));
    return EtaFamily(beta, std::move(rho), fam.local_dim());
  }

  /// Maximally mixed reference state on every site of `sites`.
  static EtaFamily tracial(const Region& sites, int local_dim) {
    std::map<Site, Matrix> rho;
    for (const auto& s : sites) rho.emplace(s, Matrix::Identity(local_dim, local_dim) / static_cast<double>(local_dim));
    return EtaFamily(0.0, std::move(rho), local_dim);
  }

  double beta() const { return beta_; }
  int local_dim() const { return local_dim_; }

  const Matrix& rho(const Site& s) const {
    auto it = rho_.find(s);
    if (it == rho_.end()) throw invalid_argument_error("EtaFamily: no reference state at requested site");
    return it->second;
  }

 private:
  double beta_;
  std::map<Site, Matrix> rho_;
  int local_dim_;
};

/// eta_X applied to the X legs of A, identity on Lambda \ X. Result lives on Lambda \ X.
inline LocalOperator partial_expectation(const LocalOperator& a, const Region& x, const EtaFamily& eta) {
  if (!a.region().includes(x)) throw invalid_argument_error("partial_expectation: X is not contained in the operator region");
  Region current = a.region();
  Matrix m = a.matrix();
  // Contract from the last leg backwards so earlier positions stay valid.
  for (std::size_t k = x.size(); k-- > 0;) {
    const auto pos = *current.index_of(x[k]);
    m = detail::contract_leg(m, a.local_dim(), current.size(), pos, eta.rho(x[k]));
    current = current.minus(Region::single(x[k]));
  }
  return {current, std::move(m), a.local_dim()};
}

/// max_{x in X} ||eta_x(A)||.
inline double eta_free_residual(const LocalOperator& a, const Region& x, const EtaFamily& eta) {
  double worst = 0.0;
  for (const auto& s : x) worst = std::max(worst, operator_norm(partial_expectation(a, Region::single(s), eta).matrix()));
  return worst;
}

/// eta-free components {A~_X}, each stored embedded on `lambda` and keyed by its support X.
struct Decomposition {
  enum class Method { recursive, moebius, refined };

  Region lambda;
  std::map<Region, LocalOperator> components;
  Method method = Method::recursive;

  LocalOperator sum() const {
    Matrix total = Matrix::Zero(components.begin()->second.dim(), components.begin()->second.dim());
    for (const auto& [x, c] : components) total += c.matrix();
    return {lambda, std::move(total), components.begin()->second.local_dim()};
  }

  const LocalOperator& at(const Region& x) const {
    auto it = components.find(x);
    if (it == components.end()) throw invalid_argument_error("Decomposition::at: no component for region");
    return it->second;
  }
};

inline constexpr std::size_t kMaxDecompositionSites = 12;

namespace detail {

inline void check_subset_cap(std::size_t n, std::size_t cap) {
  if (n > cap) {
    throw invalid_argument_error("decomposition over " + std::to_string(n) + " sites exceeds the subset cap of " +
                                 std::to_string(cap));
  }
}

/// embed(eta_{full \ keep}(a), full)
inline Matrix expectation_outside(const LocalOperator& a, const Region& keep, const EtaFamily& eta) {
  return embed(partial_expectation(a, a.region().minus(keep), eta), a.region()).matrix();
}

/// Refined recursion over subsets X of `free_part`, with `fixed` always
/// included in the support: A~_{X u fixed} = eta_{full \ (X u fixed)}(a) - sum_{Y < X} A~_{Y u fixed}.
inline std::map<Region, LocalOperator> refined_components(const LocalOperator& a, const Region& free_part,
                                                          const Region& fixed, const EtaFamily& eta) {
  const std::size_t n = free_part.size();
  std::vector<Matrix> comp(std::size_t{1} << n);
  for (auto mask : subsets_by_size(n)) {
    Matrix c = expectation_outside(a, free_part.subset(mask).unite(fixed), eta);
    // proper subsets of mask
    for (std::uint64_t sub = (mask - 1) & mask;; sub = (sub - 1) & mask) {
      if (sub != mask) c -= comp[sub];
      if (sub == 0) break;
    }
    comp[mask] = std::move(c);
  }
  std::map<Region, LocalOperator> out;
  for (std::uint64_t mask = 0; mask < comp.size(); ++mask) {
    out.emplace(free_part.subset(mask).unite(fixed), LocalOperator(a.region(), std::move(comp[mask]), a.local_dim()));
  }
  return out;
}

}  // namespace detail

/// A~_empty = eta_Lambda(A), A~_X = eta_{Lambda \ X}(A) - sum_{Y subsetneq X} A~_Y.
inline Decomposition decompose_recursive(const LocalOperator& a, const EtaFamily& eta,
                                         std::size_t max_sites = kMaxDecompositionSites) {
  detail::check_subset_cap(a.region().size(), max_sites);
  Decomposition d;
  d.lambda = a.region();
  d.method = Decomposition::Method::recursive;
  d.components = detail::refined_components(a, a.region(), Region{}, eta);
  return d;
}

/// A~_X = sum_{Y subseteq X} (-1)^{|X \ Y|} eta_{Lambda \ Y}(A).
inline Decomposition decompose_moebius(const LocalOperator& a, const EtaFamily& eta,
                                       std::size_t max_sites = kMaxDecompositionSites) {
  const Region& lambda = a.region();
  const std::size_t n = lambda.size();
  detail::check_subset_cap(n, max_sites);
  std::vector<Matrix> expectations(std::size_t{1} << n);
  for (std::uint64_t mask = 0; mask < expectations.size(); ++mask) {
    expectations[mask] = detail::expectation_outside(a, lambda.subset(mask), eta);
  }
  Decomposition d;
  d.lambda = lambda;
  d.method = Decomposition::Method::moebius;
  for (std::uint64_t mask = 0; mask < expectations.size(); ++mask) {
    Matrix c = Matrix::Zero(a.dim(), a.dim());
    for (std::uint64_t sub = mask;; sub = (sub - 1) & mask) {
      const int sign = (__builtin_popcountll(mask ^ sub) % 2 == 0) ? 1 : -1;
      c += static_cast<double>(sign) * expectations[sub];
      if (sub == 0) break;
    }
    d.components.emplace(lambda.subset(mask), LocalOperator(lambda, std::move(c), a.local_dim()));
  }
  return d;
}

/// Which side of A~_Lambda the prefactor product multiplies.
enum class ProductSide { left, right };

/// Refined decomposition of P = A_1 ... A_n A~_Lambda (or A~_Lambda A_1 ... A_n):
/// components indexed by X u Lambda_n with X ranging over subsets of
/// S_n = X_1 u ... u X_n only, Lambda_n = Lambda \ S_n.
inline Decomposition decompose_refined(std::span<const LocalOperator> prefactors, const LocalOperator& a_tilde,
                                       const EtaFamily& eta, ProductSide side = ProductSide::left,
                                       double tol = 1e-10, std::size_t max_sites = kMaxDecompositionSites) {
  const double scale = std::max(1.0, operator_norm(a_tilde.matrix()));
  if (eta_free_residual(a_tilde, a_tilde.region(), eta) > tol * scale) {
    throw not_eta_free_error("decompose_refined: A~ is not eta-free on its region");
  }
  Region s_n;
  for (const auto& p : prefactors) s_n = s_n.unite(p.region());
  detail::check_subset_cap(s_n.size(), max_sites);
  const Region full = s_n.unite(a_tilde.region());
  LocalOperator product = LocalOperator::identity(Region{}, a_tilde.local_dim());
  for (const auto& p : prefactors) product = product * p;
  product = side == ProductSide::left ? product * a_tilde : a_tilde * product;
  product = embed(product, full);

  Decomposition d;
  d.lambda = full;
  d.method = Decomposition::Method::refined;
  d.components = detail::refined_components(product, s_n, a_tilde.region().minus(s_n), eta);
  return d;
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the phases of diag(R) removed.
inline Matrix haar_unitary(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(2.0));
  Matrix z(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) z(i, j) = complex(normal(rng), normal(rng));
  }
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ();
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    const complex rk = r(k, k);
    const complex phase = std::abs(rk) > 0 ? rk / std::abs(rk) : complex(1.0);
    q.col(k) *= phase;
  }
  return q;
}

/// ||mean_U (U A U^dagger) - (tr A / d) 1|| over `samples` Haar unitaries.
inline double haar_trace_identity_check(const LocalOperator& a, int samples, std::uint64_t seed) {
  if (a.region().size() != 1) throw invalid_argument_error("haar_trace_identity_check: operator must live on one site");
  if (samples < 1) throw invalid_argument_error("haar_trace_identity_check: need at least one sample");
  std::mt19937_64 rng(seed);
  const int d = a.local_dim();
  Matrix acc = Matrix::Zero(d, d);
  for (int k = 0; k < samples; ++k) {
    const Matrix u = haar_unitary(d, rng);
    acc += u * a.matrix() * u.adjoint();
  }
  acc /= static_cast<double>(samples);
  const Matrix expected = (a.matrix().trace() / static_cast<double>(d)) * Matrix::Identity(d, d);
  return operator_norm(Matrix(acc - expected));
}

}  // namespace kmsbounds
