#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "kmsbounds/eta_free.hpp"
#include "kmsbounds/norms.hpp"
#include "kmsbounds/quadrature.hpp"

namespace kmsbounds {

/// Whole finite lattice `gamma` with its interaction and inverse temperature.
struct FiniteSystem {
  Region gamma;
  InteractionFamily fam;
  SpinRep rep;
  double beta;

  FiniteSystem(Region gamma_, InteractionFamily fam_, SpinRep rep_, double beta_)
      : gamma(std::move(gamma_)), fam(std::move(fam_)), rep(rep_), beta(beta_) {
    if (fam.local_dim() != rep.dim()) throw invalid_argument_error("FiniteSystem: spin and interaction dimensions differ");
    if (!(beta >= 0.0) || !std::isfinite(beta)) throw invalid_argument_error("FiniteSystem: beta must be finite and >= 0");
    if (!gamma.includes(fam.support())) throw invalid_argument_error("FiniteSystem: interaction leaves gamma");
    checked_dimension(rep.dim(), gamma.size());
  }

  int local_dim() const { return rep.dim(); }
};

/// Eigendecomposition of a Hermitian matrix with exponentials e^{z H}.
class HermitianSpectrum {
 public:
  explicit HermitianSpectrum(const Matrix& h) {
    if (!is_hermitian(h, 1e-10)) throw not_hermitian_error("HermitianSpectrum: matrix is not Hermitian");
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.adjoint()));
    values_ = es.eigenvalues();
    vectors_ = es.eigenvectors();
  }

  const Eigen::VectorXd& values() const { return values_; }
  const Matrix& vectors() const { return vectors_; }

  /// e^{z (H - shift)}
  Matrix exp(complex z, double shift = 0.0) const {
    Eigen::VectorXcd w(values_.size());
    for (Eigen::Index i = 0; i < values_.size(); ++i) w(i) = std::exp(z * (values_(i) - shift));
    return vectors_ * w.asDiagonal() * vectors_.adjoint();
  }

 private:
  Eigen::VectorXd values_;
  Matrix vectors_;
};

/// H_window = sum of the terms whose region lies inside `window`, embedded on `window`.
inline LocalOperator hamiltonian(const InteractionFamily& fam, const Region& window) {
  LocalOperator h = LocalOperator::zero(window, fam.local_dim());
  Matrix m = h.matrix();
  for (const auto& [r, op] : fam.terms()) {
    if (window.includes(r)) m += embed(op, window).matrix();
  }
  return {window, std::move(m), fam.local_dim()};
}

inline LocalOperator hamiltonian(const FiniteSystem& sys, const Region& window) {
  if (!sys.gamma.includes(window)) throw invalid_argument_error("hamiltonian: window is not inside gamma");
  return hamiltonian(sys.fam, window);
}

inline LocalOperator hamiltonian(const FiniteSystem& sys) { return hamiltonian(sys.fam, sys.gamma); }

/// A state on the algebra of `gamma`, given by its density matrix.
class DensityState {
 public:
  DensityState(Region gamma, Matrix rho, int local_dim)
      : gamma_(std::move(gamma)), rho_(std::move(rho)), local_dim_(local_dim) {
    const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim_, gamma_.size()));
    if (rho_.rows() != dim || rho_.cols() != dim) throw invalid_argument_error("DensityState: wrong dimension");
  }

  static DensityState gibbs(const LocalOperator& h, double beta) {
    HermitianSpectrum spec(h.matrix());
    Matrix rho = spec.exp(complex(-beta), spec.values().minCoeff());
    rho /= rho.trace();
    return {h.region(), std::move(rho), h.local_dim()};
  }

  static DensityState gibbs(const FiniteSystem& sys) { return gibbs(hamiltonian(sys), sys.beta); }

  static DensityState tracial(const Region& gamma, int local_dim) {
    const auto dim = static_cast<Eigen::Index>(checked_dimension(local_dim, gamma.size()));
    return {gamma, Matrix::Identity(dim, dim) / static_cast<double>(dim), local_dim};
  }

  const Region& gamma() const { return gamma_; }
  const Matrix& rho() const { return rho_; }

  complex expect(const LocalOperator& a) const {
    return (rho_ * embed(a, gamma_).matrix()).trace();
  }

 private:
  Region gamma_;
  Matrix rho_;
  int local_dim_;
};

inline complex gibbs_expectation(const FiniteSystem& sys, const LocalOperator& a) {
  return DensityState::gibbs(sys).expect(a);
}

/// tau_t(A) = e^{itH} A e^{-itH}, t complex. A is embedded on the region of H.
inline LocalOperator evolve(const LocalOperator& a, const LocalOperator& h, complex t) {
  const auto& region = h.region();
  const Matrix am = embed(a, region).matrix();
  if (t == complex(0.0)) return {region, am, a.local_dim()};
  HermitianSpectrum spec(h.matrix());
  const double shift = spec.values().mean();
  const complex it = complex(0.0, 1.0) * t;
  return {region, spec.exp(it, shift) * am * spec.exp(-it, shift), a.local_dim()};
}

/// delta(A) = i sum_{X meets Lambda} [Phi_X, A], on Lambda joined with every touching X.
inline LocalOperator generator_delta(const LocalOperator& a, const InteractionFamily& fam) {
  Region out = a.region();
  for (const auto& [r, op] : fam.terms()) {
    if (r.intersects(a.region())) out = out.unite(r);
  }
  const Matrix am = embed(a, out).matrix();
  Matrix acc = Matrix::Zero(am.rows(), am.cols());
  for (const auto& [r, op] : fam.terms()) {
    if (!r.intersects(a.region())) continue;
    const Matrix p = embed(op, out).matrix();
    acc += p * am - am * p;
  }
  return {out, complex(0.0, 1.0) * acc, a.local_dim()};
}

/// Upper bound on ||delta^n(A)|| for A on Lambda in terms of ||Phibar||_{eps,zeta}.
inline double delta_power_bound(double a_norm, double psi_norm_lambda, std::size_t lambda_size, int n, double eps,
                                double zeta, double phibar_norm_eps_zeta) {
  if (!(eps > 0.0) || !(zeta > 0.0)) throw invalid_argument_error("delta_power_bound: eps and zeta must be > 0");
  const double q = zeta / eps * phibar_norm_eps_zeta;
  double geometric = 0.0;
  for (int k = 0; k <= n; ++k) geometric += std::pow(q, k);
  return a_norm * std::exp(zeta * psi_norm_lambda + eps * static_cast<double>(lambda_size)) * std::tgamma(n + 1.0) *
         std::pow(2.0 / zeta, n) * geometric;
}

namespace detail {

/// Index tuples (i_1..i_n) into `regions` with X_{i_j} meeting S_{j-1}, S_0 = start, S_j = S_{j-1} u X_{i_j}.
inline std::vector<std::vector<std::size_t>> constrained_tuples(const std::vector<Region>& regions, const Region& start,
                                                                int n) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> current;
  auto rec = [&](auto&& self, const Region& s, int depth) -> void {
    if (depth == n) {
      out.push_back(current);
      return;
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
      if (!regions[i].intersects(s)) continue;
      current.push_back(i);
      self(self, s.unite(regions[i]), depth + 1);
      current.pop_back();
    }
  };
  rec(rec, start, 0);
  return out;
}

/// prod_{x in region} e^{z Psi_x} as one matrix on `region`.
inline Matrix psi_exponential(const InteractionFamily& fam, const Region& region, complex z) {
  Matrix out = Matrix::Identity(1, 1);
  for (const auto& x : region) out = kron(out, HermitianSpectrum(fam.psi(x).matrix()).exp(z));
  return out;
}

/// tau^Psi_t(A) on the region of A.
inline Matrix free_evolve(const InteractionFamily& fam, const LocalOperator& a, complex t) {
  const complex it = complex(0.0, 1.0) * t;
  return psi_exponential(fam, a.region(), it) * a.matrix() * psi_exponential(fam, a.region(), -it);
}

}  // namespace detail

/// tau^Psi_t(A) for complex t.
inline LocalOperator free_evolution(const InteractionFamily& fam, const LocalOperator& a, complex t) {
  return {a.region(), detail::free_evolve(fam, a, t), a.local_dim()};
}

struct DysonResult {
  LocalOperator value;
  bool precondition_met;
};

/// True when 2|t| ||Phibar||_{eps,2|t|} < eps for some eps on a coarse grid.
inline bool dyson_precondition(const InteractionFamily& fam, double abs_t) {
  const NormEvaluator norms(fam);
  if (!norms.has_multilocal()) return true;
  for (int k = 1; k <= 1000; ++k) {
    const double eps = 0.01 * k;
    if (2.0 * abs_t * norms.value({eps, 2.0 * abs_t}) < eps) return true;
  }
  return false;
}

/// Dyson series of tau_t(A) around the single-site dynamics, truncated after order N.
/// Order n contributes (it)^n int_{u_n<=...<=u_1<=1} ad_{Y_n}...ad_{Y_1} tau^Psi_t(A),
/// Y_k = tau^Psi_{t u_k}(Phibar_{X_k}), X_1 meeting Lambda and X_k meeting S_{k-1}.
inline DysonResult dyson_truncated(const LocalOperator& a, const FiniteSystem& sys, complex t, int order,
                                   int points_per_axis = 8) {
  if (order < 0) throw invalid_argument_error("dyson_truncated: order must be >= 0");
  if (!sys.gamma.includes(a.region())) throw invalid_argument_error("dyson_truncated: A is not supported in gamma");
  const auto& gamma = sys.gamma;
  const int d = sys.local_dim();
  const Matrix a0 = embed(free_evolution(sys.fam, a, t), gamma).matrix();
  Matrix total = a0;

  std::vector<Region> regions;
  std::vector<LocalOperator> phis;
  for (const auto* op : sys.fam.multilocal_terms()) {
    regions.push_back(op->region());
    phis.push_back(*op);
  }
  const complex it = complex(0.0, 1.0) * t;
  for (int n = 1; n <= order && !regions.empty(); ++n) {
    const auto tuples = detail::constrained_tuples(regions, a.region(), n);
    const SimplexQuadrature quad(n, 1.0, points_per_axis);
    Matrix term = Matrix::Zero(a0.rows(), a0.cols());
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const auto& u = quad.times(q);
      // Y per region at each needed time, cached per node.
      std::vector<std::vector<Matrix>> y(static_cast<std::size_t>(n));
      for (int k = 0; k < n; ++k) {
        y[static_cast<std::size_t>(k)].reserve(phis.size());
        for (const auto& phi : phis) {
          const LocalOperator yk(phi.region(), detail::free_evolve(sys.fam, phi, t * u[static_cast<std::size_t>(k)]), d);
          y[static_cast<std::size_t>(k)].push_back(embed(yk, gamma).matrix());
        }
      }
      for (const auto& tup : tuples) {
        Matrix cur = a0;
        for (int k = 0; k < n; ++k) {
          const Matrix& yk = y[static_cast<std::size_t>(k)][tup[static_cast<std::size_t>(k)]];
          cur = yk * cur - cur * yk;
        }
        term += quad.weight(q) * cur;
      }
    }
    total += std::pow(it, n) * term;
  }
  return {LocalOperator(gamma, std::move(total), d), dyson_precondition(sys.fam, std::abs(t))};
}

/// |omega(A tau_{i beta}(B)) - omega(B A)| for the state `omega` and dynamics of `h`.
inline double kms_residual(const DensityState& omega, const LocalOperator& h, double beta, const LocalOperator& a,
                           const LocalOperator& b) {
  const LocalOperator b_shift = evolve(b, h, complex(0.0, beta));
  return std::abs(omega.expect(a * b_shift) - omega.expect(b * a));
}

inline double kms_residual(const FiniteSystem& sys, const LocalOperator& a, const LocalOperator& b) {
  const LocalOperator h = hamiltonian(sys);
  return kms_residual(DensityState::gibbs(h, sys.beta), h, sys.beta, a, b);
}

struct LemmaCheck {
  double lhs;
  double rhs;
};

/// Constrained sum over X_1..X_n : Lambda of prod alpha against n! eps^-n e^{eps|Lambda|} (sup_x sum_{X ni x} e^{eps(|X|-1)} alpha_X)^n.
inline LemmaCheck lemma1_check(const std::map<Region, double>& alpha, const Region& lambda, int n, double eps) {
  if (n < 0) throw invalid_argument_error("lemma1_check: n must be >= 0");
  if (!(eps > 0.0)) throw invalid_argument_error("lemma1_check: eps must be > 0");
  std::vector<Region> regions;
  std::vector<double> values;
  for (const auto& [r, v] : alpha) {
    if (v < 0.0) throw invalid_argument_error("lemma1_check: alpha must be nonnegative");
    if (r.empty()) continue;
    regions.push_back(r);
    values.push_back(v);
  }
  LemmaCheck out{0.0, 0.0};
  for (const auto& tup : detail::constrained_tuples(regions, lambda, n)) {
    double p = 1.0;
    for (auto i : tup) p *= values[i];
    out.lhs += p;
  }
  std::map<Site, double> per_site;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const double w = std::exp(eps * static_cast<double>(regions[i].size() - 1)) * values[i];
    for (const auto& s : regions[i]) per_site[s] += w;
  }
  double sup = 0.0;
  for (const auto& [s, v] : per_site) sup = std::max(sup, v);
  out.rhs = std::tgamma(n + 1.0) * std::pow(eps, -n) * std::exp(eps * static_cast<double>(lambda.size())) *
            std::pow(sup, n);
  return out;
}

inline constexpr int kMaxKernelOrder = 3;

namespace detail {

inline Region kernel_support(const Site& x, std::span<const Region> regions) {
  Region s = Region::single(x);
  for (const auto& r : regions) s = s.unite(r);
  return s;
}

/// Y_k = tau^Psi_{i s_k}(Phibar_{X_k}) embedded on `support`.
inline std::vector<Matrix> kernel_factors(const FiniteSystem& sys, std::span<const Region> regions,
                                          std::span<const double> times, const Region& support) {
  std::vector<Matrix> y;
  for (std::size_t k = 0; k < regions.size(); ++k) {
    const LocalOperator phi = sys.fam.phibar(regions[k]);
    const LocalOperator yk = free_evolution(sys.fam, phi, complex(0.0, times[k]));
    y.push_back(embed(yk, support).matrix());
  }
  return y;
}

inline void check_kernel_args(const Site& x, std::span<const Region> regions, std::span<const double> times) {
  if (regions.empty() || regions.size() > static_cast<std::size_t>(kMaxKernelOrder)) {
    throw invalid_argument_error("ks_kernel: order must be between 1 and 3");
  }
  if (regions.size() != times.size()) throw invalid_argument_error("ks_kernel: one time per region required");
  Region s = Region::single(x);
  for (const auto& r : regions) {
    if (!r.intersects(s)) throw invalid_argument_error("ks_kernel: regions violate the constraint chain from x");
    s = s.unite(r);
  }
}

}  // namespace detail

/// Haar-averaged nested commutator at site x, via its 2^n-term expansion:
/// sum_rho (-1)^{n-|rho|} eta_x(Y_n^{rho_n}...Y_1^{rho_1}) Y_1^{1-rho_1}...Y_n^{1-rho_n}.
/// Result lives on {x} u X_1 u ... u X_n.
inline LocalOperator ks_kernel(const FiniteSystem& sys, const Site& x, std::span<const Region> regions,
                               std::span<const double> times) {
  detail::check_kernel_args(x, regions, times);
  const Region support = detail::kernel_support(x, regions);
  const int d = sys.local_dim();
  const auto y = detail::kernel_factors(sys, regions, times, support);
  const EtaFamily eta = EtaFamily::from_interaction(sys.fam, Region::single(x), sys.beta);
  const std::size_t n = y.size();
  const auto dim = y.front().rows();
  Matrix out = Matrix::Zero(dim, dim);
  for (std::uint64_t rho = 0; rho < (std::uint64_t{1} << n); ++rho) {
    Matrix left = Matrix::Identity(dim, dim), right = Matrix::Identity(dim, dim);
    for (std::size_t k = n; k-- > 0;) {
      if (rho >> k & 1U) left = left * y[k];
    }
    for (std::size_t k = 0; k < n; ++k) {
      if (!(rho >> k & 1U)) right = right * y[k];
    }
    const LocalOperator left_op(support, std::move(left), d);
    const Matrix eta_left = embed(partial_expectation(left_op, Region::single(x), eta), support).matrix();
    const int sign = (n - static_cast<std::size_t>(__builtin_popcountll(rho))) % 2 == 0 ? 1 : -1;
    out += static_cast<double>(sign) * eta_left * right;
  }
  return {support, std::move(out), d};
}

/// 2^n prod e^{2 beta ||Psi||_{X_l}} ||Phibar_{X_l}||
inline double ks_kernel_bound(const FiniteSystem& sys, std::span<const Region> regions) {
  double b = std::pow(2.0, static_cast<double>(regions.size()));
  for (const auto& r : regions) {
    b *= std::exp(2.0 * sys.beta * psi_norm_sum(sys.fam, r)) * operator_norm(sys.fam.phibar(r));
  }
  return b;
}

struct HaarProjection {
  complex mean;
  double stderr_re;
  double stderr_im;
};

/// Monte-Carlo estimate of tr(W K) where K is the normalised Haar average of
/// U^dagger ad_{Y_1}...ad_{Y_n}(e^{-beta Psi_x} U) computed sample by sample.
inline HaarProjection ks_kernel_haar_projection(const FiniteSystem& sys, const Site& x, std::span<const Region> regions,
                                                std::span<const double> times, const Matrix& w, int samples,
                                                std::uint64_t seed) {
  detail::check_kernel_args(x, regions, times);
  if (samples < 2) throw invalid_argument_error("ks_kernel_haar_projection: need at least two samples");
  const Region support = detail::kernel_support(x, regions);
  const int d = sys.local_dim();
  const auto y = detail::kernel_factors(sys, regions, times, support);
  if (w.rows() != y.front().rows()) throw invalid_argument_error("ks_kernel_haar_projection: W has wrong dimension");
  const Matrix boltz = HermitianSpectrum(sys.fam.psi(x).matrix()).exp(complex(-sys.beta));
  const double norm = boltz.trace().real() / d;
  std::mt19937_64 rng(seed);
  double sum_re = 0.0, sum_im = 0.0, sq_re = 0.0, sq_im = 0.0;
  for (int k = 0; k < samples; ++k) {
    const Matrix u = haar_unitary(d, rng);
    const Matrix ue = embed(LocalOperator(Region::single(x), u, d), support).matrix();
    const Matrix ze = embed(LocalOperator(Region::single(x), Matrix(boltz * u), d), support).matrix();
    Matrix cur = ze;
    for (const auto& yk : y) cur = yk * cur - cur * yk;
    const complex v = (w * ue.adjoint() * cur).trace() / norm;
    sum_re += v.real();
    sum_im += v.imag();
    sq_re += v.real() * v.real();
    sq_im += v.imag() * v.imag();
  }
  const double m = samples;
  const double mean_re = sum_re / m, mean_im = sum_im / m;
  const double var_re = std::max(0.0, (sq_re - m * mean_re * mean_re) / (m - 1.0));
  const double var_im = std::max(0.0, (sq_im - m * mean_im * mean_im) / (m - 1.0));
  return {complex(mean_re, mean_im), std::sqrt(var_re / m), std::sqrt(var_im / m)};
}

struct KsResidual {
  complex omega;                      // exact Gibbs value of the test element
  std::vector<complex> series_terms;  // order-n contribution, n = 1..N
  std::vector<double> residuals;      // |omega - partial sum through order N|
  double telescoping_error = 0.0;     // max |sum_X omega(A~_{X u Lambda_n}) - omega(A~ K)|
};

/// Kirkwood-Salzburg residual of the exact Gibbs state for each eta-free test element.
/// The kernel is integrated over the simplex per tuple before decomposing (linearity).
inline std::vector<KsResidual> ks_residual(const FiniteSystem& sys, std::span<const LocalOperator> test_elems,
                                           int order, int points_per_axis = 8, double eta_tol = 1e-10) {
  if (order < 1 || order > kMaxKernelOrder) throw invalid_argument_error("ks_residual: order must be between 1 and 3");
  const DensityState omega = DensityState::gibbs(sys);
  std::vector<Region> regions;
  for (const auto* op : sys.fam.multilocal_terms()) regions.push_back(op->region());

  std::vector<KsResidual> out;
  for (const auto& a : test_elems) {
    if (a.region().empty()) throw invalid_argument_error("ks_residual: test elements need a nonempty region");
    if (!sys.gamma.includes(a.region())) throw invalid_argument_error("ks_residual: test element outside gamma");
    const EtaFamily eta = EtaFamily::from_interaction(sys.fam, sys.gamma, sys.beta);
    const double scale = std::max(1.0, operator_norm(a.matrix()));
    if (eta_free_residual(a, a.region(), eta) > eta_tol * scale) {
      throw not_eta_free_error("ks_residual: test element is not eta-free");
    }
    const Site x = a.region().min();
    KsResidual r;
    r.omega = omega.expect(a);
    complex partial = 0.0;
    for (int n = 1; n <= order; ++n) {
      const SimplexQuadrature quad(n, sys.beta, points_per_axis);
      complex term = 0.0;
      for (const auto& tup : detail::constrained_tuples(regions, Region::single(x), n)) {
        std::vector<Region> xs;
        for (auto i : tup) xs.push_back(regions[i]);
        std::optional<LocalOperator> k_int;
        for (std::size_t q = 0; q < quad.size(); ++q) {
          LocalOperator k = quad.weight(q) * ks_kernel(sys, x, xs, quad.times(q));
          k_int = k_int ? *k_int + k : k;
        }
        const std::vector<LocalOperator> pref{*k_int};
        const Decomposition dec = decompose_refined(pref, a, eta, ProductSide::right, eta_tol);
        complex summed = 0.0;
        for (const auto& [idx, c] : dec.components) summed += omega.expect(c);
        const complex direct = omega.expect(a * *k_int);
        r.telescoping_error = std::max(r.telescoping_error, std::abs(summed - direct));
        term += summed;
      }
      term *= (n % 2 == 1) ? 1.0 : -1.0;
      r.series_terms.push_back(term);
      partial += term;
      r.residuals.push_back(std::abs(r.omega - partial));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace kmsbounds
