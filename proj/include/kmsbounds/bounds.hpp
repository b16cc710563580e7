#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <string>

#include "kmsbounds/models.hpp"
#include "kmsbounds/norms.hpp"

namespace kmsbounds {

/// +infinity marks "no multilocal interaction, every beta is subcritical".
inline constexpr double kInfiniteBeta = std::numeric_limits<double>::infinity();

inline const double kLog3 = std::log(3.0);

inline bool is_infinite_beta(double beta) { return std::isinf(beta) && beta > 0; }

/// Right-hand side of the uniqueness condition: eps / (6 (1 + e^eps)).
inline double target_fn(double eps) {
  if (!(eps > 0.0)) throw invalid_argument_error("target_fn: eps must be > 0");
  return eps / (6.0 * (1.0 + std::exp(eps)));
}

/// eps e^{-eps} / (1 + e^eps): what beta_u is proportional to once the
/// eps-dependence of a nearest-neighbour norm, 3 e^eps, is divided out.
inline double nearest_neighbor_objective(double eps) { return eps * std::exp(-eps) / (1.0 + std::exp(eps)); }

struct EpsOptimum {
  double eps_star = 0.0;
  double value = 0.0;
  bool unimodal = true;
};

/// Maximises `objective` on (0, upper]: grid scan with `step`, then golden
/// section on the bracketing cell. A scan with several local maxima keeps the
/// global grid maximum and clears `unimodal`.
inline EpsOptimum optimize_eps(const std::function<double(double)>& objective, double upper = 10.0,
                               double step = 1e-2, double tol = 1e-10) {
  const int n = static_cast<int>(std::lround(upper / step));
  if (n < 3) throw invalid_argument_error("optimize_eps: grid too coarse");
  std::vector<double> values(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) values[static_cast<std::size_t>(k)] = objective(step * (k + 1));
  int best = 0;
  for (int k = 1; k < n; ++k) {
    if (values[static_cast<std::size_t>(k)] > values[static_cast<std::size_t>(best)]) best = k;
  }
  int local_maxima = 0;
  for (int k = 0; k < n; ++k) {
    const double v = values[static_cast<std::size_t>(k)];
    const bool left = k == 0 || v > values[static_cast<std::size_t>(k - 1)];
    const bool right = k == n - 1 || v > values[static_cast<std::size_t>(k + 1)];
    if (left && right) ++local_maxima;
  }

  double a = step * best;  // grid point left of the best one (0 when best is the first)
  double b = step * (best + 2);
  if (a <= 0.0) a = step * 1e-3;
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = objective(c), fd = objective(d);
  for (int it = 0; it < 200 && (b - a) > tol; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a); fc = objective(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a); fd = objective(d);
    }
  }
  EpsOptimum out;
  out.eps_star = 0.5 * (a + b);
  out.value = objective(out.eps_star);
  const double grid_best = values[static_cast<std::size_t>(best)];
  if (grid_best > out.value) {
    out.eps_star = step * (best + 1);
    out.value = grid_best;
  }
  out.unimodal = local_maxima <= 1;
  return out;
}

/// Solves beta * N(2 beta) = target(eps) for beta, where N(zeta) is the
/// strengthened norm at eps + log 3. N must be nondecreasing in zeta.
/// `multilocal` = false means Phibar vanishes and beta_u is infinite.
inline double solve_beta_u(const std::function<double(double)>& shifted_norm, double eps, bool multilocal = true) {
  const double target = target_fn(eps);
  if (!multilocal || shifted_norm(0.0) <= 0.0) return kInfiniteBeta;
  auto g = [&](double beta) { return beta * shifted_norm(2.0 * beta) - target; };
  double lo = 0.0;
  double hi = target / shifted_norm(0.0);
  int doublings = 0;
  while (g(hi) <= 0.0) {
    lo = hi;
    hi *= 2.0;
    if (++doublings > 60) throw convergence_error("solve_beta_u: bracket growth exceeded 2^60");
  }
  for (int it = 0; it < 400 && hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0) hi = mid; else lo = mid;
  }
  return 0.5 * (lo + hi);
}

/// beta_u from beta ||Phibar||_{eps+log3, 2 beta} = target(eps) on a finite family.
inline double beta_u_general(const NormEvaluator& norms, double eps) {
  return solve_beta_u([&](double zeta) { return norms.value({eps + kLog3, zeta}); }, eps,
                      norms.has_multilocal());
}

inline double beta_u_general(const TIInteractionSpec& spec, double eps) {
  bool multilocal = false;
  for (const auto& m : spec.motifs) multilocal = multilocal || m.weight() > 0.0;
  return solve_beta_u([&](double zeta) { return norm_eps_zeta(spec, {eps + kLog3, zeta}); }, eps,
                      multilocal);
}

/// beta_u = target(eps) / ||Phibar||_{eps+log3} given the plain norm.
inline double beta_u_commuting_from_norm(double shifted_norm, double eps) {
  const double target = target_fn(eps);
  if (shifted_norm <= 0.0) return kInfiniteBeta;
  return target / shifted_norm;
}

/// Commuting-case beta_u; verifies [Phibar_Lambda, Psi_x] = 0 on the operators.
inline double beta_u_commuting(const InteractionFamily& fam, double eps,
                               std::optional<Region> interior = std::nullopt, double tol = 1e-10) {
  const double c = fam.max_psi_phibar_commutator();
  if (c >= tol) {
    throw commutation_error("beta_u_commuting: ||[Phibar, Psi]|| = " + std::to_string(c) + " is not below tolerance");
  }
  const NormEvaluator norms(fam, std::move(interior));
  return beta_u_commuting_from_norm(norms.value({eps + kLog3, 0.0}), eps);
}

/// Commuting-case beta_u for a translation-invariant spec; the caller vouches for commutation.
inline double beta_u_commuting(const TIInteractionSpec& spec, double eps) {
  return beta_u_commuting_from_norm(norm_eps_zeta(spec, {eps + kLog3, 0.0}), eps);
}

struct BetaEstimate {
  double eps_star = 0.0;
  double beta = 0.0;
};

/// Optimises beta_u over eps for a beta(eps) curve.
inline BetaEstimate optimize_beta(const std::function<double(double)>& beta_of_eps) {
  const auto opt = optimize_eps(beta_of_eps);
  return {opt.eps_star, opt.value};
}

/// sup_x sum_y |J(x,y)| ||delta(S1S1+S2S2)+S3S3|| for constant J on Z^nu.
inline double heisenberg_coupling_sum(int nu, double coupling, double delta, SpinRep rep) {
  return 2.0 * nu * std::abs(coupling) * operator_norm(heisenberg_bond_matrix(rep, delta));
}

/// Commuting-case beta_u for the Heisenberg model, optimised over eps:
/// eps e^{-eps} / (1 + e^eps) / (18 S).
inline BetaEstimate heisenberg_beta_u(double coupling_sum) {
  if (coupling_sum <= 0.0) return {optimize_eps(nearest_neighbor_objective).eps_star, kInfiniteBeta};
  const auto opt = optimize_eps(nearest_neighbor_objective);
  return {opt.eps_star, opt.value / (18.0 * coupling_sum)};
}

/// Bratteli-Robinson Prop. 6.2.45 bound for the Heisenberg model.
inline BetaEstimate br_645_beta(SpinRep rep, double coupling_sum) {
  const double d = rep.dim();
  const double j = rep.j();
  auto objective = [&](double eps) {
    return eps * std::exp(-eps) / (1.0 + std::exp(eps) * d * d * d / (2.0 * j));
  };
  const auto opt = optimize_eps(objective);
  if (coupling_sum <= 0.0) return {opt.eps_star, kInfiniteBeta};
  return {opt.eps_star, opt.value / (2.0 * d * d * coupling_sum)};
}

/// Bratteli-Robinson Thm. 6.2.46 bound for the staggered Ising model (field-independent).
inline BetaEstimate br_646_beta(SpinRep rep, int nu, double coupling) {
  const double d = rep.dim();
  auto objective = [&](double eps) { return eps * std::exp(-eps) / (1.0 + 2.0 * std::pow(d, 4) * std::exp(eps)); };
  const auto opt = optimize_eps(objective);
  if (coupling == 0.0) return {opt.eps_star, kInfiniteBeta};
  return {opt.eps_star, opt.value / (8.0 * nu * std::abs(coupling) * d * d * d)};
}

/// Staggered Ising beta_u as the symbolic formula 1/(36 nu |J|) eps e^{-eps}/(1+e^eps),
/// i.e. with ||S3 S3|| counted as 1.
inline BetaEstimate ising_beta_u_symbolic(int nu, double coupling) {
  const auto opt = optimize_eps(nearest_neighbor_objective);
  if (coupling == 0.0) return {opt.eps_star, kInfiniteBeta};
  return {opt.eps_star, opt.value / (36.0 * nu * std::abs(coupling))};
}

/// Staggered Ising beta_u with the true bond norm ||J S3 S3|| = |J| j^2.
inline BetaEstimate ising_beta_u_operator_norm(SpinRep rep, int nu, double coupling) {
  return heisenberg_beta_u(2.0 * nu * std::abs(coupling) * operator_norm(ising_bond_matrix(rep)));
}

/// Classical uniqueness bound log 2 / (6 ||phibar||_{log 3}).
inline double beta_u_classical(double phibar_norm_log3) {
  if (phibar_norm_log3 < 0.0) throw invalid_argument_error("beta_u_classical: norm must be >= 0");
  if (phibar_norm_log3 == 0.0) return kInfiniteBeta;
  return std::numbers::ln2 / (6.0 * phibar_norm_log3);
}

/// The nearest-neighbour classical Heisenberg value 1/(18 J nu max{|delta|,1}) as printed
/// alongside the classical theorem. It is 1/(3 ||phibar||_{log 3}), not log 2/(6 ||phibar||_{log 3}).
inline double classical_heisenberg_beta_u(int nu, double coupling, double delta) {
  const double m = std::abs(coupling) * std::max(std::abs(delta), 1.0);
  if (m == 0.0) return kInfiniteBeta;
  return 1.0 / (18.0 * nu * m);
}

struct FvEstimate {
  double beta = 0.0;
  double ratio = 0.0;  // beta_FV / beta_tilde_u
};

inline double fv_ratio(int nu, double eps) {
  return 18.0 * nu * std::log1p(1.0 / (2.0 * nu * std::exp(6.0 + 2.0 * eps)));
}

/// Friedli-Velenik criterion for the nearest-neighbour classical Heisenberg model.
inline FvEstimate fv_beta(double coupling, double delta, int nu, double eps) {
  if (eps < 0.0) throw invalid_argument_error("fv_beta: eps must be >= 0");
  if (nu < 1) throw invalid_argument_error("fv_beta: nu must be >= 1");
  const double m = std::abs(coupling) * std::max(std::abs(delta), 1.0);
  const double ratio = fv_ratio(nu, eps);
  if (m == 0.0) return {kInfiniteBeta, ratio};
  return {std::log1p(1.0 / (2.0 * nu * std::exp(6.0 + 2.0 * eps))) / m, ratio};
}

/// Model identifier, optimal eps, our beta_u, comparator betas and their ratios to beta_u.
struct BoundReport {
  std::string model_id;
  double eps_star = 0.0;
  double beta_u = 0.0;
  std::map<std::string, BetaEstimate> comparators;
  std::map<std::string, double> ratios;

  /// ratio = comparator.beta / beta_u, omitted when either side is infinite.
  void refresh_ratios() {
    ratios.clear();
    for (const auto& [name, c] : comparators) {
      if (is_infinite_beta(beta_u) || is_infinite_beta(c.beta)) continue;
      ratios[name] = c.beta / beta_u;
    }
  }
};

inline BoundReport heisenberg_report(int nu, double coupling, double delta, SpinRep rep) {
  const double s = heisenberg_coupling_sum(nu, coupling, delta, rep);
  const auto ours = heisenberg_beta_u(s);
  BoundReport r;
  r.model_id = "heisenberg";
  r.eps_star = ours.eps_star;
  r.beta_u = ours.beta;
  r.comparators["bratteli_robinson_645"] = br_645_beta(rep, s);
  r.refresh_ratios();
  return r;
}

/// Staggered Ising: beta_u is the symbolic-formula value; the operator-norm
/// variant is listed as a comparator. Both are independent of the field.
inline BoundReport ising_staggered_report(int nu, double coupling, SpinRep rep) {
  const auto ours = ising_beta_u_symbolic(nu, coupling);
  BoundReport r;
  r.model_id = "ising_staggered";
  r.eps_star = ours.eps_star;
  r.beta_u = ours.beta;
  r.comparators["bratteli_robinson_646"] = br_646_beta(rep, nu, coupling);
  r.comparators["operator_norm_variant"] = ising_beta_u_operator_norm(rep, nu, coupling);
  r.refresh_ratios();
  return r;
}

/// Classical report. beta_u is log2/(6||phibar||_{log3}); the printed closed form
/// 1/(18 J nu max{|delta|,1}) is listed as the "closed_form_display" comparator. The common
/// quantum/classical regime is optimised over eps and reported as "combined",
/// whose eps_star is also the report's eps_star.
struct CombinedReport {
  BoundReport report;
  double beta_hat = 0.0;    // common quantum/classical regime
  double beta_tilde = 0.0;  // log2 / (6 ||phibar||_{log3})
  double beta_closed = 0.0; // 1 / (18 J nu max{|delta|,1})
  bool chain_holds = false; // beta_hat <= beta_tilde
};

inline CombinedReport combined_report(int nu, double coupling, double delta, double psi_site_norm = 0.0) {
  const auto spec = classical_heisenberg_ti_spec(nu, coupling, delta, psi_site_norm);
  CombinedReport out;
  out.beta_tilde = beta_u_classical(norm_eps_zeta(spec, {kLog3, 0.0}));
  BetaEstimate hat;
  if (coupling == 0.0) {
    hat = {optimize_eps(nearest_neighbor_objective).eps_star, kInfiniteBeta};
  } else {
    hat = optimize_beta([&](double eps) { return beta_u_general(spec, eps); });
  }
  out.beta_hat = hat.beta;
  out.chain_holds = is_infinite_beta(out.beta_tilde) ? true : out.beta_hat <= out.beta_tilde;

  auto& r = out.report;
  r.model_id = "classical_heisenberg";
  r.eps_star = hat.eps_star;
  out.beta_closed = classical_heisenberg_beta_u(nu, coupling, delta);
  r.beta_u = out.beta_tilde;
  r.comparators["closed_form_display"] = {0.0, out.beta_closed};
  r.comparators["friedli_velenik"] = {0.0, fv_beta(coupling, delta, nu, 0.0).beta};
  r.comparators["combined"] = hat;
  r.refresh_ratios();
  return out;
}

}  // namespace kmsbounds
