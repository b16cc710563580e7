#include <cmath>

#include <gtest/gtest.h>

#include "kmsbounds/bounds.hpp"
#include "kmsbounds/models.hpp"

using namespace kmsbounds;

namespace {

Region chain(int n) {
  std::vector<Site> s;
  for (int k = 0; k < n; ++k) s.push_back(Site{k});
  return Region(s);
}

}  // namespace

TEST(TargetFn, Values) {
  EXPECT_NEAR(target_fn(1.0), 0.04482357022833252, 1e-16);
  EXPECT_LT(target_fn(1e-9), 1e-9);
  EXPECT_THROW(target_fn(0.0), invalid_argument_error);
  EXPECT_THROW(target_fn(-1.0), invalid_argument_error);
}

TEST(OptimizeEps, NearestNeighbourObjective) {
  const auto opt = optimize_eps(nearest_neighbor_objective);
  EXPECT_NEAR(opt.eps_star, 0.6070646886154034, 1e-6);
  EXPECT_NEAR(opt.value, 0.11668939384030552, 1e-12);
  EXPECT_TRUE(opt.unimodal);
}

TEST(OptimizeEps, FlagsMultimodalObjective) {
  const auto opt = optimize_eps([](double e) { return std::sin(3.0 * e) + 0.01 * e; });
  EXPECT_FALSE(opt.unimodal);
  EXPECT_GT(opt.value, 1.0);
}

TEST(BrBounds, HeisenbergSpinHalf) {
  const double s = heisenberg_coupling_sum(1, 1.0, 1.0, SpinRep(1));
  const auto br = br_645_beta(SpinRep(1), s);
  const auto ours = heisenberg_beta_u(s);
  EXPECT_NEAR(br.eps_star, 0.5179486153152659, 1e-6);
  EXPECT_NEAR(br.beta / ours.beta, 0.4123538166425758, 1e-9);
}

TEST(BrBounds, HeisenbergRatioMatchesDisplayedFormula) {
  const auto nn = optimize_eps(nearest_neighbor_objective);
  for (int two_j : {1, 2, 3, 5}) {
    const SpinRep rep(two_j);
    const double d = rep.dim(), j = rep.j();
    const double s = heisenberg_coupling_sum(1, 1.0, 0.4, rep);
    const auto br = br_645_beta(rep, s);
    const double e = br.eps_star;
    const double formula =
        9.0 / (d * d) * (e * std::exp(-e) / (1.0 + std::exp(e) * d * d * d / (2.0 * j))) / nn.value;
    EXPECT_NEAR(br.beta / heisenberg_beta_u(s).beta, formula, 1e-9) << two_j;
  }
}

TEST(BrBounds, HeisenbergEpsApproachesHalfFromAbove) {
  const auto br = br_645_beta(SpinRep(16), 1.0);
  EXPECT_GT(br.eps_star, 0.5);
  EXPECT_LT(br.eps_star, 0.518);
  EXPECT_NEAR(br.eps_star, 0.5004930806168517, 1e-6);
}

TEST(BrBounds, IsingSpinHalf) {
  const auto r = ising_staggered_report(1, 1.0, SpinRep(1));
  EXPECT_NEAR(r.comparators.at("bratteli_robinson_646").eps_star, 0.5046723598015819, 1e-6);
  EXPECT_NEAR(r.ratios.at("bratteli_robinson_646"), 0.027194488068054405, 1e-10);
}

TEST(BrBounds, IsingScalesAsInverseNu) {
  const auto r1 = ising_staggered_report(1, 1.0, SpinRep(1));
  const auto r2 = ising_staggered_report(2, 1.0, SpinRep(1));
  EXPECT_NEAR(r2.beta_u, r1.beta_u / 2, 1e-15);
  EXPECT_NEAR(r2.comparators.at("bratteli_robinson_646").beta, r1.comparators.at("bratteli_robinson_646").beta / 2,
              1e-15);
}

TEST(IsingVariants, OperatorNormVariantCountsJSquared) {
  // symbolic formula treats ||S3 S3|| as 1; the operator norm is j^2
  for (int two_j : {1, 2, 3}) {
    const SpinRep rep(two_j);
    const double sym = ising_beta_u_symbolic(1, 1.0).beta;
    const double opn = ising_beta_u_operator_norm(rep, 1, 1.0).beta;
    EXPECT_NEAR(opn / sym, 1.0 / (rep.j() * rep.j()), 1e-12);
  }
}

TEST(BetaUGeneral, ZeroInteractionIsInfinite) {
  InteractionFamily fam(2);
  EXPECT_TRUE(is_infinite_beta(beta_u_general(NormEvaluator(fam), 0.5)));
  const auto spec = heisenberg_ti_spec(1, 0.0, 1.0, SpinRep(1));
  EXPECT_TRUE(is_infinite_beta(beta_u_general(spec, 0.5)));
  EXPECT_TRUE(is_infinite_beta(beta_u_commuting(spec, 0.5)));
}

TEST(BetaUGeneral, HeisenbergMatchesClosedForm) {
  const auto spec = heisenberg_ti_spec(1, 1.0, 1.0, SpinRep(1));
  EXPECT_NEAR(beta_u_general(spec, 0.5), 0.004240555387305333, 1e-10);
  EXPECT_NEAR(beta_u_commuting(spec, 0.5), 0.004240555387305333, 1e-15);
  for (double eps : {0.1, 0.607, 1.3, 4.0}) {
    EXPECT_NEAR(beta_u_general(spec, eps), beta_u_commuting(spec, eps), 1e-10);
  }
}

TEST(BetaUGeneral, IsingWithFieldIsSmallerThanCommutingValue) {
  const auto spec = ising_staggered_ti_spec(1, 1.0, 1.0, SpinRep(1));
  const double general = beta_u_general(spec, 0.6);
  EXPECT_NEAR(general, 0.012640872119754225, 1e-10);
  EXPECT_NEAR(beta_u_commuting(spec, 0.6), 0.012964529487988125, 1e-14);
  EXPECT_LT(general, beta_u_commuting(spec, 0.6));
  const auto weaker = ising_staggered_ti_spec(1, 1.0, 0.5, SpinRep(1));
  EXPECT_GT(beta_u_general(weaker, 0.6), general);
}

TEST(BetaUGeneral, RootAndMonotonicityBelowIt) {
  const auto fam = build_ising_staggered(1.0, 2.0, SpinRep(1), chain(4));
  const NormEvaluator ne(fam);
  const double eps = 0.8;
  const double beta = beta_u_general(ne, eps);
  auto g = [&](double b) { return b * ne.value({eps + kLog3, 2.0 * b}) - target_fn(eps); };
  EXPECT_NEAR(g(beta), 0.0, 1e-10);
  double prev = g(0.0);
  for (int k = 1; k < 50; ++k) {
    const double v = g(beta * k / 50.0);
    EXPECT_LT(v, 0.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
  EXPECT_GT(g(beta * 1.01), 0.0);
}

TEST(BetaUCommuting, RejectsNonCommutingFamily) {
  auto fam = build_heisenberg(1.0, 1.0, SpinRep(1), chain(2));
  fam.add(LocalOperator(Region::single(Site{0}), spin_matrix_set(SpinRep(1))[0], 2));
  EXPECT_THROW(beta_u_commuting(fam, 0.5), commutation_error);
  const auto ising = build_ising_staggered(1.0, 3.0, SpinRep(1), chain(3));
  EXPECT_NO_THROW(beta_u_commuting(ising, 0.5));
}

TEST(BetaUCommuting, IsingIndependentOfField) {
  for (double b : {0.0, 1.0, 10.0}) {
    const auto r = ising_staggered_report(1, 1.0, SpinRep(1));
    const auto fam = build_ising_staggered(1.0, b, SpinRep(1), chain(5));
    const double c = beta_u_commuting(fam, 0.6, Region::single(Site{2}));
    EXPECT_NEAR(c, 0.012964529487988125, 1e-14) << b;
    EXPECT_GT(r.beta_u, 0.0);
  }
}

TEST(Classical, TheoremFormulaAndClosedFormDisplay) {
  const auto spec = classical_heisenberg_ti_spec(1, 1.0, 1.0);
  const double norm = norm_eps_zeta(spec, {kLog3, 0.0});
  EXPECT_NEAR(norm, 6.0, 1e-14);
  EXPECT_NEAR(beta_u_classical(norm), 0.01925408834888737, 1e-16);
  EXPECT_NEAR(classical_heisenberg_beta_u(1, 1.0, 1.0), 1.0 / 18.0, 1e-16);
  EXPECT_TRUE(is_infinite_beta(beta_u_classical(0.0)));
  for (int nu : {1, 2, 3}) {
    for (double delta : {0.3, 1.0, 2.5}) {
      const double n = norm_eps_zeta(classical_heisenberg_ti_spec(nu, 0.7, delta), {kLog3, 0.0});
      EXPECT_NEAR(n, 6 * 0.7 * nu * std::max(std::abs(delta), 1.0), 1e-12);
    }
  }
}

TEST(FriedliVelenik, RatioValuesAndMonotonicity) {
  EXPECT_NEAR(fv_ratio(1, 0.0), 0.022294956524079996, 1e-16);
  EXPECT_NEAR(fv_beta(1.0, 2.0, 2, 0.1).beta, 0.0002536144983467732, 1e-18);
  double prev = 0.0;
  for (int nu = 1; nu <= 200; ++nu) {
    const double r = fv_ratio(nu, 0.0);
    EXPECT_GT(r, prev);
    EXPECT_LT(r, 0.022308769589997227);
    EXPECT_LT(fv_ratio(nu, 0.3), 9.0 / std::exp(6.6));
    prev = r;
  }
  EXPECT_NEAR(fv_ratio(1000000, 0.0), 0.022308769589997227, 1e-8);
  EXPECT_THROW(fv_beta(1.0, 1.0, 1, -0.1), invalid_argument_error);
}

TEST(CombinedReport, ClosedFormWithoutSingleSitePart) {
  const auto c = combined_report(1, 1.0, 1.0, 0.0);
  EXPECT_NEAR(c.beta_hat, 0.003241372051119598, 1e-11);
  EXPECT_TRUE(c.chain_holds);
  const auto c2 = combined_report(1, 1.0, 1.0, 0.5);
  EXPECT_NEAR(c2.beta_hat, 0.003220561072796236, 1e-11);
}

TEST(CombinedReport, ChainHoldsOnGrid) {
  for (int nu : {1, 2, 3}) {
    for (double j : {0.3, 1.0, 4.0}) {
      for (double delta : {0.2, 1.0, 3.0}) {
        const auto c = combined_report(nu, j, delta, 0.2);
        EXPECT_TRUE(c.chain_holds);
        EXPECT_LT(c.beta_hat * 6.0 * norm_eps_zeta(classical_heisenberg_ti_spec(nu, j, delta), {kLog3, 0.0}),
                  std::log(2.0));
      }
    }
  }
}

TEST(CombinedReport, ZeroCouplingIsInfinite) {
  const auto c = combined_report(2, 0.0, 1.0, 0.0);
  EXPECT_TRUE(is_infinite_beta(c.beta_hat));
  EXPECT_TRUE(is_infinite_beta(c.beta_tilde));
  EXPECT_TRUE(c.report.ratios.empty());
}

TEST(BoundReport, RatiosMatchComparators) {
  for (const auto& r : {heisenberg_report(2, 1.0, 0.5, SpinRep(3)), ising_staggered_report(1, 2.0, SpinRep(2)),
                        combined_report(1, 1.0, 1.0).report}) {
    EXPECT_GT(r.beta_u, 0.0);
    for (const auto& [name, ratio] : r.ratios) {
      EXPECT_NEAR(ratio, r.comparators.at(name).beta / r.beta_u, 1e-12 * ratio) << name;
    }
  }
}
