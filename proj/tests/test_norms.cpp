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

TEST(PsiNormSum, HeisenbergHasNoSingleSitePart) {
  const auto fam = build_heisenberg(1.0, 1.0, SpinRep(1), chain(3));
  EXPECT_DOUBLE_EQ(psi_norm_sum(fam, chain(3)), 0.0);
}

TEST(PsiNormSum, StaggeredIsingThreeSites) {
  const double b = 1.7;
  const auto fam = build_ising_staggered(1.0, b, SpinRep(1), chain(3));
  EXPECT_NEAR(psi_norm_sum(fam, chain(3)), 3 * b * 0.5, 1e-14);
  EXPECT_DOUBLE_EQ(psi_norm_sum(fam, Region{}), 0.0);
}

TEST(NormEpsZeta, TranslationInvariantHeisenbergClosedForm) {
  // 3 e^eps * 2 nu * |J| * ||bond||
  const auto spec = heisenberg_ti_spec(1, 1.0, 1.0, SpinRep(1));
  EXPECT_NEAR(norm_eps_zeta(spec, {0.607 + kLog3, 0.0}), 8.25713270212884, 1e-12);
  const auto spec2 = heisenberg_ti_spec(2, 0.7, 0.5, SpinRep(2));
  EXPECT_NEAR(norm_eps_zeta(spec2, {0.4 + kLog3, 0.0}), 17.11811165375652, 1e-11);
}

TEST(NormEpsZeta, ZetaIrrelevantWithoutSingleSitePart) {
  const auto spec = heisenberg_ti_spec(2, 1.0, 0.3, SpinRep(1));
  EXPECT_DOUBLE_EQ(norm_eps_zeta(spec, {0.5, 0.0}), norm_eps_zeta(spec, {0.5, 3.0}));
  const auto fam = build_heisenberg(1.0, 0.3, SpinRep(1), chain(4));
  EXPECT_DOUBLE_EQ(norm_eps_zeta(fam, {0.5, 0.0}).interior, norm_eps_zeta(fam, {0.5, 3.0}).interior);
}

TEST(NormEpsZeta, StaggeredIsingHandValue) {
  // two bonds per site, ||Psi||_bond = 2 B j = 1
  const auto spec = ising_staggered_ti_spec(1, 1.0, 1.0, SpinRep(1));
  EXPECT_NEAR(norm_eps_zeta(spec, {0.1, 0.2}), 0.6749294037880016, 1e-14);
  const auto fam = build_ising_staggered(1.0, 1.0, SpinRep(1), chain(5));
  const Region centre = Region::single(Site{2});
  EXPECT_NEAR(norm_eps_zeta(fam, {0.1, 0.2}, centre).interior, 0.6749294037880016, 1e-14);
}

TEST(NormEpsZeta, FiniteWindowInteriorAndBoundary) {
  const auto fam = build_heisenberg(1.0, 1.0, SpinRep(1), chain(5));
  const auto w = norm_eps_zeta(fam, {0.5, 0.0}, nearest_neighbor_interior(chain(5)));
  EXPECT_NEAR(w.interior, 2.4730819060501923, 1e-13);
  EXPECT_NEAR(w.boundary, 2.4730819060501923 / 2, 1e-13);
}

TEST(NormEpsZeta, WindowConvergesToTranslationInvariantValue) {
  const auto spec = heisenberg_ti_spec(2, 1.0, 0.6, SpinRep(1));
  const double ti = norm_eps_zeta(spec, {0.9, 0.0});
  for (int radius : {1, 2}) {
    const Region window = centered_window(2, radius);
    const auto fam = build_heisenberg(1.0, 0.6, SpinRep(1), window);
    EXPECT_NEAR(norm_eps_zeta(fam, {0.9, 0.0}, Region::single(origin(2))).interior, ti, 1e-12);
  }
}

TEST(NormEpsZeta, EmptyFamilyIsZero) {
  InteractionFamily fam(2);
  EXPECT_DOUBLE_EQ(norm_eps_zeta(fam, {1.0, 1.0}).interior, 0.0);
  TIInteractionSpec spec;
  EXPECT_DOUBLE_EQ(norm_eps_zeta(spec, {1.0, 0.0}), 0.0);
}

TEST(NormEpsZeta, StrictlyIncreasingInEpsAndZeta) {
  const auto fam = build_ising_staggered(1.0, 0.8, SpinRep(1), chain(4));
  const NormEvaluator ne(fam);
  double prev = 0.0;
  for (int k = 1; k <= 40; ++k) {
    const double v = ne.value({0.05 * k, 0.3});
    EXPECT_GT(v, prev);
    prev = v;
  }
  prev = 0.0;
  for (int k = 0; k <= 40; ++k) {
    const double v = ne.value({0.7, 0.05 * k});
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(NormEpsZeta, ScalesLinearlyWithMultilocalPart) {
  const auto fam = build_ising_staggered(1.0, 0.8, SpinRep(1), chain(4));
  for (double c : {0.0, 0.5, 3.0}) {
    EXPECT_NEAR(norm_eps_zeta(fam.with_scaled_multilocal(c), {0.7, 0.4}).interior,
                c * norm_eps_zeta(fam, {0.7, 0.4}).interior, 1e-12);
  }
}

TEST(NormEpsZeta, SuppliedAndComputedMotifNormsAgree) {
  const Region cell{Site{0}, Site{1}};
  const Matrix bond = heisenberg_bond_matrix(SpinRep(1), 2.0);
  TIInteractionSpec a, b;
  a.motifs.push_back(Motif{cell, LocalOperator(cell, bond, 2), std::nullopt, 1.0});
  b.motifs.push_back(Motif{cell, std::nullopt, 1.25, 1.0});
  EXPECT_NEAR(norm_eps_zeta(a, {0.3, 0.0}), norm_eps_zeta(b, {0.3, 0.0}), 1e-14);
  TIInteractionSpec bad;
  bad.motifs.push_back(Motif{cell, LocalOperator(cell, bond, 2), 1.0, 1.0});
  EXPECT_THROW(norm_eps_zeta(bad, {0.3, 0.0}), invalid_argument_error);
}

TEST(NormParams, RejectsInvalid) {
  const auto spec = heisenberg_ti_spec(1, 1.0, 1.0, SpinRep(1));
  EXPECT_THROW(norm_eps_zeta(spec, {0.0, 0.0}), invalid_argument_error);
  EXPECT_THROW(norm_eps_zeta(spec, {1.0, -0.1}), invalid_argument_error);
}
