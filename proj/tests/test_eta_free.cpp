#include <random>

#include <gtest/gtest.h>

#include "kmsbounds/eta_free.hpp"
#include "kmsbounds/models.hpp"
#include "kmsbounds/random.hpp"

using namespace kmsbounds;

namespace {

Region chain(int n) {
  std::vector<Site> s;
  for (int k = 0; k < n; ++k) s.push_back(Site{k});
  return Region(s);
}

EtaFamily random_eta(const Region& sites, int d, double beta, std::mt19937_64& rng) {
  std::map<Site, Matrix> rho;
  for (const auto& x : sites) {
    rho.emplace(x, gibbs_single_site(LocalOperator(Region::single(x), random_hermitian(d, rng), d), beta));
  }
  return EtaFamily(beta, std::move(rho), d);
}

// two-site operator with independently computed components
struct Fixture {
  Matrix i2 = Matrix::Identity(2, 2);
  std::array<Matrix, 3> s = spin_matrix_set(SpinRep(1));
  Matrix a = kron(s[0], s[2]) + 0.3 * kron(s[2], i2) + 0.2 * kron(s[0], s[0]) + 0.7 * kron(i2, s[1]);
  EtaFamily eta = [this] {
    std::map<Site, Matrix> rho;
    rho.emplace(Site{0}, gibbs_single_site(LocalOperator(Region::single(Site{0}), s[2], 2), 1.0));
    rho.emplace(Site{1}, gibbs_single_site(LocalOperator(Region::single(Site{1}), Matrix(0.5 * s[0] - 0.3 * s[2]), 2), 1.0));
    return EtaFamily(1.0, std::move(rho), 2);
  }();
};

}  // namespace

TEST(GibbsSingleSite, StateProperties) {
  const auto s = spin_matrix_set(SpinRep(1));
  const Matrix rho = gibbs_single_site(LocalOperator(Region::single(Site{0}), s[2], 2), 2.0);
  EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
  EXPECT_NEAR((rho * s[2]).trace().real(), -std::tanh(1.0) / 2, 1e-15);
  EXPECT_THROW(gibbs_single_site(LocalOperator(chain(2), Matrix::Identity(4, 4), 2), 1.0), invalid_argument_error);
}

TEST(EtaFamily, RejectsInvalidStates) {
  std::map<Site, Matrix> bad;
  bad.emplace(Site{0}, Matrix::Identity(2, 2));
  EXPECT_THROW(EtaFamily(1.0, bad, 2), invalid_argument_error);
  std::map<Site, Matrix> wrong_dim;
  wrong_dim.emplace(Site{0}, Matrix::Identity(3, 3) / 3.0);
  EXPECT_THROW(EtaFamily(1.0, wrong_dim, 2), invalid_argument_error);
  Matrix neg = Matrix::Zero(2, 2);
  neg(0, 0) = 1.5;
  neg(1, 1) = -0.5;
  std::map<Site, Matrix> not_psd;
  not_psd.emplace(Site{0}, neg);
  EXPECT_THROW(EtaFamily(1.0, not_psd, 2), invalid_argument_error);
  const auto eta = EtaFamily::tracial(chain(2), 2);
  EXPECT_THROW(eta.rho(Site{7}), invalid_argument_error);
}

TEST(PartialExpectation, ProductOperator) {
  std::mt19937_64 rng(3);
  const Matrix x = random_matrix(2, rng), y = random_matrix(2, rng);
  const auto eta = random_eta(chain(2), 2, 0.8, rng);
  const LocalOperator a(chain(2), kron(x, y), 2);
  const auto left = partial_expectation(a, Region::single(Site{0}), eta);
  EXPECT_EQ(left.region(), Region::single(Site{1}));
  EXPECT_LT(Matrix(left.matrix() - (eta.rho(Site{0}) * x).trace() * y).norm(), 1e-14);
  const auto right = partial_expectation(a, Region::single(Site{1}), eta);
  EXPECT_LT(Matrix(right.matrix() - (eta.rho(Site{1}) * y).trace() * x).norm(), 1e-14);
  const auto both = partial_expectation(a, chain(2), eta);
  EXPECT_TRUE(both.region().empty());
  EXPECT_NEAR(std::abs(both.matrix()(0, 0) - (eta.rho(Site{0}) * x).trace() * (eta.rho(Site{1}) * y).trace()), 0.0,
              1e-14);
  EXPECT_THROW(partial_expectation(a, Region::single(Site{4}), eta), invalid_argument_error);
}

TEST(Decompose, TwoSiteOracle) {
  const Fixture f;
  const LocalOperator a(chain(2), f.a, 2);
  const auto d = decompose_recursive(a, f.eta);
  ASSERT_EQ(d.components.size(), 4u);
  const Matrix& empty = d.at(Region{}).matrix();
  EXPECT_NEAR(empty(0, 0).real(), -0.0693175735890015, 1e-14);
  EXPECT_NEAR(Matrix(empty - empty(0, 0) * Matrix::Identity(4, 4)).norm(), 0.0, 1e-14);
  EXPECT_NEAR(d.at(Region::single(Site{0})).matrix().norm(), 0.33404276824107687, 1e-13);
  EXPECT_NEAR(d.at(Region::single(Site{1})).matrix().norm(), 0.7, 1e-13);
  EXPECT_NEAR(d.at(chain(2)).matrix().norm(), 0.512215644998369, 1e-13);
}

TEST(Decompose, ReconstructionEtaFreenessAndAgreement) {
  std::mt19937_64 rng(17);
  for (int draw = 0; draw < 20; ++draw) {
    const int n = 1 + draw % 3;
    const int d = draw % 2 == 0 ? 2 : 3;
    const Region lambda = chain(n);
    const auto eta = random_eta(lambda, d, draw % 4 == 0 ? 0.0 : 1.3, rng);
    const LocalOperator a = random_operator(lambda, d, rng);
    const double an = operator_norm(a);
    const auto rec = decompose_recursive(a, eta);
    const auto mob = decompose_moebius(a, eta);
    EXPECT_EQ(rec.components.size(), std::size_t{1} << n);
    EXPECT_LT(operator_norm(Matrix(rec.sum().matrix() - a.matrix())), 1e-12 * an);
    for (const auto& [x, c] : rec.components) {
      EXPECT_LT(eta_free_residual(c, x, eta), 1e-12 * an);
      EXPECT_LT(operator_norm(Matrix(c.matrix() - mob.at(x).matrix())), 1e-12 * an);
      EXPECT_LE(operator_norm(c), std::pow(2.0, static_cast<double>(x.size())) * an * (1 + 1e-12));
      // acts as the identity off its support
      const Region off = lambda.minus(x);
      if (!off.empty()) {
        const auto traced = partial_expectation(c, off, EtaFamily::tracial(lambda, d));
        EXPECT_LT(operator_norm(Matrix(embed(traced, lambda).matrix() - c.matrix())), 1e-12 * an);
      }
    }
  }
}

TEST(Decompose, SubsetCap) {
  const LocalOperator a = LocalOperator::identity(chain(3), 2);
  const auto eta = EtaFamily::tracial(chain(3), 2);
  EXPECT_THROW(decompose_recursive(a, eta, 2), invalid_argument_error);
  EXPECT_THROW(decompose_moebius(a, eta, 2), invalid_argument_error);
  EXPECT_NO_THROW(decompose_recursive(a, eta, 3));
}

TEST(DecomposeRefined, ComponentsSumToProductAndAreEtaFree) {
  std::mt19937_64 rng(23);
  const Region gamma = chain(4);
  const auto eta = random_eta(gamma, 2, 0.9, rng);
  const Region lam{Site{1}, Site{2}};
  const LocalOperator a_tilde = decompose_recursive(random_operator(lam, 2, rng), eta).at(lam);
  const std::vector<LocalOperator> prefactors{random_operator(Region{Site{0}, Site{1}}, 2, rng),
                                              random_operator(Region{Site{2}, Site{3}}, 2, rng)};
  for (auto side : {ProductSide::left, ProductSide::right}) {
    const auto dec = decompose_refined(prefactors, a_tilde, eta, side);
    // X ranges over subsets of S_n = {0,1,2,3}; Lambda_n is empty here
    EXPECT_EQ(dec.components.size(), 16u);
    LocalOperator product = prefactors[0] * prefactors[1];
    product = side == ProductSide::left ? product * a_tilde : a_tilde * product;
    const Matrix expected = embed(product, gamma).matrix();
    const double scale = operator_norm(expected);
    EXPECT_LT(operator_norm(Matrix(dec.sum().matrix() - expected)), 1e-12 * scale);
    for (const auto& [x, c] : dec.components) EXPECT_LT(eta_free_residual(c, x, eta), 1e-12 * scale);
  }
}

TEST(DecomposeRefined, FixedPartOutsidePrefactors) {
  std::mt19937_64 rng(29);
  const Region gamma = chain(3);
  const auto eta = random_eta(gamma, 2, 0.4, rng);
  const LocalOperator a_tilde = decompose_recursive(random_operator(gamma, 2, rng), eta).at(gamma);
  const std::vector<LocalOperator> prefactors{random_operator(Region::single(Site{0}), 2, rng)};
  const auto dec = decompose_refined(prefactors, a_tilde, eta);
  ASSERT_EQ(dec.components.size(), 2u);
  // every support contains Lambda_n = {1, 2}
  for (const auto& [x, c] : dec.components) EXPECT_TRUE(x.includes(Region{Site{1}, Site{2}}));
  const Matrix expected = (prefactors[0] * a_tilde).matrix();
  EXPECT_LT(operator_norm(Matrix(dec.sum().matrix() - expected)), 1e-12 * operator_norm(expected));
}

TEST(DecomposeRefined, RejectsNonEtaFreeElement) {
  std::mt19937_64 rng(31);
  const auto eta = random_eta(chain(2), 2, 1.0, rng);
  const LocalOperator a = LocalOperator::identity(chain(2), 2);
  const std::vector<LocalOperator> prefactors{random_operator(Region::single(Site{0}), 2, rng)};
  EXPECT_THROW(decompose_refined(prefactors, a, eta), not_eta_free_error);
}

TEST(Haar, UnitaryAndTraceIdentity) {
  std::mt19937_64 rng(37);
  for (int d : {2, 3, 5}) {
    const Matrix u = haar_unitary(d, rng);
    EXPECT_LT(Matrix(u * u.adjoint() - Matrix::Identity(d, d)).norm(), 1e-12);
  }
  const LocalOperator a = random_operator(Region::single(Site{0}), 3, rng);
  const double few = haar_trace_identity_check(a, 100, 1);
  const double many = haar_trace_identity_check(a, 10000, 1);
  EXPECT_LT(many, 0.05 * operator_norm(a));
  EXPECT_LT(many, few);
  EXPECT_THROW(haar_trace_identity_check(LocalOperator::identity(chain(2), 2), 10, 1), invalid_argument_error);
}
