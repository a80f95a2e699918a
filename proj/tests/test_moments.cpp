#include <cmath>

#include <gtest/gtest.h>

#include "vertexlab/diffops.hpp"
#include "vertexlab/moments.hpp"

using namespace vertexlab;

namespace {

ModelParams mom_params() {
  ModelParams p;
  p.q = 0.45;
  p.u = {-0.9, -1.2, -0.6};
  p.a = {1.0, 1.15, 0.9};
  p.nu = {0.3, 0.4, 0.2};
  return p;
}

}  // namespace

TEST(Residues, ZeroColumn) {
  const ModelParams p = mom_params();
  for (int T = 0; T <= 3; ++T) EXPECT_NEAR(moment_height_residues({0}, T, p), std::pow(p.q, T), 1e-14);
}

TEST(Residues, TimeZero) {
  const ModelParams p = mom_params();
  EXPECT_DOUBLE_EQ(moment_height_residues({2, 1}, 0, p), 1.0);
}

TEST(Residues, SingleBernoulliRow) {
  ModelParams p = mom_params();
  p.nu[0] = 0.0;
  const double au = p.a[0] * p.u[0];
  EXPECT_NEAR(moment_height_residues({1}, 1, p), (1.0 - p.q * au) / (1.0 - au), 1e-14);
}

TEST(Residues, MatchExactLaw) {
  const ModelParams p = mom_params();
  for (int N = 1; N <= 3; ++N)
    for (int T = 1; T <= 3; ++T) {
      const auto law = height_law_exact(N, T, p);
      double e = 0.0;
      for (int h = 0; h <= T; ++h) e += law[h] * std::pow(p.q, h);
      EXPECT_NEAR(moment_height_residues({N}, T, p), e, 1e-12);
    }
}

TEST(Quadrature, TimeZeroIsOneMinusNuProduct) {
  const ModelParams p = mom_params();
  for (int N = 1; N <= 3; ++N)
    EXPECT_NEAR(moment_product_quadrature({N}, 0, p).value, 1.0 - product_shift(p.nu, N), 1e-10);
}

TEST(Quadrature, AgreesWithOperatorRoute) {
  const ModelParams p = mom_params();
  for (int N = 1; N <= 3; ++N)
    for (int T = 1; T <= 3; ++T)
      EXPECT_NEAR(moment_product_quadrature({N}, T, p).value, operator_expectation({N}, T, N, p), 1e-9);
}

TEST(Quadrature, TwoLevelsAgreeWithResidues) {
  const ModelParams p = mom_params();
  for (int N = 1; N <= 3; ++N)
    EXPECT_NEAR(moment_product_quadrature({N, N}, 2, p).value, moment_product_residues({N, N}, 2, p), 1e-9);
}

TEST(Contours, NestedFeasibilityIsChecked) {
  EXPECT_THROW(a_cluster_contours({1.0, 0.4}, 0.5, 2, 1.1), ParameterError);
}

TEST(QWhittaker, EmptySpecialization) {
  EXPECT_NEAR(moment_qwhittaker(2, 1, Specialization{}, {1.2}, 0.5).value, 1.0, 1e-12);
}

TEST(QWhittaker, SingleRowAgainstSeries) {
  Specialization rho;
  rho.alphas = {0.3};
  rho.betas = {0.5};
  rho.gamma = 0.2;
  for (int k = 1; k <= 2; ++k)
    EXPECT_NEAR(moment_qwhittaker(k, 1, rho, {1.1}, 0.5).value, qwhittaker_moment_series(k, rho, 1.1, 0.5), 1e-8);
}

TEST(QWhittaker, MatchesVertexMoments) {
  ModelParams p = mom_params();
  p.nu[0] = 0.0;
  const int N = 2, T = 2;
  const Specialization rho = rho_matching(N, T, p);
  const std::vector<double> a(p.a.begin(), p.a.begin() + N);
  for (int ell = 1; ell <= 2; ++ell) {
    const double qw = moment_qwhittaker(ell, N, rho, a, p.q).value;
    EXPECT_NEAR(qw, moment_product_quadrature(std::vector<int>(ell, N), T, p).value, 1e-9);
    EXPECT_NEAR(qw, moment_qwhittaker(ell, N, rho, a, p.q, MomentEngine::Operator).value, 1e-9);
  }
}

TEST(QLaplace, ZeroZeta) {
  ModelParams p = mom_params();
  p.nu[0] = 0.0;
  EXPECT_NEAR(std::abs(q_laplace(2, 2, p, 0.0, LaplaceMode::VertexExact).value - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(q_laplace(2, 2, p, 0.0, LaplaceMode::QWhittaker).value - 1.0), 0.0, 1e-15);
}

TEST(QLaplace, ModesAgree) {
  ModelParams p = mom_params();
  p.nu[0] = 0.0;
  const cplx zeta(0.3, 0.1);
  for (int N = 1; N <= 2; ++N) {
    const auto ex = q_laplace(N, 2, p, zeta, LaplaceMode::VertexExact);
    const auto qw = q_laplace(N, 2, p, zeta, LaplaceMode::QWhittaker);
    EXPECT_NEAR(std::abs(ex.value - qw.value), 0.0, 1e-10 + qw.error);
    const auto mc = q_laplace(N, 2, p, zeta, LaplaceMode::Vertex, 100000, 3);
    EXPECT_NEAR(std::abs(mc.value - ex.value), 0.0, 4.0 * mc.error);
  }
}

TEST(FormalIdentity, SingleVariable) {
  EXPECT_NEAR(formal_identity_check(1, {0.7}, {0.3}, 0.5), 0.0, 1e-15);
}

TEST(FormalIdentity, ThreeVariables) {
  Rng rng(8, 0);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> X(3), b(3);
    for (int i = 0; i < 3; ++i) {
      X[i] = -2.0 + 4.0 * rng.uniform();
      b[i] = -2.0 + 4.0 * rng.uniform();
    }
    EXPECT_LE(formal_identity_check(3, X, b, 0.3 + 0.4 * rng.uniform()), 1e-12);
  }
}
