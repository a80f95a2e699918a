#include <cmath>
#include <complex>

#include <gtest/gtest.h>

#include "vertexlab/core.hpp"

using namespace vertexlab;

TEST(QPochhammer, EmptyProductIsOne) {
  EXPECT_DOUBLE_EQ(q_pochhammer(0.7, 0.3, 0), 1.0);
  EXPECT_DOUBLE_EQ(q_pochhammer(-4.0, 0.9, 0), 1.0);
}

TEST(QPochhammer, SmallCases) {
  EXPECT_NEAR(q_pochhammer(0.5, 0.5, 1), 0.5, 1e-15);
  EXPECT_NEAR(q_pochhammer(0.3, 0.5, 2), 0.595, 1e-15);
}

TEST(QPochhammer, InfiniteProductMatchesLongFiniteProduct) {
  EXPECT_NEAR(q_pochhammer_inf(0.3, 0.5), q_pochhammer(0.3, 0.5, 200), 1e-15);
  const auto rep = q_pochhammer_inf_report(0.9, 0.95);
  EXPECT_GT(rep.terms, 0);
  EXPECT_LT(rep.tail_bound, 1e-14);
}

TEST(QPochhammer, ComplexArgument) {
  const std::complex<double> z(0.2, 0.3);
  const auto a = q_pochhammer(z, 0.4, 3);
  const auto b = (1.0 - z) * (1.0 - 0.4 * z) * (1.0 - 0.16 * z);
  EXPECT_NEAR(std::abs(a - b), 0.0, 1e-15);
}

TEST(QPochhammer, RejectsBadQ) {
  EXPECT_THROW(q_pochhammer(0.1, 1.0, 2), ParameterError);
  EXPECT_THROW(q_pochhammer_inf(0.1, 0.0), ParameterError);
}

TEST(PiW, EmptySpecializationIsOne) {
  EXPECT_DOUBLE_EQ(pi_w(0.7, Specialization{}, 0.5), 1.0);
}

TEST(PiW, SingleBeta) {
  Specialization rho;
  rho.betas = {0.4};
  EXPECT_NEAR(pi_w(1.5, rho, 0.5), 1.6, 1e-15);
}

TEST(PiW, SingleAlpha) {
  Specialization rho;
  rho.alphas = {0.2};
  EXPECT_NEAR(pi_w(0.5, rho, 0.5), 1.0 / q_pochhammer_inf(0.1, 0.5), 1e-15);
}

TEST(PiWCoefficients, Beta) {
  Specialization rho;
  rho.betas = {0.7};
  const auto c = pi_w_coefficients(rho, 0.5, 4);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  EXPECT_DOUBLE_EQ(c[1], 0.7);
  EXPECT_DOUBLE_EQ(c[2], 0.0);
  EXPECT_DOUBLE_EQ(c[3], 0.0);
}

TEST(PiWCoefficients, Gamma) {
  Specialization rho;
  rho.gamma = 1.3;
  const auto c = pi_w_coefficients(rho, 0.5, 6);
  double f = 1.0;
  for (int n = 0; n <= 6; ++n) {
    if (n > 0) f *= 1.3 / n;
    EXPECT_NEAR(c[n], f, 1e-15);
  }
}

TEST(PiWCoefficients, AlphaByQBinomial) {
  Specialization rho;
  rho.alphas = {0.2};
  const double q = 0.5;
  const auto c = pi_w_coefficients(rho, q, 10);
  for (int n = 0; n <= 10; ++n) EXPECT_NEAR(c[n], std::pow(0.2, n) / q_pochhammer(q, q, n), 1e-15);
}

TEST(PiWCoefficients, SeriesSumsToProduct) {
  Specialization rho;
  rho.alphas = {0.3, 0.1};
  rho.betas = {0.5};
  rho.gamma = 0.2;
  const double u = 0.6, q = 0.4;
  const auto c = pi_w_coefficients(rho, q, 60);
  double s = 0.0;
  for (int n = 60; n >= 0; --n) s = s * u + c[n];
  EXPECT_NEAR(s, pi_w(u, rho, q), 1e-13);
}

TEST(ValidateParams, AdmissibleExample) {
  ModelParams p;
  p.q = 0.5;
  p.u = {-1.0};
  p.a = {1.0};
  p.nu = {0.5};
  const ValidityReport r = validate_params(p, 1, 1);
  EXPECT_TRUE(r.basic_ok);
  EXPECT_TRUE(r.whittaker_ok);
  EXPECT_TRUE(r.nested_ok);
}

TEST(ValidateParams, NuOutsideUnitInterval) {
  ModelParams p;
  p.q = 0.5;
  p.u = {-1.0};
  p.a = {1.0};
  p.nu = {2.0};
  EXPECT_FALSE(validate_params(p, 1, 1).basic_ok);
}

TEST(ValidateParams, NestedFails) {
  ModelParams p;
  p.q = 0.5;
  p.u = {-1.0};
  p.a = {1.0, 0.4};
  p.nu = {0.1, 0.1};
  const ValidityReport r = validate_params(p, 2, 1);
  EXPECT_TRUE(r.basic_ok);
  EXPECT_FALSE(r.nested_ok);
}

TEST(ValidateParams, PositiveSpectralParameterRejected) {
  ModelParams p;
  p.q = 0.5;
  p.u = {0.5};
  p.a = {1.0};
  p.nu = {0.2};
  EXPECT_FALSE(validate_params(p, 1, 1).basic_ok);
}

TEST(Partition, RejectsIncreasingParts) {
  EXPECT_THROW(Partition(std::vector<int>{1, 2}), ParameterError);
  EXPECT_EQ(Partition(std::vector<int>{3, 1, 0}).length(), 2);
}

TEST(Json, ParamsRoundTrip) {
  ModelParams p;
  p.q = 0.3;
  p.u = {-1.0, -2.0};
  p.a = {1.0, 1.5};
  p.nu = {0.0, 0.25};
  const ModelParams r = json(p).get<ModelParams>();
  EXPECT_EQ(r.q, p.q);
  EXPECT_EQ(r.u, p.u);
  EXPECT_EQ(r.a, p.a);
  EXPECT_EQ(r.nu, p.nu);
  EXPECT_EQ(params_digest(p), params_digest(r));
}
