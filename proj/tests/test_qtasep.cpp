#include <cmath>

#include <gtest/gtest.h>

#include "vertexlab/harness.hpp"
#include "vertexlab/qtasep.hpp"

using namespace vertexlab;

TEST(QGeomPmf, SmallGaps) {
  EXPECT_DOUBLE_EQ(q_geom_pmf(0, 0.4, 0.5, 0), 1.0);
  EXPECT_NEAR(q_geom_pmf(1, 0.4, 0.5, 0), 0.6, 1e-15);
  EXPECT_NEAR(q_geom_pmf(1, 0.4, 0.5, 1), 0.4, 1e-15);
}

TEST(QGeomPmf, WorkedExample) {
  EXPECT_NEAR(q_geom_pmf(2, 0.3, 0.5, 0), 0.595, 1e-15);
  EXPECT_NEAR(q_geom_pmf(2, 0.3, 0.5, 1), 0.315, 1e-15);
  EXPECT_NEAR(q_geom_pmf(2, 0.3, 0.5, 2), 0.09, 1e-15);
}

TEST(QGeomPmf, Normalized) {
  for (int m : {0, 1, 3, 7, 15}) {
    double s = 0.0;
    for (int j = 0; j <= m; ++j) s += q_geom_pmf(m, 0.65, 0.35, j);
    EXPECT_NEAR(s, 1.0, 1e-13);
  }
  double s = 0.0;
  for (int j = 0; j < 200; ++j) s += q_geom_pmf(kInfinity, 0.65, 0.35, j);
  EXPECT_NEAR(s, 1.0, 1e-13);
}

TEST(QGeomPmf, InfiniteGapClosedForm) {
  const double eta = 0.3, q = 0.5;
  for (int j = 0; j < 6; ++j)
    EXPECT_NEAR(q_geom_pmf(kInfinity, eta, q, j),
                std::pow(eta, j) * q_pochhammer_inf(eta, q) / q_pochhammer(q, q, j), 1e-16);
}

TEST(QGeomPmf, SmallQIsTruncatedGeometric) {
  const double eta = 0.4, q = 1e-9;
  const int m = 4;
  for (int j = 0; j < m; ++j) EXPECT_NEAR(q_geom_pmf(m, eta, q, j), std::pow(eta, j) * (1.0 - eta), 1e-8);
  EXPECT_NEAR(q_geom_pmf(m, eta, q, m), std::pow(eta, m), 1e-8);
}

TEST(QHahnPmf, ReducesToQGeometricAtZeroZeta) {
  for (int j = 0; j <= 3; ++j)
    EXPECT_NEAR(q_hahn_pmf(0.36, 0.0, 0.5, 3, j), q_geom_pmf(3, 0.36, 0.5, j), 1e-15);
  EXPECT_DOUBLE_EQ(q_hahn_pmf(0.36, 0.1, 0.5, 0, 0), 1.0);
}

TEST(QHahnPmf, Normalized) {
  double s = 0.0;
  for (int j = 0; j <= 3; ++j) s += q_hahn_pmf(0.3, 0.1, 0.5, 3, j);
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(GeometricMove, ZeroGapBlocks) {
  Rng rng(1, 0);
  const std::vector<double> a{1.0, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const ParticleConfig y = geometric_move({0, -1}, a, 0.5, 0.5, rng);
    EXPECT_EQ(y[1], -1);
  }
}

TEST(GeometricMove, SingleParticleLaw) {
  const double eta = 0.3, q = 0.5;
  Rng rng(2, 0);
  Counts c;
  const long n = 200000;
  for (long i = 0; i < n; ++i) ++c[geometric_move({0}, {1.0}, eta, q, rng)[0]];
  Pmf oracle;
  for (int j = 0; j < 40; ++j) oracle[j] = q_geom_pmf(kInfinity, eta, q, j);
  EXPECT_GT(chi2_gof(c, oracle, 1e-4).p_value, 1e-4);
}

TEST(BernoulliMove, JumpProbability) {
  EXPECT_DOUBLE_EQ(bernoulli_jump_prob(1.0, 1.0, 0.5, kInfinity, false), 0.5);
  EXPECT_DOUBLE_EQ(bernoulli_jump_prob(1.0, 1.0, 0.5, 0, false), 0.0);
  EXPECT_DOUBLE_EQ(bernoulli_jump_prob(1.0, 1.0, 0.5, 0, true), 0.5);
}

TEST(BernoulliMove, StepConfigOneMove) {
  Rng rng(4, 0);
  for (int i = 0; i < 1000; ++i) {
    const ParticleConfig y = bernoulli_move(step_config(3), {1.0, 1.0, 1.0}, 0.8, 0.5, rng);
    EXPECT_TRUE(y[0] == -1 || y[0] == 0);
    EXPECT_TRUE(strictly_decreasing(y));
  }
}

TEST(TransitionMatrix, RowSums) {
  const std::vector<double> a{1.0, 0.8};
  const Box box{-5, 5};
  const auto ber = transition_matrix(Move::ber(0.7), a, 2, box, 1e-12, 0.5);
  const auto geo = transition_matrix(Move::geom(0.4), a, 2, box, 1e-12, 0.5);
  for (int i = 0; i < ber.P.rows(); ++i) {
    EXPECT_NEAR(ber.P.row(i).sum() + ber.exit_mass[i], 1.0, 1e-14);
    EXPECT_GE(geo.P.row(i).sum() + geo.exit_mass[i], 1.0 - 1e-12);
  }
}

TEST(TransitionMatrix, MovesCommute) {
  const std::vector<double> a{1.0, 0.8};
  const Box box{-5, 5};
  const auto B = transition_matrix(Move::ber(0.7), a, 2, box, 1e-12, 0.5);
  const auto G = transition_matrix(Move::geom(0.4), a, 2, box, 1e-12, 0.5);
  EXPECT_LE((B.P * G.P - G.P * B.P).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MixedPath, PureTimePathIsBernoulli) {
  ModelParams p;
  p.q = 0.5;
  p.u = {-1.0, -0.5, -2.0};
  p.a = {1.0};
  p.nu = {0.0};
  const TimeLikePath path = TimeLikePath::from_moves("TTT");
  for (std::size_t t = 0; t + 1 < path.points.size(); ++t) {
    const Move mv = path_move(path, t, p);
    EXPECT_EQ(mv.kind, MoveKind::Bernoulli);
    EXPECT_DOUBLE_EQ(mv.param, -p.u[t]);
  }
}

TEST(MixedPath, StartsAtZero) {
  ModelParams p;
  p.q = 0.5;
  p.u = {-1.0};
  p.a = {1.0, 1.0};
  p.nu = {0.0, 0.3};
  Rng rng(9, 0);
  const Trajectory tr = run_mixed(TimeLikePath::from_moves("NT"), p, rng);
  EXPECT_EQ(tr.records.front().X_value, 0);
  EXPECT_EQ(tr.records.size(), 3u);
}

TEST(MixedPath, RejectsBadWord) {
  EXPECT_THROW(TimeLikePath::from_moves("NX"), ParameterError);
}
