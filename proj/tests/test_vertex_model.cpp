#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "vertexlab/harness.hpp"
#include "vertexlab/vertex_model.hpp"

using namespace vertexlab;

namespace {

ModelParams sample_params() {
  ModelParams p;
  p.q = 0.45;
  p.u = {-0.9, -1.4, -0.6};
  p.a = {1.1, 0.8, 1.3, 0.95};
  p.nu = {0.3, 0.55, 0.2, 0.4};
  return p;
}

double weight_of(const std::vector<VertexOutcome>& w, int i2, int j2) {
  for (const auto& o : w)
    if (o.i2 == i2 && o.j2 == j2) return o.weight;
  return 0.0;
}

}  // namespace

TEST(VertexWeights, WorkedExample) {
  const auto w = vertex_weight_row(-1.0, 1.0, 0.5, 0.5, 1, 1);
  EXPECT_NEAR(weight_of(w, 1, 1), 0.625, 1e-15);
  EXPECT_NEAR(weight_of(w, 2, 0), 0.375, 1e-15);
}

TEST(VertexWeights, EmptyVertex) {
  const auto w = vertex_weight_row(-0.7, 1.3, 0.2, 0.4, 0, 0);
  ASSERT_EQ(w.size(), 1u);
  EXPECT_DOUBLE_EQ(w[0].weight, 1.0);
}

TEST(VertexWeights, SixVertexDegeneration) {
  const double q = 0.5;
  const auto w = vertex_weight_row(-1.0, 1.0, 1.0 / q, q, 1, 1);
  EXPECT_NEAR(weight_of(w, 2, 0), 0.0, 1e-15);
}

TEST(VertexWeights, RowsSumToOne) {
  for (int g : {0, 1, 2, 5, 40, kInfinity})
    for (int j : {0, 1}) {
      double s = 0.0;
      for (const auto& o : vertex_weight_row(-0.8, 1.2, 0.35, 0.6, g, j)) {
        EXPECT_GE(o.weight, 0.0);
        EXPECT_LE(o.weight, 1.0);
        s += o.weight;
      }
      EXPECT_NEAR(s, 1.0, 1e-15);
    }
}

TEST(Sampler, StepBoundaryFirstColumnIsDeterministic) {
  const ModelParams p = sample_params();
  Rng rng(3, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const HeightField hf = sample_quadrant(p, Boundary::step(), 4, 3, rng);
    for (int T = 0; T <= 3; ++T) EXPECT_EQ(hf(1, T), T);
    for (int N = 1; N <= 4; ++N) EXPECT_EQ(hf(N + 1, 0), 0);
  }
}

TEST(Sampler, StepBernoulliBoundaryValues) {
  ModelParams p = sample_params();
  p.nu[0] = 0.0;
  const long n = 200000;
  Rng rng(11, 0);
  QuadrantSampler s(p, Boundary::step_bernoulli(), 1);
  double sum = 0.0;
  for (long i = 0; i < n; ++i) {
    s.reset();
    s.advance_row(rng);
    sum += s.height(2);
  }
  const double b = -p.a[0] * p.u[0] / (1.0 - p.a[0] * p.u[0]);
  const double se = std::sqrt(b * (1.0 - b) / n);
  EXPECT_NEAR(sum / n, b, 4.0 * se);
}

TEST(Sampler, HeightsAreMonotone) {
  const ModelParams p = sample_params();
  Rng rng(5, 0);
  for (int rep = 0; rep < 100; ++rep) {
    const HeightField hf = sample_quadrant(p, Boundary::step(), 4, 3, rng);
    for (int T = 0; T <= 3; ++T)
      for (int N = 1; N <= 4; ++N) {
        EXPECT_GE(hf(N, T), hf(N + 1, T));
        if (T > 0) {
          EXPECT_LE(hf(N, T) - hf(N, T - 1), 1);
        }
      }
  }
}

TEST(FStoch, SingleRowFormula) {
  const ModelParams p = sample_params();
  const double u = p.u[0];
  for (int c = 1; c <= 4; ++c) {
    double expect = (1.0 - p.nu[c - 1]) / (1.0 - p.a[c - 1] * u);
    for (int j = 0; j < c - 1; ++j) expect *= (p.nu[j] - p.a[j] * u) / (1.0 - p.a[j] * u);
    EXPECT_NEAR(f_stoch(Partition(std::vector<int>{c}), p, 1), expect, 1e-14);
  }
}

TEST(FStoch, SumsToOneWithAbsorbingColumn) {
  const ModelParams p = sample_params();
  for (int N = 1; N <= 3; ++N)
    for (int T = 1; T <= 3; ++T) EXPECT_NEAR(sum_to_one_residual(N, T, p), 0.0, 1e-12);
}

TEST(FStoch, TwoRowsMatchSampler) {
  const ModelParams p = sample_params();
  const int N = 2, T = 2;
  const auto pmf = height_law_exact(N, T, p);
  Counts c;
  Rng rng(21, 0);
  QuadrantSampler s(p, Boundary::step(), N);
  for (long i = 0; i < 200000; ++i) {
    s.reset();
    for (int t = 0; t < T; ++t) s.advance_row(rng);
    ++c[s.height(N + 1)];
  }
  Pmf oracle;
  for (int h = 0; h <= T; ++h) oracle[h] = pmf[h];
  EXPECT_GT(chi2_gof(c, oracle, 1e-4).p_value, 1e-4);
}

TEST(FTilde, SingleRowSingleColumn) {
  const ModelParams p = sample_params();
  EXPECT_NEAR(f_tilde(Partition(std::vector<int>{1}), p, 1, 1), 1.0 - p.nu[0], 1e-15);
}

TEST(FTilde, RatioIsPhi) {
  const ModelParams p = sample_params();
  const int T = 2, M = 3;
  double phi = 1.0;
  for (int t = 0; t < T; ++t)
    for (int j = 0; j < M; ++j) phi *= 1.0 - p.a[j] * p.u[t];
  for (const auto& k : partitions_in_box(T, M))
    EXPECT_NEAR(f_tilde(k, p, T, M), phi * f_stoch(k, p, T), 1e-13);
}

TEST(FStoch, ExactLawIsAProbability) {
  const ModelParams p = sample_params();
  for (int N = 1; N <= 3; ++N)
    for (int T = 0; T <= 3; ++T) {
      double s = 0.0;
      for (double w : height_law_exact(N, T, p)) {
        EXPECT_GE(w, -1e-15);
        EXPECT_LE(w, 1.0 + 1e-15);
        s += w;
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}
