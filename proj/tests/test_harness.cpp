#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "vertexlab/checks.hpp"
#include "vertexlab/harness.hpp"

using namespace vertexlab;

namespace {

const auto kUniform = [](Rng& rng) { return rng.uniform(); };

}  // namespace

TEST(MonteCarlo, ConstantObservableHasZeroError) {
  const Estimate e = mc_estimate(kUniform, [](double) { return 3.0; }, 1000, seed_list(1, 4));
  EXPECT_DOUBLE_EQ(e.mean, 3.0);
  EXPECT_DOUBLE_EQ(e.se, 0.0);
  EXPECT_EQ(e.n, 1000);
}

TEST(MonteCarlo, BernoulliMean) {
  const Estimate e = mc_estimate(kUniform, [](double u) { return u < 0.3 ? 1.0 : 0.0; }, 100000, seed_list(2, 3));
  EXPECT_NEAR(e.se, std::sqrt(0.21 / 100000.0), 2e-4);
  EXPECT_NEAR(e.mean, 0.3, 4.0 * e.se);
}

TEST(MonteCarlo, Deterministic) {
  const auto obs = [](double u) { return u * u; };
  const Estimate a = mc_estimate(kUniform, obs, 5000, seed_list(7, 3));
  const Estimate b = mc_estimate(kUniform, obs, 5000, seed_list(7, 3));
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.se, b.se);
}

TEST(MonteCarlo, MergeMatchesSinglePass) {
  RunningStats all, left, right;
  for (int i = 0; i < 50; ++i) {
    const double x = std::sin(i * 0.7);
    all.push(x);
    (i < 20 ? left : right).push(x);
  }
  left.merge(right);
  EXPECT_NEAR(left.mean, all.mean, 1e-15);
  EXPECT_NEAR(left.m2, all.m2, 1e-13);
}

TEST(MonteCarlo, ShardsCoverBudget) {
  long total = 0;
  for (std::size_t s = 0; s < 7; ++s) total += shard_budget(100, 7, s);
  EXPECT_EQ(total, 100);
}

TEST(Compare, TotalVariationExtremes) {
  const Pmf a{{0, 0.5}, {1, 0.5}};
  EXPECT_DOUBLE_EQ(compare_tv(a, a, 1e-12).value, 0.0);
  EXPECT_TRUE(compare_tv(a, a, 1e-12).pass);
  const Pmf b{{2, 1.0}};
  EXPECT_DOUBLE_EQ(compare_tv(a, b, 1e-12).value, 1.0);
  EXPECT_FALSE(compare_tv(a, b, 1e-12).pass);
}

TEST(Compare, EmptySupportThrows) {
  EXPECT_THROW(compare_tv(Pmf{}, Pmf{}, 1e-12), ParameterError);
}

TEST(Compare, ChiSquareCalibration) {
  // Under the null the p-value is uniform: about 5% of runs fall below 0.05.
  const Pmf pmf{{0, 0.2}, {1, 0.3}, {2, 0.5}};
  int rejects = 0;
  const int reps = 400;
  for (int r = 0; r < reps; ++r) {
    Rng rng(11, static_cast<std::uint64_t>(r));
    Counts c;
    for (int i = 0; i < 500; ++i) {
      const double u = rng.uniform();
      ++c[u < 0.2 ? 0 : (u < 0.5 ? 1 : 2)];
    }
    if (chi2_gof(c, pmf, 0.05).p_value < 0.05) ++rejects;
  }
  EXPECT_GT(rejects, 6);
  EXPECT_LT(rejects, 36);
}

TEST(Compare, ChiSquareDetectsShift) {
  const Pmf pmf{{0, 0.5}, {1, 0.5}};
  const Counts c{{0, 700}, {1, 300}};
  EXPECT_FALSE(chi2_gof(c, pmf, 1e-3).pass);
}

TEST(Compare, KolmogorovSmirnov) {
  std::vector<double> s;
  for (int i = 0; i < 1000; ++i) s.push_back((i + 0.5) / 1000.0);
  EXPECT_LE(ks_distance(s, [](double x) { return std::clamp(x, 0.0, 1.0); }), 1e-3);
  const Pmf a{{0, 0.5}, {1, 0.5}}, b{{1, 0.5}, {2, 0.5}};
  EXPECT_DOUBLE_EQ(ks_between(a, b), 0.5);
  EXPECT_DOUBLE_EQ(ks_between(a, a), 0.0);
}

TEST(Compare, NormalizeCounts) {
  const Pmf p = normalize_counts(Counts{{3, 1}, {5, 3}});
  EXPECT_DOUBLE_EQ(p.at(3), 0.25);
  EXPECT_DOUBLE_EQ(p.at(5), 0.75);
}

TEST(Registry, SixteenChecksInOrder) {
  const auto& reg = check_registry();
  ASSERT_EQ(reg.size(), 16u);
  std::set<std::string> ids;
  for (std::size_t i = 0; i < reg.size(); ++i) {
    EXPECT_EQ(reg[i].index, static_cast<int>(i) + 1);
    ids.insert(reg[i].id);
  }
  EXPECT_EQ(ids.size(), 16u);
  EXPECT_EQ(find_check("1").id, "stochasticity");
  EXPECT_EQ(find_check("tracy_widom").index, 16);
  EXPECT_THROW(find_check("nope"), ParameterError);
}

TEST(Suite, Parsing) {
  EXPECT_EQ(parse_suite("default").ids.size(), 15u);
  EXPECT_EQ(parse_suite("full").ids.size(), 16u);
  EXPECT_TRUE(parse_suite("none").ids.empty());
  const SuiteSpec s = parse_suite("1,sum_to_one");
  ASSERT_EQ(s.ids.size(), 2u);
  EXPECT_EQ(s.ids[0], "stochasticity");
  EXPECT_EQ(s.ids[1], "sum_to_one");
  EXPECT_THROW(parse_suite("missing.json"), ParameterError);
}

TEST(Suite, EmptyRunsNothing) {
  EXPECT_TRUE(run_suite({}, CheckContext{}, "").empty());
}

TEST(Suite, DispatchesAndFormats) {
  int seen = 0;
  const auto res = run_suite({"stochasticity", "sum_to_one"}, CheckContext{}, "",
                             [&](const CheckResult&) { ++seen; });
  ASSERT_EQ(res.size(), 2u);
  EXPECT_EQ(seen, 2);
  for (const auto& r : res) {
    EXPECT_TRUE(r.pass) << r.id;
    EXPECT_EQ(result_line(r).rfind("PASS", 0), 0u);
  }
}
