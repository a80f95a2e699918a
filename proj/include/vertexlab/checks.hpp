#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vertexlab/core.hpp"
#include "vertexlab/coupling.hpp"
#include "vertexlab/diffops.hpp"
#include "vertexlab/harness.hpp"
#include "vertexlab/moments.hpp"
#include "vertexlab/qtasep.hpp"
#include "vertexlab/rng.hpp"
#include "vertexlab/schur.hpp"
#include "vertexlab/vertex_model.hpp"

namespace vertexlab {

inline constexpr std::uint64_t kDefaultSeed = 1;

struct DrawOptions {
  double q_lo = 0.2, q_hi = 0.8;
  double u_lo = -2.5, u_hi = -0.3;
  double a_lo = 0.5, a_hi = 1.5;
  double nu_lo = 0.0, nu_hi = 0.9;
  // Leading columns with ν = 0 (step-Bernoulli of order r).
  int zero_nu = 0;
  // Minimum spacing between u_i and u_j, q u_j; minimum log-distance between a_i q^s and a_j q^t.
  double sep = 0.05;
  int shifts = 3;
  // If positive, cap ν_j at eta_max a_j / max_i a_i so every geometric move with
  // α = ν_j / a_j has a_i α <= eta_max < 1.
  double eta_max = 0.0;
};

inline double draw_in(Rng& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

// Random admissible parameters, rejection-sampled away from u and a collisions.
inline ModelParams draw_params(Rng& rng, int cols, int rows, const DrawOptions& o = {}) {
  ModelParams p;
  p.q = draw_in(rng, o.q_lo, o.q_hi);
  for (int attempt = 0;; ++attempt) {
    require(attempt < 10000, "draw_params: no admissible draw");
    p.u.clear();
    for (int t = 0; t < rows; ++t) p.u.push_back(draw_in(rng, o.u_lo, o.u_hi));
    bool ok = true;
    for (int i = 0; i < rows && ok; ++i)
      for (int j = 0; j < rows && ok; ++j)
        if (i != j) ok = std::abs(p.u[i] - p.u[j]) > o.sep && std::abs(p.u[i] - p.q * p.u[j]) > o.sep;
    if (ok) break;
  }
  for (int attempt = 0;; ++attempt) {
    require(attempt < 10000, "draw_params: no admissible draw");
    p.a.clear();
    for (int n = 0; n < cols; ++n) p.a.push_back(draw_in(rng, o.a_lo, o.a_hi));
    bool ok = true;
    for (int i = 0; i < cols && ok; ++i)
      for (int j = i + 1; j < cols && ok; ++j)
        for (int s = 0; s <= o.shifts && ok; ++s)
          for (int t = 0; t <= o.shifts && ok; ++t)
            ok = std::abs(std::log(p.a[i] / p.a[j]) + (s - t) * std::log(p.q)) > o.sep;
    if (ok) break;
  }
  p.nu.clear();
  const double amax = p.a.empty() ? 1.0 : *std::max_element(p.a.begin(), p.a.end());
  for (int n = 0; n < cols; ++n) {
    const double hi = o.eta_max > 0.0 ? std::min(o.nu_hi, o.eta_max * p.a[n] / amax) : o.nu_hi;
    p.nu.push_back(n < o.zero_nu ? 0.0 : draw_in(rng, std::min(o.nu_lo, hi), hi));
  }
  return p;
}

struct CheckResult {
  std::string id;
  int index = 0;
  std::string name;
  bool pass = false;
  std::string statistic;
  double value = 0.0;
  double threshold = 0.0;
  json details = json::object();
  double runtime_s = 0.0;
  std::string error;

  // Deterministic payload; runtime lives in the summary only.
  json to_json() const {
    json j{{"id", id},       {"index", index},         {"name", name},         {"pass", pass},
           {"statistic", statistic}, {"value", value}, {"threshold", threshold}, {"details", details}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

struct CheckContext {
  std::uint64_t seed = kDefaultSeed;
  // Multiplies every Monte Carlo budget; 1 reproduces the acceptance settings.
  double budget_scale = 1.0;

  long budget(long base) const { return std::max(1000L, static_cast<long>(std::llround(base * budget_scale))); }
  Rng rng(std::uint64_t stream) const { return Rng(seed, stream); }
};

namespace checks {

// Encodes a partition with parts in [1, W] as base-(W+2) digits; parts above W map to W+1.
inline long encode_parts(std::vector<int> parts, int W) {
  std::sort(parts.rbegin(), parts.rend());
  long k = 0;
  for (int x : parts) k = k * (W + 2) + std::min(x, W + 1);
  return k;
}

inline CheckResult stochasticity(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |sum of outgoing weights - 1|";
  r.threshold = 1e-12;
  Rng rng = ctx.rng(1);
  double worst = 0.0;
  const int draws = 1000, gmax = 40;
  for (int d = 0; d < draws; ++d) {
    const double q = draw_in(rng, 0.01, 0.99);
    const double u = -std::exp(draw_in(rng, -4.0, 4.0));
    const double a = std::exp(draw_in(rng, -4.0, 4.0));
    const double nu = draw_in(rng, 0.0, 0.999);
    for (int j1 = 0; j1 <= 1; ++j1) {
      for (int g = 0; g <= gmax + 1; ++g) {
        const int i1 = g > gmax ? kInfinity : g;
        double s = 0.0;
        for (const auto& o : vertex_weight_row(u, a, nu, q, i1, j1)) s += o.weight;
        worst = std::max(worst, std::abs(s - 1.0));
      }
    }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"draws", draws}, {"g_max", gmax}, {"includes_infinite_g", true}};
  return r;
}

inline CheckResult sum_to_one(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |sum f_stoch - 1|";
  r.threshold = 1e-10;
  Rng rng = ctx.rng(2);
  double worst = 0.0;
  int cases = 0;
  for (int N = 1; N <= 4; ++N)
    for (int T = 1; T <= 4; ++T)
      for (int d = 0; d < 10; ++d) {
        const ModelParams p = draw_params(rng, N + 1, T);
        worst = std::max(worst, sum_to_one_residual(N, T, p));
        ++cases;
      }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"cases", cases}, {"N_max", 4}, {"T_max", 4}, {"draws_per_shape", 10}};
  return r;
}

inline CheckResult sampler_vs_formula(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "min chi-square p-value";
  r.threshold = 1e-4;
  Rng prng = ctx.rng(3);
  const long n = ctx.budget(1000000);
  const int W = 6;
  double pmin = 1.0;
  json per = json::array();
  for (int T = 1; T <= 3; ++T) {
    DrawOptions o;
    o.nu_hi = 0.6;
    o.u_lo = -1.5;
    const ModelParams p = draw_params(prng, W, T, o);
    Pmf pmf;
    for (const auto& k : partitions_in_box(T, W)) pmf[encode_parts(k.parts, W)] += f_stoch(k, p, T);
    Counts counts;
    Rng rng(ctx.seed, 300 + T);
    QuadrantSampler s(p, Boundary::step(), W);
    for (long i = 0; i < n; ++i) {
      s.reset();
      for (int t = 0; t < T; ++t) s.advance_row(rng);
      std::vector<int> parts;
      for (int c = 0; c < W; ++c)
        for (int m = 0; m < s.counts()[c]; ++m) parts.push_back(c + 1);
      for (int m = 0; m < s.overflow(); ++m) parts.push_back(W + 1);
      ++counts[encode_parts(parts, W)];
    }
    const ComparisonReport c = chi2_gof(counts, pmf, r.threshold);
    pmin = std::min(pmin, c.p_value);
    per.push_back(json{{"T", T}, {"chi2", c.value}, {"dof", c.dof}, {"p_value", c.p_value}, {"params", p}});
  }
  r.value = pmin;
  r.pass = pmin > r.threshold;
  r.details = json{{"samples_per_T", n}, {"window", W}, {"cases", per}};
  return r;
}

inline CheckResult key_lemma(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max relative residual";
  r.threshold = 1e-9;
  Rng rng = ctx.rng(4);
  double single = 0.0, multi = 0.0;
  int cases = 0;
  for (int N = 1; N <= 3; ++N)
    for (int T = 1; T <= 3; ++T)
      for (int d = 0; d < 20; ++d) {
        const ModelParams p = draw_params(rng, N, T);
        single = std::max(single, key_lemma_residual(p, N, T, N));
        for (int N1 = 1; N1 <= N; ++N1)
          for (int N2 = 1; N2 <= N1; ++N2) multi = std::max(multi, multilevel_residual(p, N, {N1, N2}, T, N));
        ++cases;
      }
  r.value = std::max(single, multi);
  r.pass = r.value <= r.threshold;
  r.details = json{{"draws", cases}, {"single_level", single}, {"multilevel_l2", multi}};
  return r;
}

inline CheckResult route_triangle(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max pairwise route difference";
  r.threshold = 1e-9;
  Rng rng = ctx.rng(5);
  double worst = 0.0, exact_worst = 0.0;
  int cases = 0;
  for (int T = 0; T <= 3; ++T) {
    DrawOptions o;
    o.q_lo = 0.3;
    o.q_hi = 0.6;
    o.a_lo = 0.8;
    o.a_hi = 1.2;
    o.nu_hi = 0.5;
    const ModelParams p = draw_params(rng, 3, std::max(T, 1), o);
    std::vector<std::vector<int>> lists;
    for (int N1 = 1; N1 <= 3; ++N1) {
      lists.push_back({N1});
      for (int N2 = 1; N2 <= N1; ++N2) lists.push_back({N1, N2});
    }
    for (const auto& L : lists) {
      const double op = operator_expectation(L, T, L.front(), p);
      const double quad = moment_product_quadrature(L, T, p).value;
      const double res = moment_product_residues(L, T, p);
      worst = std::max({worst, std::abs(op - quad), std::abs(op - res), std::abs(quad - res)});
      // Fourth route from the exact joint law, reported only.
      const int ell = static_cast<int>(L.size());
      double ex = 0.0;
      for (const auto& [h, w] : joint_height_law(L, T, p)) {
        double t = w;
        for (int j = 0; j < ell; ++j)
          t *= std::pow(p.q, h[j]) - std::pow(p.q, T + ell - (j + 1)) * product_shift(p.nu, L[j]);
        ex += t;
      }
      exact_worst = std::max(exact_worst, std::abs(ex - res));
      ++cases;
    }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"cases", cases}, {"exact_law_vs_residue", exact_worst}};
  return r;
}

inline CheckResult moments_mc(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |residue - MC| / SE";
  r.threshold = 4.0;
  Rng prng = ctx.rng(6);
  const long n = ctx.budget(1000000);
  double worst = 0.0;
  json per = json::array();
  for (int T = 1; T <= 4; ++T) {
    DrawOptions o;
    o.u_lo = -1.5;
    const ModelParams p = draw_params(prng, 4, T, o);
    std::vector<std::vector<int>> lists;
    for (int N1 = 1; N1 <= 4; ++N1) {
      lists.push_back({N1});
      for (int N2 = 1; N2 <= N1; ++N2) lists.push_back({N1, N2});
    }
    auto sample = [&](Rng& rng) {
      QuadrantSampler s(p, Boundary::step(), 4);
      for (int t = 0; t < T; ++t) s.advance_row(rng);
      std::vector<int> h(5);
      for (int N = 1; N <= 4; ++N) h[N] = s.height(N + 1);
      return h;
    };
    auto obs = [&](const std::vector<int>& h) {
      std::vector<double> v;
      for (const auto& L : lists) {
        double t = 1.0;
        for (int N : L) t *= std::pow(p.q, h[N]);
        v.push_back(t);
      }
      return v;
    };
    const auto est = mc_estimate_vector(sample, obs, n, seed_list(ctx.seed + 600 + T, 4));
    for (std::size_t k = 0; k < lists.size(); ++k) {
      const double exact = moment_height_residues(lists[k], T, p);
      const double z = est[k].se > 0.0 ? std::abs(est[k].mean - exact) / est[k].se : 0.0;
      worst = std::max(worst, z);
      per.push_back(json{{"T", T}, {"N_list", lists[k]}, {"residue", exact}, {"mc", est[k].mean},
                         {"se", est[k].se}, {"z", z}});
    }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"samples_per_T", n}, {"cases", per}};
  return r;
}

inline CheckResult formal_identity(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |LHS - RHS|";
  r.threshold = 1e-12;
  Rng rng = ctx.rng(7);
  double worst = 0.0;
  for (int ell = 1; ell <= 5; ++ell)
    for (int d = 0; d < 100; ++d) {
      std::vector<double> X, b;
      for (int i = 0; i < ell; ++i) {
        X.push_back(draw_in(rng, -1.5, 1.5));
        b.push_back(draw_in(rng, -1.5, 1.5));
      }
      worst = std::max(worst, formal_identity_check(ell, X, b, draw_in(rng, 0.05, 0.95)));
    }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"ell_max", 5}, {"draws_per_ell", 100}};
  return r;
}

inline CheckResult qwhittaker_n1(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |quadrature - series|";
  r.threshold = 1e-8;
  Rng rng = ctx.rng(8);
  double worst = 0.0;
  json per = json::array();
  const std::vector<std::string> kinds{"alpha", "beta", "gamma", "mixed", "mixed"};
  for (const auto& kind : kinds) {
    const double q = draw_in(rng, 0.3, 0.7);
    const double a = draw_in(rng, 0.6, 1.4);
    Specialization rho;
    if (kind == "alpha" || kind == "mixed")
      for (int i = 0; i < 2; ++i) rho.alphas.push_back(draw_in(rng, 0.05, 0.6) / a);
    if (kind == "beta" || kind == "mixed")
      for (int i = 0; i < 2; ++i) rho.betas.push_back(draw_in(rng, 0.1, 1.0));
    if (kind == "gamma" || kind == "mixed") rho.gamma = draw_in(rng, 0.1, 1.0);
    for (int k = 1; k <= 3; ++k) {
      const double quad = moment_qwhittaker(k, 1, rho, {a}, q).value;
      const double ser = qwhittaker_moment_series(k, rho, a, q);
      worst = std::max(worst, std::abs(quad - ser));
      per.push_back(json{{"kind", kind}, {"k", k}, {"quadrature", quad}, {"series", ser}});
    }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"cases", per}};
  return r;
}

inline CheckResult commutation(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max commutator entry";
  r.threshold = 1e-10;
  Rng rng = ctx.rng(9);
  double worst = 0.0;
  json per = json::array();
  for (int L = 1; L <= 3; ++L) {
    const double q = draw_in(rng, 0.3, 0.7);
    std::vector<double> a;
    for (int i = 0; i < L; ++i) a.push_back(draw_in(rng, 0.5, 1.5));
    const double al1 = draw_in(rng, 0.05, 0.6), al2 = draw_in(rng, 0.05, 0.6);
    const double b1 = draw_in(rng, 0.2, 2.0), b2 = draw_in(rng, 0.2, 2.0);
    const Box box{-L, 8 - L};
    const std::vector<Move> moves{Move::geom(al1), Move::geom(al2), Move::ber(b1), Move::ber(b2)};
    std::vector<Eigen::MatrixXd> P;
    for (const auto& mv : moves) P.push_back(transition_matrix(mv, a, L, box, kCouplingTail, q).P);
    for (std::size_t i = 0; i < P.size(); ++i)
      for (std::size_t j = i + 1; j < P.size(); ++j) {
        const double c = (P[i] * P[j] - P[j] * P[i]).cwiseAbs().maxCoeff();
        worst = std::max(worst, c);
        per.push_back(json{{"L", L}, {"pair", moves[i].label() + "," + moves[j].label()}, {"max_entry", c}});
      }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"cases", per}};
  return r;
}

inline ParticleConfig draw_config(Rng& rng, int L) {
  ParticleConfig x(L);
  long pos = static_cast<long>(std::floor(draw_in(rng, -2.0, 3.0)));
  for (int i = 0; i < L; ++i) {
    x[i] = pos;
    pos -= 1 + static_cast<long>(std::floor(draw_in(rng, 0.0, 3.0)));
  }
  return x;
}

inline CheckResult local_coupling(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max TV distance";
  r.threshold = 1e-8;
  Rng rng = ctx.rng(10);
  double worst = 0.0, deficit = 0.0;
  int cases = 0;
  for (int d = 0; d < 50; ++d) {
    const int L = 1 + d % 3;
    const ParticleConfig x = draw_config(rng, L);
    LocalParams lp;
    lp.q = draw_in(rng, 0.2, 0.8);
    for (int i = 0; i < L; ++i) lp.a.push_back(draw_in(rng, 0.5, 1.5));
    lp.alpha = draw_in(rng, 0.05, 0.6);
    lp.beta = draw_in(rng, 0.1, 2.0);
    for (int m = 1; m <= L; ++m) {
      const CouplingReport A = joint_law_check_prop_A(x, m, lp, r.threshold);
      const CouplingReport B = joint_law_check_prop_B(x, m, lp, r.threshold);
      worst = std::max({worst, A.tv_distance, B.tv_distance});
      deficit = std::max({deficit, A.truncation_deficit, B.truncation_deficit});
      cases += 2;
    }
  }
  r.value = worst;
  r.pass = worst <= r.threshold && deficit <= r.threshold;
  r.details = json{{"checks", cases}, {"max_truncation_deficit", deficit}};
  return r;
}

inline CheckResult coupling_theorem(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max TV distance";
  r.threshold = 1e-8;
  Rng rng = ctx.rng(11);
  double worst = 0.0, deficit = 0.0;
  json per = json::array();
  auto run = [&](const TimeLikePath& path, int rr) {
    DrawOptions o;
    o.zero_nu = rr;
    o.nu_hi = 0.7;
    o.eta_max = 0.5;
    const ModelParams p = draw_params(rng, path.max_N() + rr - 1, std::max(1, path.max_T()), o);
    const CouplingReport c = theorem_coupling_check(path, p, rr, r.threshold);
    worst = std::max(worst, c.tv_distance);
    deficit = std::max(deficit, c.truncation_deficit);
    per.push_back(json{{"path", path.word()}, {"r", rr}, {"tv", c.tv_distance}, {"deficit", c.truncation_deficit}});
  };
  for (int level = 1; level <= 4; ++level)
    for (const auto& path : TimeLikePath::all_to_level(level)) run(path, 1);
  auto five = TimeLikePath::all_to_level(5);
  std::vector<std::size_t> pick;
  for (std::size_t i = 0; i < five.size(); ++i) pick.push_back(i);
  std::shuffle(pick.begin(), pick.end(), rng);
  for (int k = 0; k < 10; ++k) run(five[pick[k]], k == 0 ? 2 : 1);
  r.value = worst;
  r.pass = worst <= r.threshold && deficit <= r.threshold;
  r.details = json{{"paths", per.size()}, {"max_truncation_deficit", deficit}, {"cases", per}};
  return r;
}

inline CheckResult distributional_equality(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "min two-sample chi-square p-value";
  r.threshold = 1e-4;
  Rng prng = ctx.rng(12);
  const long n = ctx.budget(1000000);
  DrawOptions o;
  o.zero_nu = 1;
  o.u_lo = -1.5;
  o.eta_max = 0.95;
  const ModelParams p = draw_params(prng, 4, 4, o);
  double pmin = 1.0;
  json per = json::array();
  // One vertex sample serves every (N, T) in the window.
  std::vector<Counts> vtx(16);
  {
    Rng rng(ctx.seed, 1200);
    QuadrantSampler s(p, Boundary::step_bernoulli(), 4);
    for (long i = 0; i < n; ++i) {
      s.reset();
      for (int T = 1; T <= 4; ++T) {
        s.advance_row(rng);
        for (int N = 1; N <= 4; ++N) ++vtx[(N - 1) * 4 + (T - 1)][s.height(N + 1)];
      }
    }
  }
  // The first N particles of a q-TASEP evolve on their own, so one 4-particle
  // run read after each move serves every x_N along the path T^T N^(N-1).
  std::vector<Counts> qt(16);
  {
    Rng rng(ctx.seed, 1300);
    const TimeLikePath path = TimeLikePath::from_moves("TTTTNNN");
    for (long i = 0; i < n; ++i) {
      ParticleConfig x = step_config(4);
      for (int T = 1; T <= 4; ++T) {
        x = bernoulli_move(x, p.a, path_move(path, static_cast<std::size_t>(T - 1), p, 1).param, p.q, rng);
        ParticleConfig y = x;
        ++qt[T - 1][y[0] + 1];
        for (int N = 2; N <= 4; ++N) {
          y = geometric_move(y, p.a, p.c(static_cast<std::size_t>(N - 1)), p.q, rng);
          ++qt[(N - 1) * 4 + (T - 1)][y[N - 1] + N];
        }
      }
    }
  }
  for (int N = 1; N <= 4; ++N)
    for (int T = 1; T <= 4; ++T) {
      const ComparisonReport c = chi2_two_sample(vtx[(N - 1) * 4 + (T - 1)], qt[(N - 1) * 4 + (T - 1)], r.threshold);
      pmin = std::min(pmin, c.p_value);
      per.push_back(json{{"N", N}, {"T", T}, {"chi2", c.value}, {"dof", c.dof}, {"p_value", c.p_value}});
    }
  r.value = pmin;
  r.pass = pmin > r.threshold;
  r.details = json{{"samples_each", n}, {"params", p}, {"cases", per}};
  return r;
}

inline CheckResult schur_matching(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |MC - Schur| / SE";
  r.threshold = 4.0;
  const long n = ctx.budget(1000000);
  const std::vector<double> zetas{0.3, 1.0};
  double worst = 0.0;
  json per = json::array();
  SchurSetup base;
  base.q = 0.4;
  base.u = -0.8;
  base.a1 = 1.3;
  for (int T = 1; T <= 3; ++T) {
    SchurSetup s3 = base;
    s3.N = 3;
    s3.T = T;
    const ModelParams p = s3.vertex_params();
    auto sample = [&](Rng& rng) {
      QuadrantSampler qs(p, Boundary::step_bernoulli(), 3);
      for (int t = 0; t < T; ++t) qs.advance_row(rng);
      return std::vector<int>{qs.height(2), qs.height(3), qs.height(4)};
    };
    auto obs = [&](const std::vector<int>& h) {
      std::vector<double> v;
      for (int N = 1; N <= 3; ++N)
        for (double z : zetas) v.push_back(vertex_matching_observable(h[N - 1], z, p.q));
      return v;
    };
    const auto est = mc_estimate_vector(sample, obs, n, seed_list(ctx.seed + 1300 + T, 4));
    std::size_t k = 0;
    for (int N = 1; N <= 3; ++N)
      for (double z : zetas) {
        SchurSetup s = base;
        s.N = N;
        s.T = T;
        const double rhs =
            schur_bruteforce_expectation(s, [&](const std::vector<int>& lam) { return schur_matching_observable(lam, z, s.q); })
                .value;
        const double zs = est[k].se > 0.0 ? std::abs(est[k].mean - rhs) / est[k].se : 0.0;
        worst = std::max(worst, zs);
        per.push_back(json{{"N", N}, {"T", T}, {"zeta", z}, {"schur", rhs}, {"mc", est[k].mean}, {"se", est[k].se}, {"z", zs}});
        ++k;
      }
  }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"samples_per_T", n}, {"setup", base.to_json()}, {"cases", per}};
  return r;
}

inline CheckResult fredholm(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "max |Fredholm - brute force|";
  r.threshold = 1e-6;
  Rng rng = ctx.rng(14);
  double worst = 0.0;
  int cases = 0;
  for (int N = 1; N <= 3; ++N)
    for (int T = 1; T <= 3; ++T)
      for (int d = 0; d < 2; ++d) {
        SchurSetup s;
        s.q = draw_in(rng, 0.2, 0.7);
        s.u = draw_in(rng, -2.0, -0.5);
        s.a1 = draw_in(rng, 1.0, 1.0 / s.q - 0.1);
        s.N = N;
        s.T = T;
        const auto bf = schur_length_law(s);
        const auto fr = length_law_fredholm(s);
        for (int L = 0; L <= T; ++L) worst = std::max(worst, std::abs(bf[L] - fr[L]));
        ++cases;
      }
  r.value = worst;
  r.pass = worst <= r.threshold;
  r.details = json{{"setups", cases}};
  return r;
}

inline SchurSetup lln_setup() {
  SchurSetup s;
  s.q = 0.5;
  s.u = -1.0;
  s.a1 = 1.0;
  s.eta = 1.0;
  s.tau = 2.0;
  return s;
}

inline CheckResult lln(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "|mean(x/M) - X|";
  r.threshold = 0.05;
  const int reps = std::max(20, static_cast<int>(std::lround(200 * ctx.budget_scale)));
  const AsymptoticsReport rep = asymptotics_experiment(lln_setup(), {400}, reps, ctx.seed, false);
  r.value = rep.per_M[0].mean_err;
  r.pass = r.value <= r.threshold;
  r.details = json{{"M", 400}, {"replicas", reps}, {"X_theory", rep.X_theory}, {"mean_scaled", rep.per_M[0].mean_scaled}};
  return r;
}

inline CheckResult tracy_widom(const CheckContext& ctx) {
  CheckResult r;
  r.statistic = "Kolmogorov distance to F_GUE";
  r.threshold = 0.15;
  // F_GUE sanity: monotone, tails, node doubling.
  double prev = -1.0, doubling = 0.0;
  bool monotone = true;
  for (int i = 0; i < 100; ++i) {
    const double x = -10.0 + 16.0 * i / 99.0;
    const double f = tracy_widom_cdf(x, 96);
    monotone = monotone && f >= prev - 1e-12;
    prev = f;
    doubling = std::max(doubling, std::abs(f - tracy_widom_cdf(x, 48)));
  }
  const double lo = tracy_widom_cdf(-10.0), hi = tracy_widom_cdf(6.0);
  const bool cdf_ok = monotone && lo < 1e-4 && hi > 1.0 - 1e-6 && doubling <= 1e-8;
  const int reps = std::max(50, static_cast<int>(std::lround(500 * ctx.budget_scale)));
  const AsymptoticsReport rep = asymptotics_experiment(lln_setup(), {2000}, reps, ctx.seed, true);
  r.value = rep.per_M[0].ks_stat;
  r.pass = cdf_ok && r.value <= r.threshold;
  r.details = json{{"M", 2000},           {"replicas", reps},     {"sigma", rep.sigma},
                   {"mean_err", rep.per_M[0].mean_err}, {"F_monotone", monotone}, {"F_at_minus10", lo},
                   {"F_at_6", hi},        {"node_doubling_diff", doubling}};
  return r;
}

}  // namespace checks

struct CheckInfo {
  int index;
  std::string id;
  std::string name;
  std::function<CheckResult(const CheckContext&)> run;
};

inline const std::vector<CheckInfo>& check_registry() {
  static const std::vector<CheckInfo> reg{
      {1, "stochasticity", "vertex weights are stochastic", checks::stochasticity},
      {2, "sum_to_one", "exact sum-to-one of f_stoch with an absorbing column", checks::sum_to_one},
      {3, "sampler_vs_formula", "quadrant sampler against f_stoch", checks::sampler_vs_formula},
      {4, "key_lemma", "operator D_N on sums of F-tilde, single and two-level", checks::key_lemma},
      {5, "route_triangle", "operator, quadrature and residue routes for q-moments", checks::route_triangle},
      {6, "moments_mc", "residue q-moments against vertex Monte Carlo", checks::moments_mc},
      {7, "formal_identity", "subset-sum identity in indeterminates", checks::formal_identity},
      {8, "qwhittaker_n1", "N=1 q-Whittaker moments against series coefficients", checks::qwhittaker_n1},
      {9, "commutation", "geometric and Bernoulli q-TASEP moves commute", checks::commutation},
      {10, "local_coupling", "local coupling joint laws", checks::local_coupling},
      {11, "coupling_theorem", "time-like path coupling by double dynamic programming", checks::coupling_theorem},
      {12, "distributional_equality", "step-Bernoulli height against x_N + N", checks::distributional_equality},
      {13, "schur_matching", "vertex observable against the Schur measure", checks::schur_matching},
      {14, "fredholm", "Fredholm length law against brute-force Schur", checks::fredholm},
      {15, "lln", "law of large numbers for the special q-TASEP", checks::lln},
      {16, "tracy_widom", "GUE Tracy-Widom fluctuations", checks::tracy_widom},
  };
  return reg;
}

inline const CheckInfo& find_check(const std::string& key) {
  for (const auto& c : check_registry())
    if (c.id == key || std::to_string(c.index) == key) return c;
  throw ParameterError("unknown check id '" + key + "'");
}

inline CheckResult run_check(const CheckInfo& info, const CheckContext& ctx) {
  Stopwatch sw;
  CheckResult r;
  try {
    r = info.run(ctx);
  } catch (const std::exception& e) {
    r = CheckResult{};
    r.pass = false;
    r.error = e.what();
  }
  r.id = info.id;
  r.index = info.index;
  r.name = info.name;
  r.runtime_s = sw.seconds();
  return r;
}

// Suite: "default" (1-15), "full" (1-16), "none", a comma list of ids or
// indices, or a JSON file {"checks": [...], "seed": n, "budget_scale": x}.
struct SuiteSpec {
  std::vector<std::string> ids;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget_scale;
};

inline SuiteSpec parse_suite(const std::string& s) {
  SuiteSpec spec;
  if (s == "default" || s == "full") {
    for (const auto& c : check_registry())
      if (s == "full" || c.index <= 15) spec.ids.push_back(c.id);
    return spec;
  }
  if (s == "none" || s.empty()) return spec;
  if (std::filesystem::exists(s)) {
    const json j = read_json_file(s);
    for (const auto& c : j.value("checks", json::array())) {
      const std::string key = c.is_number() ? std::to_string(c.get<int>()) : c.get<std::string>();
      spec.ids.push_back(find_check(key).id);
    }
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("budget_scale")) spec.budget_scale = j.at("budget_scale").get<double>();
    return spec;
  }
  if (s.size() > 5 && s.substr(s.size() - 5) == ".json") throw ParameterError("unreadable suite file '" + s + "'");
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) spec.ids.push_back(find_check(item).id);
  return spec;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p);
  require(static_cast<bool>(f), "cannot write " + p.string());
  f << text;
}

// Runs checks in order, one collector writes <out>/<id>.json and <out>/summary.csv.
inline std::vector<CheckResult> run_suite(const std::vector<std::string>& ids, const CheckContext& ctx,
                                          const std::string& out_dir,
                                          const std::function<void(const CheckResult&)>& on_result = {}) {
  std::vector<CheckResult> results;
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  for (const auto& id : ids) {
    CheckResult r = run_check(find_check(id), ctx);
    if (!out_dir.empty()) write_text(std::filesystem::path(out_dir) / (r.id + ".json"), r.to_json().dump(2) + "\n");
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  if (!out_dir.empty()) {
    std::ostringstream csv;
    csv << "index,id,pass,statistic,value,threshold,runtime_s\n";
    csv.precision(10);
    for (const auto& r : results)
      csv << r.index << ',' << r.id << ',' << (r.pass ? "PASS" : "FAIL") << ",\"" << r.statistic << "\","
          << r.value << ',' << r.threshold << ',' << r.runtime_s << '\n';
    write_text(std::filesystem::path(out_dir) / "summary.csv", csv.str());
  }
  return results;
}

inline std::string result_line(const CheckResult& r) {
  std::ostringstream os;
  os.precision(6);
  os << (r.pass ? "PASS" : "FAIL") << " [" << r.index << "] " << r.id << ": " << r.statistic << " = " << r.value
     << " (threshold " << r.threshold << ")";
  if (!r.error.empty()) os << " error: " << r.error;
  os.precision(3);
  os << " [" << std::fixed << r.runtime_s << " s]";
  return os.str();
}

}  // namespace vertexlab
