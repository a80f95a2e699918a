#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "vertexlab/core.hpp"
#include "vertexlab/diffops.hpp"
#include "vertexlab/harness.hpp"
#include "vertexlab/rng.hpp"
#include "vertexlab/vertex_model.hpp"

namespace vertexlab {

struct Circle {
  cplx center;
  double radius = 1.0;

  bool contains(cplx z, double margin = 0.0) const { return std::abs(z - center) < radius - margin; }
  bool excludes(cplx z, double margin = 0.0) const { return std::abs(z - center) > radius + margin; }
};

// components[j] is the contour of z_{j+1}; when nested, z_j's circle contains q times z_{j+1}'s.
struct ContourSpec {
  std::vector<Circle> components;
  double q = 0.5;
  bool nested = true;

  // Empty string when valid.
  std::string validate(const std::vector<cplx>& enclosed, const std::vector<cplx>& excluded,
                       double margin = 1e-9) const {
    for (std::size_t j = 0; j < components.size(); ++j) {
      const Circle& c = components[j];
      for (cplx z : enclosed)
        if (!c.contains(z, margin)) return "contour " + std::to_string(j + 1) + " misses an enclosed point";
      for (cplx z : excluded)
        if (!c.excludes(z, margin)) return "contour " + std::to_string(j + 1) + " surrounds an excluded pole";
      if (nested && j + 1 < components.size()) {
        const Circle& d = components[j + 1];
        // q·circle(d) lies inside circle(c).
        if (std::abs(q * d.center - c.center) + q * d.radius >= c.radius - margin)
          return "contour " + std::to_string(j + 1) + " does not contain q times the next one";
      }
    }
    return "";
  }

  json to_json() const {
    json comps = json::array();
    for (const auto& c : components)
      comps.push_back(json{{"center", {c.center.real(), c.center.imag()}}, {"radius", c.radius}});
    return json{{"components", comps}, {"q", q}, {"nested", nested}};
  }
};

// Concentric nested circles around the a-cluster staying left of r_max_abs.
// r_max_abs is the smallest excluded positive point (a/ν poles), +∞ when none.
// Each radius sits a common factor κ above the singular radius inside it and κ
// below the next obstruction, which balances the trapezoid errors on every circle.
inline ContourSpec a_cluster_contours(const std::vector<double>& a, double q, int ell,
                                      double r_max_abs = std::numeric_limits<double>::infinity()) {
  require(!a.empty() && ell >= 1, "a_cluster_contours: empty input");
  const auto [lo, hi] = std::minmax_element(a.begin(), a.end());
  const double c = 0.5 * (*lo + *hi);
  const double h = std::max(0.5 * (*hi - *lo), 1e-3 * c);
  const double r_max = std::min(c, r_max_abs - c);
  auto radii = [&](double k) {
    std::vector<double> r(ell);
    r[ell - 1] = k * h;
    for (int j = ell - 2; j >= 0; --j) r[j] = k * ((1.0 - q) * c + q * r[j + 1]);
    return r;
  };
  require(radii(1.0)[0] < r_max, "contour infeasible: nested circles cannot avoid 0 and the a/nu poles");
  double klo = 1.0, khi = r_max / h;
  for (int it = 0; it < 200; ++it) {
    const double k = 0.5 * (klo + khi);
    if (radii(k)[0] * k <= r_max) {
      klo = k;
    } else {
      khi = k;
    }
  }
  const auto r = radii(klo);
  ContourSpec cs;
  cs.q = q;
  for (double x : r) cs.components.push_back({c, x});
  return cs;
}

struct QuadratureOptions {
  int n0 = 0;  // 0 picks a default by dimension
  double tol = 1e-11;
  double max_evals = 1.1e9;  // admits 1024^3 for three nested circles
};

struct MomentResult {
  double value = 0.0;
  double error_estimate = 0.0;
  std::string method;
  int nodes = 0;

  json to_json(const std::string& formula, const std::string& digest) const {
    return json{{"formula", formula},
                {"params_digest", digest},
                {"value", value},
                {"method", method},
                {"error_estimate", error_estimate}};
  }
};

using VariableFactor = std::function<cplx(cplx)>;

namespace detail {

inline cplx nested_sum(const ContourSpec& cs, const std::vector<VariableFactor>& g, double q, int n) {
  const int ell = static_cast<int>(cs.components.size());
  std::vector<std::vector<cplx>> z(ell, std::vector<cplx>(n)), w(ell, std::vector<cplx>(n));
  for (int j = 0; j < ell; ++j) {
    const Circle& c = cs.components[j];
    for (int k = 0; k < n; ++k) {
      const double th = 2.0 * std::numbers::pi * k / n;
      const cplx e = std::polar(1.0, th);
      const cplx zz = c.center + c.radius * e;
      z[j][k] = zz;
      // dz/(2πi z) on the circle, trapezoid weight included.
      w[j][k] = g[j](zz) * (c.radius * e) / (static_cast<double>(n) * zz);
    }
  }
  if (ell == 1) {
    cplx s = 0.0;
    for (int k = 0; k < n; ++k) s += w[0][k];
    return s;
  }
  // Cross factors (z_α - z_β)/(z_α - q z_β), α < β.
  std::vector<std::vector<cplx>> C(static_cast<std::size_t>(ell) * ell);
  for (int al = 0; al < ell; ++al)
    for (int be = al + 1; be < ell; ++be) {
      auto& m = C[al * ell + be];
      m.resize(static_cast<std::size_t>(n) * n);
      for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) m[k * n + l] = (z[al][k] - z[be][l]) / (z[al][k] - q * z[be][l]);
    }
  std::vector<int> idx(ell, 0);
  std::function<cplx(int, cplx)> rec = [&](int d, cplx acc) -> cplx {
    cplx s = 0.0;
    for (int k = 0; k < n; ++k) {
      cplx t = acc * w[d][k];
      for (int al = 0; al < d; ++al) t *= C[al * ell + d][idx[al] * n + k];
      if (d + 1 == ell) {
        s += t;
      } else {
        idx[d] = k;
        s += rec(d + 1, t);
      }
    }
    return s;
  };
  return rec(0, 1.0);
}

}  // namespace detail

// prefactor · (2πi)^{-ℓ} ∮...∮ ∏ (z_α - z_β)/(z_α - q z_β) ∏_j g_j(z_j) dz_j/z_j,
// trapezoid on each circle, doubled until two grids agree.
inline MomentResult nested_quadrature(const ContourSpec& cs, const std::vector<VariableFactor>& g,
                                      double q, double prefactor, QuadratureOptions opt = {}) {
  const int ell = static_cast<int>(cs.components.size());
  require(ell >= 1 && static_cast<int>(g.size()) == ell, "nested_quadrature: dimension mismatch");
  int n = opt.n0 > 0 ? opt.n0 : (ell <= 2 ? 512 : ell == 3 ? 128 : 32);
  cplx prev = prefactor * detail::nested_sum(cs, g, q, n);
  while (true) {
    const int n2 = 2 * n;
    require(std::pow(static_cast<double>(n2), ell) <= opt.max_evals,
            "quadrature did not stabilize within the evaluation budget");
    const cplx cur = prefactor * detail::nested_sum(cs, g, q, n2);
    const double diff = std::abs(cur - prev);
    if (diff <= opt.tol * std::max(1.0, std::abs(cur))) {
      MomentResult r;
      r.value = cur.real();
      r.error_estimate = std::max(diff, std::abs(cur.imag()));
      r.method = "quadrature";
      r.nodes = n2;
      return r;
    }
    prev = cur;
    n = n2;
  }
}

inline double product_shift(const std::vector<double>& nu, int N) {
  double b = 1.0;
  for (int i = 0; i < N; ++i) b *= nu[i];
  return b;
}

namespace detail {

inline void check_N_list(const std::vector<int>& N_list, const ModelParams& p, int T) {
  require(!N_list.empty(), "empty N list");
  for (std::size_t j = 0; j + 1 < N_list.size(); ++j)
    require(N_list[j] >= N_list[j + 1], "N list must be weakly decreasing");
  require(N_list.back() >= 0, "N list entries must be nonnegative");
  require(static_cast<int>(p.columns()) >= N_list.front(), "not enough column parameters");
  require(T >= 0 && static_cast<int>(p.u.size()) >= T, "not enough spectral parameters");
  check_q(p.q);
}

}  // namespace detail

// E ∏_j (q^{𝔥(N_j+1,T)} - q^{T+ℓ-j} ν_1...ν_{N_j}) by nested a-cluster contours.
inline MomentResult moment_product_quadrature(const std::vector<int>& N_list, int T,
                                              const ModelParams& p,
                                              const ContourSpec* contour = nullptr,
                                              QuadratureOptions opt = {}) {
  detail::check_N_list(N_list, p, T);
  require(N_list.back() >= 1, "quadrature route needs N_list entries >= 1");
  const int ell = static_cast<int>(N_list.size());
  const int N = N_list.front();
  const ValidityReport vr = validate_params(p, N, T);
  require(vr.basic_ok, "quadrature route needs admissible parameters");
  require(vr.nested_ok, "quadrature route needs min a > q max a");
  if (T > 0) check_u_distinct(p.u, T, p.q, true);
  const double q = p.q;
  std::vector<cplx> enclosed, excluded{0.0};
  double pole_min = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    enclosed.emplace_back(p.a[i]);
    if (p.nu[i] > 0.0) {
      excluded.emplace_back(p.a[i] / p.nu[i]);
      pole_min = std::min(pole_min, p.a[i] / p.nu[i]);
    }
  }
  for (int t = 0; t < T; ++t) excluded.emplace_back(1.0 / p.u[t]);
  const ContourSpec cs = contour ? *contour
                                 : a_cluster_contours(std::vector<double>(p.a.begin(), p.a.begin() + N),
                                                      q, ell, pole_min);
  require(static_cast<int>(cs.components.size()) == ell, "contour has the wrong number of components");
  const std::string err = cs.validate(enclosed, excluded);
  require(err.empty(), "invalid contour: " + err);
  std::vector<VariableFactor> g;
  for (int j = 0; j < ell; ++j) {
    const int Nj = N_list[j];
    g.push_back([&p, Nj, T, q](cplx z) {
      cplx r = 1.0;
      for (int i = 0; i < Nj; ++i) r *= (p.a[i] - p.nu[i] * z) / (p.a[i] - z);
      for (int t = 0; t < T; ++t) r *= (1.0 - q * p.u[t] * z) / (1.0 - p.u[t] * z);
      return r;
    });
  }
  const double pref = (ell % 2 ? -1.0 : 1.0) * std::pow(q, ell * (ell - 1) / 2.0);
  return nested_quadrature(cs, g, q, pref, opt);
}

// E ∏_j q^{𝔥(N_j+1,T)} by iterated residues at 0 and the u_t^{-1}.
inline double moment_height_residues(const std::vector<int>& N_list, int T, const ModelParams& p) {
  detail::check_N_list(N_list, p, T);
  const int ell = static_cast<int>(N_list.size());
  require(ell <= 3, "residue engine supports at most three variables");
  if (T == 0) return 1.0;
  check_u_distinct(p.u, T, p.q, true);
  const double q = p.q;
  // R[i][t]: residue factor of variable i at 1/u_t.
  std::vector<std::vector<double>> R(ell, std::vector<double>(T));
  for (int i = 0; i < ell; ++i)
    for (int t = 0; t < T; ++t) {
      const double z = 1.0 / p.u[t];
      double r = -(1.0 - q);
      for (int j = 0; j < N_list[i]; ++j) r *= (p.a[j] - p.nu[j] * z) / (p.a[j] - z);
      for (int s = 0; s < T; ++s)
        if (s != t) r *= (1.0 - q * p.u[s] * z) / (1.0 - p.u[s] * z);
      R[i][t] = r;
    }
  double total = 0.0;
  std::vector<int> pick(ell, -1);  // -1 is the pole at 0
  std::function<void(int)> rec = [&](int i) {
    if (i == ell) {
      double t = std::pow(q, ell * (ell - 1) / 2.0);
      for (int k = 0; k < ell; ++k) {
        if (pick[k] < 0) {
          t *= std::pow(q, -(ell - 1 - k));
        } else {
          t *= R[k][pick[k]];
        }
      }
      for (int al = 0; al < ell; ++al)
        for (int be = al + 1; be < ell; ++be)
          if (pick[al] >= 0 && pick[be] >= 0) {
            const double za = 1.0 / p.u[pick[al]], zb = 1.0 / p.u[pick[be]];
            t *= (za - zb) / (za - q * zb);
          }
      total += t;
      return;
    }
    for (int c = -1; c < T; ++c) {
      bool used = false;
      for (int k = 0; k < i && c >= 0; ++k) used |= pick[k] == c;
      if (used) continue;
      pick[i] = c;
      rec(i + 1);
    }
    pick[i] = -1;
  };
  rec(0);
  return total;
}

// Product observable from height moments: expand over the subsets S kept as q^{𝔥}.
inline double moment_product_residues(const std::vector<int>& N_list, int T, const ModelParams& p) {
  detail::check_N_list(N_list, p, T);
  const int ell = static_cast<int>(N_list.size());
  double total = 0.0;
  for (int mask = 0; mask < (1 << ell); ++mask) {
    double coef = 1.0;
    std::vector<int> sub;
    for (int j = 0; j < ell; ++j) {
      if (mask >> j & 1) {
        sub.push_back(N_list[j]);
      } else {
        coef *= -std::pow(p.q, T + ell - (j + 1)) * product_shift(p.nu, N_list[j]);
      }
    }
    total += coef * (sub.empty() ? 1.0 : moment_height_residues(sub, T, p));
  }
  return total;
}

// Specialization ρ(N,T) matching the vertex model: alphas c_1..c_N, betas -u_1..-u_T.
inline Specialization rho_matching(int N, int T, const ModelParams& p) {
  Specialization r;
  for (int i = 0; i < N; ++i) r.alphas.push_back(p.c(i));
  for (int t = 0; t < T; ++t) r.betas.push_back(-p.u[t]);
  return r;
}

enum class MomentEngine { Quadrature, Operator };

// E q^{k λ_N} under the q-Whittaker measure with parameters a_1..a_N and ρ.
inline MomentResult moment_qwhittaker(int k, int N, const Specialization& rho,
                                      const std::vector<double>& a, double q,
                                      MomentEngine engine = MomentEngine::Quadrature,
                                      QuadratureOptions opt = {}) {
  check_q(q);
  rho.validate();
  require(k >= 0 && N >= 1 && static_cast<int>(a.size()) >= N, "moment_qwhittaker: bad k or N");
  for (int i = 0; i < N; ++i) {
    require(a[i] > 0.0, "moment_qwhittaker needs positive a");
    for (double al : rho.alphas) require(a[i] * al < 1.0, "moment_qwhittaker needs a_i alpha_j < 1");
  }
  MomentResult r;
  if (k == 0) {
    r.value = 1.0;
    r.method = "trivial";
    return r;
  }
  if (engine == MomentEngine::Operator) {
    r.value = qwhittaker_moment_operator(k, N, rho, a, q);
    r.method = "operator";
    return r;
  }
  const std::vector<double> act(a.begin(), a.begin() + N);
  const auto [lo, hi] = std::minmax_element(act.begin(), act.end());
  require(*lo > q * *hi, "moment_qwhittaker quadrature needs min a > q max a");
  const ContourSpec cs = a_cluster_contours(act, q, k);
  std::vector<cplx> enclosed(act.begin(), act.end()), excluded{0.0};
  for (double b : rho.betas)
    if (b > 0.0) excluded.emplace_back(-1.0 / b);
  const std::string err = cs.validate(enclosed, excluded);
  require(err.empty(), "invalid contour: " + err);
  VariableFactor f = [&](cplx z) {
    cplx v = std::exp((q - 1.0) * rho.gamma * z);
    for (double ai : act) v *= ai / (ai - z);
    for (double al : rho.alphas) v *= 1.0 - al * z;
    for (double b : rho.betas) v *= (1.0 + q * b * z) / (1.0 + b * z);
    return v;
  };
  const double pref = (k % 2 ? -1.0 : 1.0) * std::pow(q, k * (k - 1) / 2.0);
  return nested_quadrature(cs, std::vector<VariableFactor>(k, f), q, pref, opt);
}

// N = 1 oracle: P(λ_1 = n) ∝ a^n Q_(n)(ρ).
inline double qwhittaker_moment_series(int k, const Specialization& rho, double a, double q,
                                       int n_max = 400) {
  const std::vector<double> Q = pi_w_coefficients(rho, q, n_max);
  double num = 0.0, den = 0.0, an = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    const double w = an * Q[n];
    num += w * std::pow(q, static_cast<double>(k) * n);
    den += w;
    an *= a;
  }
  return num / den;
}

enum class LaplaceMode { Vertex, VertexExact, QWhittaker };

struct QLaplaceResult {
  cplx value;
  double error = 0.0;
  int terms = 0;
  std::string mode;
};

inline constexpr double kLaplaceTail = 1e-12;

// Vertex side: E[(ζ q^T ν_1..ν_N; q)_∞ / (ζ q^{𝔥(N+1,T)}; q)_∞].
// QWhittaker side: E[1/(ζ q^{λ_N}; q)_∞] with ρ = ρ(N,T).
inline QLaplaceResult q_laplace(int N, int T, const ModelParams& p, cplx zeta, LaplaceMode mode,
                                long budget = 1000000, std::uint64_t seed = 1) {
  require(!(zeta.imag() == 0.0 && zeta.real() < 0.0), "q_laplace needs zeta outside the negative reals");
  require(N >= 1 && T >= 0, "q_laplace: bad N or T");
  const double q = p.q;
  QLaplaceResult res;
  if (mode == LaplaceMode::QWhittaker) {
    res.mode = "qwhittaker";
    const double az = std::abs(zeta);
    require(az < 1.0, "q_laplace: series tail bound unattainable for |zeta| >= 1");
    const Specialization rho = rho_matching(N, T, p);
    // Moments for every order from one memoized 𝒲 chain.
    int L = 0;
    double term = 1.0;
    while (term >= kLaplaceTail) {
      ++L;
      term = std::pow(az, L) / q_pochhammer(q, q, L);
    }
    OperatorFunction pi = [&](const EvaluablePoint& pt) {
      double r = 1.0;
      for (int i = 0; i < N; ++i) r *= pi_w(pt.a[i], rho, q);
      return r;
    };
    const EvaluablePoint base{std::vector<double>(p.a.begin(), p.a.begin() + N), {}};
    const double pi0 = pi(base);
    cplx s = 1.0, zl = 1.0;
    for (int l = 1; l < L; ++l) {
      zl *= zeta;
      const double m = apply_W_chain(pi, std::vector<int>(l, N), base, q) / pi0;
      s += zl / q_pochhammer(q, q, l) * m;
    }
    res.value = s;
    res.terms = L;
    res.error = std::pow(az, L) / ((1.0 - az) * q_pochhammer_inf(q, q));
    return res;
  }
  const double b = product_shift(p.nu, N);
  const cplx num = q_pochhammer_inf(zeta * std::pow(q, T) * b, q);
  std::vector<cplx> obs(T + 1);
  for (int h = 0; h <= T; ++h) obs[h] = num / q_pochhammer_inf(zeta * std::pow(q, h), q);
  if (mode == LaplaceMode::VertexExact) {
    res.mode = "vertex_exact";
    const auto law = height_law_exact(N, T, p);
    cplx s = 0.0;
    for (int h = 0; h <= T; ++h) s += law[h] * obs[h];
    res.value = s;
    return res;
  }
  res.mode = "vertex_mc";
  auto sample = [&](Rng& rng) {
    QuadrantSampler s(p, Boundary::step(), N);
    for (int t = 0; t < T; ++t) s.advance_row(rng);
    return s.height(N + 1);
  };
  auto est = mc_estimate_vector(
      sample, [&](int h) { return std::vector<double>{obs[h].real(), obs[h].imag()}; }, budget,
      seed_list(seed, 4));
  res.value = cplx(est[0].mean, est[1].mean);
  res.error = std::hypot(est[0].se, est[1].se);
  res.terms = static_cast<int>(budget);
  return res;
}

// Residual of Σ_k q^{ℓ(ℓ+1)/2 - k(k+1)/2} Σ_{|I|=k} (∏_{r∉I} b_r) ∏_j (X_{i_j} - q^{k-j+i_j} b_{i_j}) = X_1...X_ℓ.
inline double formal_identity_check(int ell, const std::vector<double>& X, const std::vector<double>& b,
                                    double q) {
  require(ell >= 1 && static_cast<int>(X.size()) >= ell && static_cast<int>(b.size()) >= ell,
          "formal_identity_check: bad sizes");
  double lhs = 0.0;
  for (int mask = 0; mask < (1 << ell); ++mask) {
    std::vector<int> I;
    double t = 1.0;
    for (int r = 1; r <= ell; ++r) {
      if (mask >> (r - 1) & 1) {
        I.push_back(r);
      } else {
        t *= b[r - 1];
      }
    }
    const int k = static_cast<int>(I.size());
    for (int j = 1; j <= k; ++j) {
      const int i = I[j - 1];
      t *= X[i - 1] - std::pow(q, k - j + i) * b[i - 1];
    }
    t *= std::pow(q, ell * (ell + 1) / 2.0 - k * (k + 1) / 2.0);
    lhs += t;
  }
  double rhs = 1.0;
  for (int r = 0; r < ell; ++r) rhs *= X[r];
  return std::abs(lhs - rhs);
}

}  // namespace vertexlab
