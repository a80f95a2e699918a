#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vertexlab/core.hpp"
#include "vertexlab/harness.hpp"
#include "vertexlab/rng.hpp"

namespace vertexlab {

// Special parameters: ν_1 = 0, ν_i = q and a_i = 1 for i >= 2, homogeneous u.
struct SchurSetup {
  double q = 0.5;
  double u = -1.0;
  double a1 = 1.0;
  int N = 1;
  int T = 1;
  double eta = 1.0;
  double tau = 2.0;
  int M = 0;

  void validate() const {
    check_q(q);
    require(u < 0.0, "SchurSetup needs u < 0");
    require(a1 > 0.0 && a1 * q < 1.0, "SchurSetup needs a1 > 0 and a1 q < 1");
    require(N >= 1 && T >= 0, "SchurSetup needs N >= 1, T >= 0");
    require(eta > 0.0 && tau > 0.0, "SchurSetup needs eta, tau > 0");
  }

  static SchurSetup scaled(double q, double u, double a1, double eta, double tau, int M) {
    SchurSetup s;
    s.q = q;
    s.u = u;
    s.a1 = a1;
    s.eta = eta;
    s.tau = tau;
    s.M = M;
    s.N = std::max(1, static_cast<int>(std::floor(eta * M)));
    s.T = static_cast<int>(std::floor(tau * M));
    return s;
  }

  // Vertex model parameters realizing this setup with the step-Bernoulli boundary.
  ModelParams vertex_params() const {
    ModelParams p;
    p.q = q;
    p.u.assign(T, u);
    p.a.assign(N, 1.0);
    p.a[0] = a1;
    p.nu.assign(N, q);
    p.nu[0] = 0.0;
    return p;
  }

  json to_json() const {
    return json{{"q", q}, {"u", u}, {"a1", a1}, {"N", N}, {"T", T}, {"eta", eta}, {"tau", tau}, {"M", M}};
  }
};

// h_k(ρ_N): coefficients of (-z/a_1; q)_∞ (1+z)^{N-1}.
inline std::vector<double> h_rho(const SchurSetup& s, int K) {
  std::vector<double> c(K + 1);
  double t = 1.0;
  for (int k = 0; k <= K; ++k) {
    if (k > 0) t *= std::pow(s.q, k - 1) / (s.a1 * (1.0 - std::pow(s.q, k)));
    c[k] = t;
  }
  for (int j = 1; j < s.N; ++j)
    for (int k = K; k >= 1; --k) c[k] += c[k - 1];
  return c;
}

// h_k of T copies of x: C(k+T-1, k) x^k.
inline std::vector<double> h_equal(double x, int T, int K) {
  std::vector<double> c(K + 1, 0.0);
  c[0] = 1.0;
  for (int t = 0; t < T; ++t)
    for (int k = 1; k <= K; ++k) c[k] += x * c[k - 1];
  return c;
}

// Jacobi–Trudi: s_λ = det[h_{λ_i - i + j}].
inline double jacobi_trudi(const std::vector<int>& lambda, const std::vector<double>& h) {
  std::vector<int> lam;
  for (int x : lambda)
    if (x > 0) lam.push_back(x);
  const int n = static_cast<int>(lam.size());
  if (n == 0) return 1.0;
  Eigen::MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int k = lam[i] - i + j;
      m(i, j) = (k >= 0 && k < static_cast<int>(h.size())) ? h[k] : 0.0;
    }
  return m.determinant();
}

// Π_S = ∏_k (-x_k/a_1; q)_∞ (1 + x_k)^{N-1} with x_k = -1/u.
inline double pi_schur(const SchurSetup& s) {
  const double x = -1.0 / s.u;
  return std::pow(q_pochhammer_inf(-x / s.a1, s.q) * std::pow(1.0 + x, s.N - 1), s.T);
}

struct SchurEnumeration {
  double value = 0.0;
  double deficit = 0.0;
  int cutoff = 0;
};

// Σ_λ s_λ(x) s_λ(ρ_N)/Π_S · f(λ) over ℓ(λ) <= T, λ_1 <= cutoff; λ passed padded to T parts.
inline SchurEnumeration schur_bruteforce_expectation(const SchurSetup& s,
                                                     const std::function<double(const std::vector<int>&)>& f,
                                                     int part_cutoff = 0, double max_deficit = 1e-10) {
  s.validate();
  const double x = -1.0 / s.u;
  const double Z = pi_schur(s);
  auto run = [&](int cut) {
    SchurEnumeration r;
    r.cutoff = cut;
    const int K = cut + s.T + 2;
    const auto hx = h_equal(x, s.T, K);
    const auto hr = h_rho(s, K);
    double total = 0.0, val = 0.0;
    std::vector<int> lam(s.T, 0);
    std::function<void(int, int)> rec = [&](int i, int upper) {
      if (i == s.T) {
        const double w = jacobi_trudi(lam, hx) * jacobi_trudi(lam, hr) / Z;
        total += w;
        val += w * f(lam);
        return;
      }
      for (int v = 0; v <= upper; ++v) {
        lam[i] = v;
        rec(i + 1, v);
      }
      lam[i] = 0;
    };
    rec(0, cut);
    r.value = val;
    r.deficit = std::abs(1.0 - total);
    return r;
  };
  if (part_cutoff > 0) {
    auto r = run(part_cutoff);
    require(r.deficit <= max_deficit, "Schur enumeration deficit exceeds the bound");
    return r;
  }
  for (int cut = 16;; cut *= 2) {
    auto r = run(cut);
    if (r.deficit <= max_deficit) return r;
    require(cut < 512, "Schur enumeration deficit exceeds the bound");
  }
}

// Law of ℓ(λ) on {0..T} by enumeration.
inline std::vector<double> schur_length_law(const SchurSetup& s, double* deficit = nullptr) {
  std::vector<double> law(s.T + 1, 0.0);
  SchurEnumeration last;
  for (int L = 0; L <= s.T; ++L) {
    last = schur_bruteforce_expectation(s, [L](const std::vector<int>& lam) {
      return static_cast<int>(std::count_if(lam.begin(), lam.end(), [](int v) { return v > 0; })) == L ? 1.0 : 0.0;
    });
    law[L] = last.value;
  }
  if (deficit) *deficit = last.deficit;
  return law;
}

// ∏_{j<T} (1 + ζ q^{λ_{T-j}+j}) / (-ζ; q)_∞, the Schur side of the matching.
inline double schur_matching_observable(const std::vector<int>& lam, double zeta, double q) {
  const int T = static_cast<int>(lam.size());
  double r = 1.0 / q_pochhammer_inf(-zeta, q);
  for (int j = 0; j < T; ++j) r *= 1.0 + zeta * std::pow(q, lam[T - 1 - j] + j);
  return r;
}

// Vertex side: 1/(-ζ q^h; q)_∞.
inline double vertex_matching_observable(int h, double zeta, double q) {
  return 1.0 / q_pochhammer_inf(-zeta * std::pow(q, h), q);
}

// Kernel contours: circles centered at c on the real axis, w inside v.
struct KernelContours {
  double center = 0.0;
  double r_v = 0.0;
  double r_w = 0.0;
  int nodes = 256;

  json to_json() const { return json{{"center", center}, {"r_v", r_v}, {"r_w", r_w}, {"nodes", nodes}}; }
};

// Circles centered at -1/(2u) at distances 1/3 and 2/3 of the gap to -1 beyond
// both enclosed points. The integrand grows like e^{cM} on them, so accuracy
// degrades with M; node doubling exposes the error.
inline KernelContours default_kernel_contours(const SchurSetup& s, int nodes = 256) {
  const double p = -1.0 / s.u;
  KernelContours k;
  k.center = 0.5 * p;
  k.r_w = k.center + 1.0 / 3.0;
  k.r_v = k.center + 2.0 / 3.0;
  k.nodes = nodes;
  return k;
}

// Correlation kernel of {λ_i - i} by trapezoid quadrature on two circles.
class SchurKernel {
 public:
  explicit SchurKernel(const SchurSetup& s, int nodes = 256) : SchurKernel(s, default_kernel_contours(s, nodes)) {}

  SchurKernel(const SchurSetup& s, const KernelContours& kc) : s_(s), kc_(kc) {
    s.validate();
    const int n = kc.nodes;
    require(n >= 8, "kernel quadrature needs at least 8 nodes");
    require(kc.r_w > 0.0 && kc.r_v > kc.r_w, "kernel contours need 0 < r_w < r_v");
    const double p = -1.0 / s.u;
    require(std::abs(kc.center) < kc.r_w && std::abs(p - kc.center) < kc.r_w,
            "kernel contours must enclose 0 and -1/u");
    require(kc.center - kc.r_v > -1.0, "kernel contours must leave out -1");
    v_.resize(n);
    w_.resize(n);
    av_.resize(n);
    bw_.resize(n);
    for (int k = 0; k < n; ++k) {
      const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * k / n);
      v_[k] = kc.center + kc.r_v * e;
      w_[k] = kc.center + kc.r_w * e;
      av_[k] = log_a(v_[k]);
      bw_[k] = -log_a(w_[k]);
    }
    cm_.resize(n, n);
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l) cm_(k, l) = 1.0 / (v_[k] - w_[l]);
  }

  // K(i,j) for i in rows, j in cols; dz/(2πi) on a circle is (z - c)/n per trapezoid node.
  Eigen::MatrixXd block(const std::vector<int>& rows, const std::vector<int>& cols) const {
    const int n = kc_.nodes;
    Eigen::MatrixXcd V(rows.size(), n), W(n, cols.size());
    for (std::size_t a = 0; a < rows.size(); ++a)
      for (int k = 0; k < n; ++k) {
        const cplx dz = (v_[k] - kc_.center) / static_cast<double>(n);
        V(a, k) = std::exp(av_[k] - static_cast<double>(rows[a] + 1) * std::log(v_[k])) * dz;
      }
    for (int l = 0; l < n; ++l)
      for (std::size_t b = 0; b < cols.size(); ++b) {
        const cplx dz = (w_[l] - kc_.center) / static_cast<double>(n);
        W(l, b) = std::exp(bw_[l] + static_cast<double>(cols[b]) * std::log(w_[l])) * dz;
      }
    const Eigen::MatrixXcd K = V * cm_ * W;
    imag_max_ = K.imag().cwiseAbs().maxCoeff();
    return K.real();
  }

  double operator()(int i, int j) const { return block({i}, {j})(0, 0); }
  // Largest imaginary part in the last block; the exact kernel is real.
  double last_imag() const { return imag_max_; }
  const KernelContours& contours() const { return kc_; }

 private:
  // log of (-v/a_1; q)_∞ (1+v)^{N-1} (u + 1/v)^T.
  cplx log_a(cplx v) const {
    cplx r = 0.0;
    double qk = 1.0;
    while (std::abs(v) * qk / s_.a1 > 1e-17) {
      r += std::log(1.0 + v * qk / s_.a1);
      qk *= s_.q;
    }
    r += static_cast<double>(s_.N - 1) * std::log(1.0 + v);
    r += static_cast<double>(s_.T) * std::log(s_.u + 1.0 / v);
    return r;
  }

  SchurSetup s_;
  KernelContours kc_;
  std::vector<cplx> v_, w_, av_, bw_;
  Eigen::MatrixXcd cm_;
  mutable double imag_max_ = 0.0;
};

inline double schur_kernel(int i, int j, const SchurSetup& s, int nodes = 256) {
  return SchurKernel(s, nodes)(i, j);
}

// P(-ℓ(λ) > x) = det K on {x, x-1, ..., x-cutoff}: all those sites are occupied.
// Sites below -T are always occupied, so the cutoff only has to reach them.
inline double prob_length_exceeds(int x, const SchurSetup& s, int cutoff = -1,
                                  const SchurKernel* kernel = nullptr) {
  s.validate();
  if (x >= 0) return 0.0;
  if (cutoff < 0) cutoff = x + s.T + 8;
  require(x - cutoff < -s.T, "cutoff must reach the frozen sites below -T");
  std::vector<int> sites;
  for (int k = 0; k <= cutoff; ++k) sites.push_back(x - k);
  if (kernel) return kernel->block(sites, sites).determinant();
  return SchurKernel(s).block(sites, sites).determinant();
}

// Law of ℓ(λ) from Fredholm determinants: P(ℓ = L) for L = 0..T.
inline std::vector<double> length_law_fredholm(const SchurSetup& s, int nodes = 256) {
  const SchurKernel K(s, nodes);
  std::vector<double> cdf(s.T + 2, 0.0);  // cdf[L] = P(ℓ < L)
  for (int L = 1; L <= s.T + 1; ++L) cdf[L] = prob_length_exceeds(-L, s, -1, &K);
  std::vector<double> law(s.T + 1);
  for (int L = 0; L <= s.T; ++L) law[L] = cdf[L + 1] - cdf[L];
  return law;
}

enum class Regime { Curved, Flat };

struct CriticalData {
  double x_c = 0.0;
  double v_c = 0.0;
  double sigma = 0.0;
  Regime regime = Regime::Curved;
};

// Derivatives of G(v;x) = η log(1+v) + τ log(u + 1/v) - x log(-v).
inline double G_prime(double v, double x, double eta, double tau, double u, int order) {
  const double a = 1.0 + v, b = 1.0 + u * v;
  switch (order) {
    case 1: return eta / a + tau * u / b - (tau + x) / v;
    case 2: return -eta / (a * a) - tau * u * u / (b * b) + (tau + x) / (v * v);
    case 3: return 2.0 * eta / (a * a * a) + 2.0 * tau * u * u * u / (b * b * b) - 2.0 * (tau + x) / (v * v * v);
  }
  throw ParameterError("G_prime: order must be 1, 2 or 3");
}

inline double sigma_closed_form(double eta, double tau, double u) {
  return std::pow(-u * tau * eta, 1.0 / 6.0) * std::pow(1.0 + std::sqrt(-u * eta / tau), 2.0 / 3.0) *
         std::pow(std::abs(1.0 - std::sqrt(-u * tau / eta)), 2.0 / 3.0) / (1.0 - u);
}

inline CriticalData critical_point(double eta, double tau, double u) {
  require(eta > 0.0 && tau > 0.0 && u < 0.0, "critical_point needs eta, tau > 0 and u < 0");
  CriticalData d;
  const double r = std::sqrt(-u * eta * tau);
  d.x_c = (eta - tau - 2.0 * r) / (1.0 - u);
  d.v_c = (-(1.0 - u) * r - u * (eta + tau)) / (u * (tau + eta * u));
  d.regime = tau / eta > -1.0 / u ? Regime::Curved : Regime::Flat;
  d.sigma = d.regime == Regime::Curved ? sigma_closed_form(eta, tau, u) : 0.0;
  return d;
}

// σ = -v_c (G'''(v_c; x_c)/2)^{1/3}, so that M G near v_c reads ṽ³/3 in the scaled variable.
inline double sigma_from_derivative(double eta, double tau, double u) {
  const CriticalData d = critical_point(eta, tau, u);
  return -d.v_c * std::cbrt(0.5 * G_prime(d.v_c, d.x_c, eta, tau, u, 3));
}

inline double limit_shape(double eta, double tau, double u) {
  require(eta > 0.0 && tau > 0.0 && u < 0.0, "limit_shape needs eta, tau > 0 and u < 0");
  if (tau / eta > -1.0 / u) return (-u * (tau - eta) - 2.0 * std::sqrt(-u * eta * tau)) / (1.0 - u);
  return -eta;
}

namespace detail {

struct AiryPair {
  double ai;
  double aip;
};

inline const std::vector<std::pair<double, double>>& gl_panel() {
  static const std::vector<std::pair<double, double>> nodes = [] {
    // 20-point Gauss–Legendre on [-1,1] by Newton iteration.
    std::vector<std::pair<double, double>> r;
    const int n = 20;
    for (int i = 1; i <= n; ++i) {
      double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        const double dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      const double dp = n * (x * p1 - p0) / (x * x - 1.0);
      r.emplace_back(x, 2.0 / ((1.0 - x * x) * dp * dp));
    }
    return r;
  }();
  return nodes;
}

// Ai, Ai' from the ray integral (1/π) Im[e^{iπ/3} ∫_0^∞ e^{-s³/3 - x s e^{iπ/3}} ds].
inline AiryPair airy_integral(double x) {
  const cplx e1 = std::polar(1.0, std::numbers::pi / 3.0);
  const cplx e2 = std::polar(1.0, 2.0 * std::numbers::pi / 3.0);
  const double L = 10.0;
  const int panels = 40;
  const double hw = 0.5 * L / panels;
  cplx I0 = 0.0, I1 = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * (L / panels);
    for (const auto& [t, w] : gl_panel()) {
      const double s = mid + hw * t;
      const cplx f = std::exp(-s * s * s / 3.0 - x * s * e1) * (w * hw);
      I0 += f;
      I1 += s * f;
    }
  }
  return {(e1 * I0).imag() / std::numbers::pi, (-e2 * I1).imag() / std::numbers::pi};
}

inline AiryPair airy_asymptotic(double x) {
  const double ax = std::abs(x);
  const double z = 2.0 / 3.0 * std::pow(ax, 1.5);
  std::vector<double> u{1.0}, v{1.0};
  for (int k = 1; k < 60; ++k) {
    const double uk = u.back() * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k);
    u.push_back(uk);
    v.push_back(-uk * (6.0 * k + 1.0) / (6.0 * k - 1.0));
  }
  const double spi = std::sqrt(std::numbers::pi);
  if (x > 0) {
    double su = 0.0, sv = 0.0, zk = 1.0, last = 1e300;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double tu = u[k] / zk;
      if (std::abs(tu) > last) break;
      last = std::abs(tu);
      const double sg = k % 2 ? -1.0 : 1.0;
      su += sg * tu;
      sv += sg * v[k] / zk;
      zk *= z;
    }
    const double e = std::exp(-z) / (2.0 * spi);
    return {e * su / std::pow(ax, 0.25), -e * sv * std::pow(ax, 0.25)};
  }
  double su_e = 0.0, su_o = 0.0, sv_e = 0.0, sv_o = 0.0, zk = 1.0, last = 1e300;
  for (std::size_t k = 0; k < u.size(); ++k) {
    const double tu = u[k] / zk;
    if (std::abs(tu) > last) break;
    last = std::abs(tu);
    const double sg = (k / 2) % 2 ? -1.0 : 1.0;
    if (k % 2 == 0) {
      su_e += sg * tu;
      sv_e += sg * v[k] / zk;
    } else {
      su_o += sg * tu;
      sv_o += sg * v[k] / zk;
    }
    zk *= z;
  }
  const double th = z + std::numbers::pi / 4.0;
  const double ai = (std::sin(th) * su_e - std::cos(th) * su_o) / (spi * std::pow(ax, 0.25));
  const double aip = -std::pow(ax, 0.25) * (std::cos(th) * sv_e + std::sin(th) * sv_o) / spi;
  return {ai, aip};
}

inline AiryPair airy(double x) { return std::abs(x) <= 8.0 ? airy_integral(x) : airy_asymptotic(x); }

}  // namespace detail

inline double airy_ai(double x) { return detail::airy(x).ai; }
inline double airy_ai_prime(double x) { return detail::airy(x).aip; }

inline double airy_kernel(double x, double y, const detail::AiryPair& ax, const detail::AiryPair& ay) {
  if (std::abs(x - y) < 1e-12) return ax.aip * ax.aip - x * ax.ai * ax.ai;
  return (ax.ai * ay.aip - ax.aip * ay.ai) / (x - y);
}

// Gauss–Legendre nodes and weights on [lo, hi].
inline std::vector<std::pair<double, double>> gauss_legendre(int n, double lo, double hi) {
  std::vector<std::pair<double, double>> r;
  for (int i = 1; i <= n; ++i) {
    double x = std::cos(std::numbers::pi * (i - 0.25) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    r.emplace_back(0.5 * (hi - lo) * x + 0.5 * (hi + lo), 0.5 * (hi - lo) * w);
  }
  return r;
}

// F_GUE(r) = det(1 - K_Ai) on (r, ∞) by Nyström on [r, max(r,0) + 16].
inline double tracy_widom_cdf(double r, int nodes = 96) {
  const double hi = std::max(r, 0.0) + 16.0;
  const auto gl = gauss_legendre(nodes, r, hi);
  std::vector<detail::AiryPair> ai(nodes);
  for (int i = 0; i < nodes; ++i) ai[i] = detail::airy(gl[i].first);
  Eigen::MatrixXd A(nodes, nodes);
  for (int i = 0; i < nodes; ++i)
    for (int j = 0; j < nodes; ++j) {
      const double k = airy_kernel(gl[i].first, gl[j].first, ai[i], ai[j]);
      A(i, j) = (i == j ? 1.0 : 0.0) - std::sqrt(gl[i].second) * k * std::sqrt(gl[j].second);
    }
  return std::clamp(A.determinant(), 0.0, 1.0);
}

// Tabulated F_GUE with linear interpolation, for repeated KS evaluation.
class TracyWidomTable {
 public:
  TracyWidomTable(double lo = -10.0, double hi = 8.0, int points = 721, int nodes = 96)
      : lo_(lo), hi_(hi), step_((hi - lo) / (points - 1)) {
    for (int i = 0; i < points; ++i) f_.push_back(tracy_widom_cdf(lo + i * step_, nodes));
  }
  double operator()(double r) const {
    if (r < lo_) return 0.0;
    if (r >= hi_) return 1.0;
    const double t = (r - lo_) / step_;
    const auto i = static_cast<std::size_t>(t);
    const double fr = t - static_cast<double>(i);
    return f_[i] * (1.0 - fr) + f_[std::min(i + 1, f_.size() - 1)] * fr;
  }

 private:
  double lo_, hi_, step_;
  std::vector<double> f_;
};

// x_N after T Bernoulli moves (β = -u) and N-1 geometric moves (α = q, unit rates
// past the first particle). Blocked particles behind the moving front are skipped.
class SpecialQTasep {
 public:
  explicit SpecialQTasep(const SchurSetup& s) : s_(s) {
    s.validate();
    require(s.a1 >= 1.0, "special q-TASEP asymptotics need a1 >= 1");
    poch_.push_back(1.0);
    qpow_.push_back(1.0);
  }

  long run(Rng& rng) {
    const int L = s_.N;
    x_.resize(L);
    for (int i = 0; i < L; ++i) x_[i] = -(i + 1);
    old_.resize(L);
    front_ = 1;
    const double beta = -s_.u;
    for (int t = 0; t < s_.T; ++t) bernoulli(beta, rng);
    for (int k = 1; k < s_.N; ++k) geometric(rng);
    return x_[L - 1];
  }

 private:
  double qpow(int g) {
    while (static_cast<int>(qpow_.size()) <= g) qpow_.push_back(qpow_.back() * s_.q);
    return qpow_[g];
  }
  // (q;q)_m
  double poch(int m) {
    while (static_cast<int>(poch_.size()) <= m) {
      const int k = static_cast<int>(poch_.size());
      poch_.push_back(poch_.back() * (1.0 - qpow(k)));
    }
    return poch_[m];
  }

  void bernoulli(double beta, Rng& rng) {
    const int L = static_cast<int>(x_.size());
    const double p1 = s_.a1 * beta / (1.0 + s_.a1 * beta);
    const double p = beta / (1.0 + beta);
    bool prev = rng.uniform() < p1;
    long prev_old = x_[0];
    if (prev) ++x_[0];
    for (int i = 1; i < L; ++i) {
      const long gap = prev_old - x_[i] - 1;
      if (i > front_ && !prev) break;
      const double pr = prev ? p : (1.0 - qpow(static_cast<int>(std::min<long>(gap, 4000)))) * p;
      prev_old = x_[i];
      prev = pr > 0.0 && rng.uniform() < pr;
      if (prev) {
        ++x_[i];
        front_ = std::max(front_, i + 1);
      }
    }
  }

  void geometric(Rng& rng) {
    const int L = static_cast<int>(x_.size());
    const int top = std::min(L, front_ + 1);
    for (int i = 0; i < top; ++i) old_[i] = x_[i];
    // First particle: p_{∞, a_1 q}.
    {
      const double eta = s_.a1 * s_.q;
      double cur = q_pochhammer_inf(eta, s_.q);
      double cum = cur;
      const double U = rng.uniform();
      int j = 0;
      while (U >= cum && cum < 1.0 - 1e-15) {
        cur *= eta / (1.0 - qpow(j + 1));
        cum += cur;
        ++j;
      }
      x_[0] += j;
    }
    for (int i = 1; i < top; ++i) {
      const long gap = old_[i - 1] - old_[i] - 1;
      if (gap == 0) continue;
      const int m = static_cast<int>(std::min<long>(gap, 4000));
      // p_{m,q}(j) = q^j (q;q)_m / (q;q)_j.
      double cur = poch(m);
      double cum = cur;
      const double U = rng.uniform();
      int j = 0;
      while (U >= cum && j < m) {
        cur *= s_.q / (1.0 - qpow(j + 1));
        cum += cur;
        ++j;
      }
      if (j > 0) {
        x_[i] += j;
        front_ = std::max(front_, i + 1);
      }
    }
  }

  SchurSetup s_;
  std::vector<long> x_, old_;
  int front_ = 1;
  std::vector<double> poch_, qpow_;
};

struct AsymptoticsRow {
  int M = 0;
  int replica = 0;
  double x_scaled = 0.0;
  double standardized = 0.0;
};

struct AsymptoticsSummary {
  int M = 0;
  double mean_scaled = 0.0;
  double mean_err = 0.0;
  double ks_stat = -1.0;
};

struct AsymptoticsReport {
  SchurSetup setup;
  double X_theory = 0.0;
  double sigma = 0.0;
  Regime regime = Regime::Curved;
  std::vector<AsymptoticsRow> rows;
  std::vector<AsymptoticsSummary> per_M;

  std::string to_csv() const {
    std::string s = "M,replica,x_scaled,standardized\n";
    char buf[128];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.12g,%.12g\n", r.M, r.replica, r.x_scaled, r.standardized);
      s += buf;
    }
    return s;
  }

  json summary_json() const {
    const auto& last = per_M.back();
    json per = json::array();
    for (const auto& m : per_M)
      per.push_back(json{{"M", m.M}, {"mean_scaled", m.mean_scaled}, {"mean_err", m.mean_err}, {"ks_stat", m.ks_stat}});
    return json{{"eta", setup.eta}, {"tau", setup.tau}, {"u", setup.u}, {"a1", setup.a1},
                {"X_theory", X_theory}, {"sigma", sigma}, {"mean_err", last.mean_err},
                {"ks_stat", last.ks_stat}, {"per_M", per}};
  }
};

// Replica k of size M uses stream (seed, M * 1000003 + k).
inline AsymptoticsReport asymptotics_experiment(const SchurSetup& base, const std::vector<int>& M_list,
                                                int replicas, std::uint64_t seed, bool with_ks = true) {
  require(replicas > 0 && !M_list.empty(), "asymptotics_experiment needs replicas and sizes");
  AsymptoticsReport rep;
  rep.setup = base;
  rep.X_theory = limit_shape(base.eta, base.tau, base.u);
  const CriticalData cd = critical_point(base.eta, base.tau, base.u);
  rep.sigma = cd.sigma;
  rep.regime = cd.regime;
  std::unique_ptr<TracyWidomTable> tw;
  if (with_ks && cd.regime == Regime::Curved) tw = std::make_unique<TracyWidomTable>();
  for (int M : M_list) {
    const SchurSetup s = SchurSetup::scaled(base.q, base.u, base.a1, base.eta, base.tau, M);
    SpecialQTasep sim(s);
    AsymptoticsSummary sm;
    sm.M = M;
    std::vector<double> ys;
    double sum = 0.0;
    for (int k = 0; k < replicas; ++k) {
      Rng rng(seed, static_cast<std::uint64_t>(M) * 1000003ull + k);
      const long x = sim.run(rng);
      AsymptoticsRow row;
      row.M = M;
      row.replica = k;
      row.x_scaled = static_cast<double>(x) / M;
      row.standardized = cd.sigma > 0.0 ? (x - M * rep.X_theory) / (cd.sigma * std::cbrt(static_cast<double>(M))) : 0.0;
      sum += row.x_scaled;
      ys.push_back(-row.standardized);
      rep.rows.push_back(row);
    }
    sm.mean_scaled = sum / replicas;
    sm.mean_err = std::abs(sm.mean_scaled - rep.X_theory);
    if (tw) sm.ks_stat = ks_distance(ys, [&](double r) { return (*tw)(r); });
    rep.per_M.push_back(sm);
  }
  return rep;
}

}  // namespace vertexlab
