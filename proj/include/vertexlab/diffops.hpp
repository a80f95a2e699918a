#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "vertexlab/core.hpp"
#include "vertexlab/vertex_model.hpp"

namespace vertexlab {

struct EvaluablePoint {
  std::vector<double> a;
  std::vector<double> nu;
};

using OperatorFunction = std::function<double(const EvaluablePoint&)>;

inline constexpr double kCollisionTol = 1e-9;

inline void check_a_distinct(const std::vector<double>& a, int N) {
  require(static_cast<int>(a.size()) >= N, "operator arity exceeds the a list");
  double scale = 0.0;
  for (int i = 0; i < N; ++i) scale = std::max(scale, std::abs(a[i]));
  for (int i = 0; i < N; ++i)
    for (int r = i + 1; r < N; ++r)
      require(std::abs(a[i] - a[r]) >= kCollisionTol * scale, "a collision: operator needs distinct a's");
}

// 𝒲_N f = Σ_r ∏_{i≠r} a_i/(a_i - a_r) f(a_r → q a_r).
inline double apply_W(const OperatorFunction& f, int N, const EvaluablePoint& base, double q) {
  check_q(q);
  check_a_distinct(base.a, N);
  double s = 0.0;
  EvaluablePoint pt = base;
  for (int r = 0; r < N; ++r) {
    double c = 1.0;
    for (int i = 0; i < N; ++i)
      if (i != r) c *= base.a[i] / (base.a[i] - base.a[r]);
    pt.a[r] = q * base.a[r];
    s += c * f(pt);
    pt.a[r] = base.a[r];
  }
  return s;
}

// Coefficient of the r-th shift in 𝒟_N at the point.
inline double d_coefficient(const EvaluablePoint& pt, int N, int r) {
  double c = 1.0 - pt.nu[r];
  for (int i = 0; i < N; ++i)
    if (i != r) c *= (pt.a[i] - pt.nu[i] * pt.a[r]) / (pt.a[i] - pt.a[r]);
  return c;
}

// 𝒟_N f = Σ_r (1-ν_r) ∏_{i≠r} (a_i - ν_i a_r)/(a_i - a_r) f(a_r → q a_r, ν_r → q ν_r).
inline double apply_D(const OperatorFunction& f, int N, const EvaluablePoint& base, double q) {
  check_q(q);
  check_a_distinct(base.a, N);
  require(static_cast<int>(base.nu.size()) >= N, "operator arity exceeds the nu list");
  double s = 0.0;
  EvaluablePoint pt = base;
  for (int r = 0; r < N; ++r) {
    pt.a[r] = q * base.a[r];
    pt.nu[r] = q * base.nu[r];
    s += d_coefficient(base, N, r) * f(pt);
    pt.a[r] = base.a[r];
    pt.nu[r] = base.nu[r];
  }
  return s;
}

// Macdonald operator 𝓜_N f = Σ_r ∏_{i≠r} (t a_r - a_i)/(a_r - a_i) f(a_r → q a_r).
inline double apply_M(const OperatorFunction& f, int N, const EvaluablePoint& base, double q,
                      double t) {
  check_q(q);
  check_a_distinct(base.a, N);
  double s = 0.0;
  EvaluablePoint pt = base;
  for (int r = 0; r < N; ++r) {
    double c = 1.0;
    for (int i = 0; i < N; ++i)
      if (i != r) c *= (t * base.a[r] - base.a[i]) / (base.a[r] - base.a[i]);
    pt.a[r] = q * base.a[r];
    s += c * f(pt);
    pt.a[r] = base.a[r];
  }
  return s;
}

// Φ_M = ∏_{i<=T} ∏_{j<=M} (1 - a_j u_i).
inline double phi_M(const EvaluablePoint& pt, const std::vector<double>& u, int M) {
  require(static_cast<int>(pt.a.size()) >= M, "phi_M: M exceeds the a list");
  double r = 1.0;
  for (double ui : u)
    for (int j = 0; j < M; ++j) r *= 1.0 - pt.a[j] * ui;
  return r;
}

// Π_N = ∏_{i,j<=N} 1/(a_i c_j; q)_∞.
inline double pi_N(const EvaluablePoint& pt, int N, double q) {
  require(static_cast<int>(pt.a.size()) >= N && static_cast<int>(pt.nu.size()) >= N, "pi_N: N too large");
  double r = 1.0;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) {
      const double z = pt.a[i] * pt.nu[j] / pt.a[j];
      require(z < 1.0, "pi_N diverges: a_i c_j >= 1");
      r /= q_pochhammer_inf(z, q);
    }
  return r;
}

namespace detail {

inline EvaluablePoint shifted(const EvaluablePoint& base, const std::vector<int>& s, double q,
                              bool shift_nu) {
  EvaluablePoint pt = base;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 0) continue;
    const double f = std::pow(q, s[i]);
    pt.a[i] *= f;
    if (shift_nu) pt.nu[i] *= f;
  }
  return pt;
}

// Applies a chain of first-order operators with memo keyed by the shift vector.
class ChainEvaluator {
 public:
  ChainEvaluator(const OperatorFunction& f, std::vector<int> N_list, const EvaluablePoint& base,
                 double q, bool conjugated)
      : f_(f), Ns_(std::move(N_list)), base_(base), q_(q), conj_(conjugated) {
    check_q(q);
    width_ = 0;
    for (int N : Ns_) {
      require(N >= 1, "operator arity must be >= 1");
      width_ = std::max(width_, N);
    }
    require(static_cast<int>(base.a.size()) >= width_, "operator arity exceeds the a list");
    if (conj_) require(static_cast<int>(base.nu.size()) >= width_, "operator arity exceeds the nu list");
  }

  double value() { return eval(static_cast<int>(Ns_.size()), std::vector<int>(width_, 0)); }
  std::size_t memo_size() const { return memo_.size(); }

 private:
  // Level k applies Ns_[k-1] on top of level k-1; level 0 is f.
  double eval(int k, const std::vector<int>& s) {
    auto key = std::make_pair(k, s);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    const EvaluablePoint pt = shifted(base_, s, q_, conj_);
    double v;
    if (k == 0) {
      v = f_(pt);
    } else {
      const int N = Ns_[k - 1];
      check_a_distinct(pt.a, N);
      v = 0.0;
      std::vector<int> s2 = s;
      for (int r = 0; r < N; ++r) {
        double c;
        if (conj_) {
          c = d_coefficient(pt, N, r);
        } else {
          c = 1.0;
          for (int i = 0; i < N; ++i)
            if (i != r) c *= pt.a[i] / (pt.a[i] - pt.a[r]);
        }
        ++s2[r];
        v += c * eval(k - 1, s2);
        --s2[r];
      }
    }
    memo_.emplace(std::move(key), v);
    return v;
  }

  const OperatorFunction& f_;
  std::vector<int> Ns_;
  EvaluablePoint base_;
  double q_;
  bool conj_;
  int width_ = 0;
  std::map<std::pair<int, std::vector<int>>, double> memo_;
};

}  // namespace detail

// 𝒟_{N_ℓ} ... 𝒟_{N_1} f; N_list[0] acts first.
inline double apply_D_chain(const OperatorFunction& f, const std::vector<int>& N_list,
                            const EvaluablePoint& base, double q) {
  detail::ChainEvaluator ev(f, N_list, base, q, true);
  return ev.value();
}

inline double apply_W_chain(const OperatorFunction& f, const std::vector<int>& N_list,
                            const EvaluablePoint& base, double q) {
  detail::ChainEvaluator ev(f, N_list, base, q, false);
  return ev.value();
}

inline EvaluablePoint point_of(const ModelParams& p) { return {p.a, p.nu}; }

inline ModelParams params_at(const ModelParams& p, const EvaluablePoint& pt) {
  ModelParams r = p;
  r.a = pt.a;
  r.nu = pt.nu;
  return r;
}

// 𝒟_{N_ℓ}...𝒟_{N_1} Φ_M / Φ_M at (a, ν).
inline double operator_expectation(const std::vector<int>& N_list, int T, int M,
                                   const ModelParams& p) {
  require(!N_list.empty(), "operator_expectation: empty N list");
  for (std::size_t j = 0; j + 1 < N_list.size(); ++j)
    require(N_list[j] >= N_list[j + 1], "N list must be weakly decreasing");
  require(M >= N_list.front(), "operator_expectation needs M >= N_1");
  require(static_cast<int>(p.u.size()) >= T, "not enough spectral parameters");
  const std::vector<double> u(p.u.begin(), p.u.begin() + T);
  for (int N : N_list) require(N >= 1, "operator route needs N_list entries >= 1");
  OperatorFunction phi = [&](const EvaluablePoint& pt) { return phi_M(pt, u, M); };
  const EvaluablePoint base = point_of(p);
  return apply_D_chain(phi, N_list, base, p.q) / phi_M(base, u, M);
}

// Σ_{ϰ_1 <= N} F̃^(M)_ϰ as an evaluable function of (a, ν).
inline OperatorFunction f_tilde_sum(const ModelParams& p, int N, int T, int M) {
  return [p, N, T, M](const EvaluablePoint& pt) {
    if (T == 0) return 1.0;
    const ModelParams pp = params_at(p, pt);
    double s = 0.0;
    for (const auto& k : partitions_in_box(T, N)) s += f_tilde(k, pp, T, M);
    return s;
  };
}

inline double nu_product(const std::vector<double>& nu, int N) {
  double b = 1.0;
  for (int i = 0; i < N; ++i) b *= nu[i];
  return b;
}

// Relative residual of 𝒟_N Σ F̃ = (1 - q^T ν_1..ν_N) Σ F̃.
inline double key_lemma_residual(const ModelParams& p, int N, int T, int M) {
  const OperatorFunction f = f_tilde_sum(p, N, T, M);
  const EvaluablePoint base = point_of(p);
  const double lhs = apply_D(f, N, base, p.q);
  const double rhs = (1.0 - std::pow(p.q, T) * nu_product(p.nu, N)) * f(base);
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
}

// Relative residual of the multilevel identity for N >= N_1 >= ... >= N_ℓ.
inline double multilevel_residual(const ModelParams& p, int N, const std::vector<int>& N_list,
                                  int T, int M) {
  const EvaluablePoint base = point_of(p);
  const double lhs = apply_D_chain(f_tilde_sum(p, N, T, M), N_list, base, p.q);
  const int ell = static_cast<int>(N_list.size());
  double rhs = 0.0;
  if (T == 0) {
    rhs = 1.0;
    for (int j = 0; j < ell; ++j) rhs *= 1.0 - std::pow(p.q, ell - (j + 1)) * nu_product(p.nu, N_list[j]);
  } else {
    for (const auto& k : partitions_in_box(T, N)) {
      double w = f_tilde(k, p, T, M);
      for (int j = 0; j < ell; ++j) {
        const int Nj = N_list[j];
        const int h = static_cast<int>(
            std::count_if(k.parts.begin(), k.parts.end(), [Nj](int x) { return x >= Nj + 1; }));
        w *= std::pow(p.q, h) - std::pow(p.q, T + ell - (j + 1)) * nu_product(p.nu, Nj);
      }
      rhs += w;
    }
  }
  return std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs));
}

// 𝒲^k Π / Π with Π = ∏_{i<=N} Π_W(a_i; ρ), i.e. E q^{k λ_N} under the q-Whittaker measure.
inline double qwhittaker_moment_operator(int k, int N, const Specialization& rho,
                                         const std::vector<double>& a, double q) {
  require(k >= 0 && N >= 1, "qwhittaker_moment_operator: bad k or N");
  if (k == 0) return 1.0;
  OperatorFunction pi = [&](const EvaluablePoint& pt) {
    double r = 1.0;
    for (int i = 0; i < N; ++i) r *= pi_w(pt.a[i], rho, q);
    return r;
  };
  const EvaluablePoint base{std::vector<double>(a.begin(), a.begin() + N), {}};
  return apply_W_chain(pi, std::vector<int>(k, N), base, q) / pi(base);
}

}  // namespace vertexlab
