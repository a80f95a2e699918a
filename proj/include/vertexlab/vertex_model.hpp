#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "vertexlab/core.hpp"
#include "vertexlab/rng.hpp"

namespace vertexlab {

struct VertexOutcome {
  int i1 = 0, j1 = 0, i2 = 0, j2 = 0;
  double weight = 0.0;
};

// Stochastic weights L_{u,a,ν}(i1,j1; i2,j2). i1 may be kInfinity (q^g = 0).
inline std::vector<VertexOutcome> vertex_weight_row(double u, double a, double nu, double q, int i1,
                                                    int j1) {
  check_q(q);
  require(i1 >= 0, "vertex_weight_row: negative vertical count");
  require(j1 == 0 || j1 == 1, "vertex_weight_row: horizontal count must be 0 or 1");
  const bool inf = i1 == kInfinity;
  const double qg = inf ? 0.0 : std::pow(q, i1);
  const double au = a * u;
  const double den = 1.0 - au;
  std::vector<VertexOutcome> out;
  if (j1 == 0) {
    if (i1 == 0) return {{0, 0, 0, 0, 1.0}};
    out.push_back({i1, 0, i1, 0, (1.0 - au * qg) / den});
    out.push_back({i1, 0, inf ? kInfinity : i1 - 1, 1, -au * (1.0 - qg) / den});
  } else {
    out.push_back({i1, 1, i1, 1, (nu * qg - au) / den});
    out.push_back({i1, 1, inf ? kInfinity : i1 + 1, 0, (1.0 - nu * qg) / den});
  }
  for (const auto& o : out)
    require(o.weight >= -1e-15 && std::isfinite(o.weight),
            "negative vertex weight: parameters outside the stochastic regime");
  return out;
}

enum class BoundaryKind { Step, StepBernoulli, GenStepBernoulli };

struct Boundary {
  BoundaryKind kind = BoundaryKind::Step;
  int r = 1;

  static Boundary step() { return {BoundaryKind::Step, 1}; }
  static Boundary step_bernoulli() { return {BoundaryKind::StepBernoulli, 1}; }
  static Boundary gen_step_bernoulli(int r) { return {BoundaryKind::GenStepBernoulli, r}; }

  // Column offset of the first tracked observable: 𝔥(N + shift, T).
  int shift() const { return kind == BoundaryKind::Step ? 1 : r; }

  std::string name() const {
    switch (kind) {
      case BoundaryKind::Step: return "step";
      case BoundaryKind::StepBernoulli: return "step-bernoulli";
      case BoundaryKind::GenStepBernoulli: return "gen-step-bernoulli:" + std::to_string(r);
    }
    return "";
  }

  static Boundary parse(const std::string& s) {
    if (s == "step") return step();
    if (s == "step-bernoulli" || s == "bernoulli") return step_bernoulli();
    const std::string pre = "gen-step-bernoulli:";
    if (s.rfind(pre, 0) == 0) return gen_step_bernoulli(std::stoi(s.substr(pre.size())));
    throw ParameterError("unknown boundary '" + s + "'");
  }
};

inline void check_boundary(const ModelParams& p, Boundary b) {
  if (b.kind == BoundaryKind::StepBernoulli) {
    require(!p.nu.empty() && p.nu[0] == 0.0, "step-Bernoulli boundary needs nu_1 = 0");
  } else if (b.kind == BoundaryKind::GenStepBernoulli) {
    require(b.r >= 1, "generalized boundary needs r >= 1");
    require(static_cast<int>(p.nu.size()) >= b.r, "generalized boundary: nu list too short");
    for (int i = 1; i < b.r; ++i)
      require(p.nu[i] == 0.0, "generalized step-Bernoulli boundary needs nu_2..nu_r = 0");
  }
}

struct HeightField {
  int N_max = 0;
  int T_max = 0;
  // values[T * (N_max + 1) + (N - 1)] = 𝔥(N,T), 1 <= N <= N_max + 1.
  std::vector<int> values;
  // Union bound on the chance that some path ran across the whole window.
  double exit_bound = 0.0;

  int operator()(int N, int T) const {
    require(N >= 1 && N <= N_max + 1 && T >= 0 && T <= T_max, "height outside window");
    return values[static_cast<std::size_t>(T) * (N_max + 1) + (N - 1)];
  }

  std::string to_csv() const {
    std::ostringstream os;
    os << "N,T,h\n";
    for (int T = 0; T <= T_max; ++T)
      for (int N = 1; N <= N_max + 1; ++N) os << N << ',' << T << ',' << (*this)(N, T) << '\n';
    return os.str();
  }

  json to_json() const {
    return json{{"N_max", N_max}, {"T_max", T_max}, {"h", values}, {"exit_bound", exit_bound}};
  }
};

// Row-by-row sampler of the quadrant. Vertices are sampled left to right in
// each row, a linear extension of the anti-diagonal order.
class QuadrantSampler {
 public:
  QuadrantSampler(const ModelParams& p, Boundary b, int N_max)
      : p_(p), b_(b), W_(N_max), counts_(N_max, 0) {
    check_q(p.q);
    require(N_max >= 1, "sampler window needs N_max >= 1");
    require(static_cast<int>(p.columns()) >= N_max, "sampler window exceeds column parameters");
    check_boundary(p, b);
    for (int n = 0; n < W_; ++n) {
      require(p.a[n] > 0.0 && p.nu[n] >= 0.0 && p.nu[n] < 1.0, "column parameters out of range");
    }
  }

  void reset() {
    std::fill(counts_.begin(), counts_.end(), 0);
    overflow_ = 0;
    row_ = 0;
  }

  int row() const { return row_; }
  int window() const { return W_; }
  const std::vector<int>& counts() const { return counts_; }
  int overflow() const { return overflow_; }

  // 𝔥(N, current row), 1 <= N <= N_max + 1.
  int height(int N) const {
    int h = overflow_;
    for (int n = N - 1; n < W_; ++n) h += counts_[n];
    return h;
  }

  // Probability bound that the path of the next row crosses the window.
  double row_exit_bound() const {
    const double u = p_.u.at(row_);
    double b = 1.0;
    for (int n = 0; n < W_; ++n) b *= (p_.nu[n] - p_.a[n] * u) / (1.0 - p_.a[n] * u);
    return b;
  }

  void advance_row(Rng& rng) {
    require(row_ < static_cast<int>(p_.u.size()), "sampler ran out of spectral parameters");
    const double u = p_.u[row_];
    require(u < 0.0, "spectral parameters must be negative");
    const double q = p_.q;
    int j = 1;
    for (int n = 0; n < W_; ++n) {
      const int g = counts_[n];
      if (g == 0 && j == 0) continue;
      const double au = p_.a[n] * u;
      const double qg = g == 0 ? 1.0 : std::pow(q, g);
      const double U = rng.uniform();
      if (j == 0) {
        // Stay with (1 - au q^g)/(1 - au), else turn right.
        if (U >= (1.0 - au * qg) / (1.0 - au)) {
          counts_[n] = g - 1;
          j = 1;
        }
      } else {
        // Continue right with (ν q^g - au)/(1 - au), else turn up.
        if (U >= (p_.nu[n] * qg - au) / (1.0 - au)) {
          counts_[n] = g + 1;
          j = 0;
        }
      }
    }
    if (j == 1) ++overflow_;
    ++row_;
  }

 private:
  ModelParams p_;
  Boundary b_;
  int W_;
  std::vector<int> counts_;
  int overflow_ = 0;
  int row_ = 0;
};

inline HeightField sample_quadrant(const ModelParams& p, Boundary b, int N_max, int T_max,
                                   Rng& rng) {
  require(T_max >= 0, "negative T_max");
  require(static_cast<int>(p.u.size()) >= T_max, "window exceeds spectral parameter list");
  QuadrantSampler s(p, b, N_max);
  HeightField hf;
  hf.N_max = N_max;
  hf.T_max = T_max;
  hf.values.assign(static_cast<std::size_t>(T_max + 1) * (N_max + 1), 0);
  for (int T = 0; T <= T_max; ++T) {
    if (T > 0) {
      hf.exit_bound += s.row_exit_bound();
      s.advance_row(rng);
    }
    for (int N = 1; N <= N_max + 1; ++N)
      hf.values[static_cast<std::size_t>(T) * (N_max + 1) + (N - 1)] = s.height(N);
  }
  return hf;
}

inline void check_u_distinct(const std::vector<double>& u, std::size_t T, double q,
                             bool check_q_ratio) {
  double scale = 0.0;
  for (std::size_t i = 0; i < T; ++i) scale = std::max(scale, std::abs(u[i]));
  const double tol = 1e-9 * std::max(scale, 1e-300);
  for (std::size_t i = 0; i < T; ++i)
    for (std::size_t j = 0; j < T; ++j) {
      if (i == j) continue;
      require(std::abs(u[i] - u[j]) > tol, "u collision: repeated spectral parameters");
      if (check_q_ratio)
        require(std::abs(u[i] - q * u[j]) > tol, "u collision: u_i = q u_j");
    }
}

namespace detail {

// Symmetrized sum; when clear_to > 0 the factor Φ_M is folded in per term.
inline double f_stoch_impl(const Partition& kappa, const ModelParams& p, int T, int clear_to) {
  require(T >= 1, "f_stoch needs T >= 1");
  require(static_cast<int>(kappa.parts.size()) == T, "kappa must have exactly T parts");
  require(static_cast<int>(p.u.size()) >= T, "not enough spectral parameters");
  for (int x : kappa.parts) require(x >= 1, "kappa parts must be >= 1");
  const int top = std::max(kappa.parts.front(), clear_to);
  require(static_cast<int>(p.columns()) >= top, "not enough column parameters");
  check_u_distinct(p.u, T, p.q, false);
  const double q = p.q;

  double pre = 1.0;
  for (auto [r, k] : kappa.multiplicities())
    pre *= q_pochhammer(p.nu[r - 1], q, k) / q_pochhammer(q, q, k);

  std::vector<int> perm(T);
  std::iota(perm.begin(), perm.end(), 0);
  double sum = 0.0;
  do {
    double t = 1.0;
    for (int al = 0; al < T; ++al)
      for (int be = al + 1; be < T; ++be) {
        const double ua = p.u[perm[al]], ub = p.u[perm[be]];
        t *= (ua - q * ub) / (ua - ub);
      }
    for (int i = 0; i < T; ++i) {
      const double ui = p.u[perm[i]];
      const int k = kappa.parts[i];
      t *= 1.0 - q;
      for (int j = 0; j + 1 < k; ++j) t *= p.nu[j] - p.a[j] * ui;
      if (clear_to > 0) {
        for (int j = k; j < clear_to; ++j) t *= 1.0 - p.a[j] * ui;
      } else {
        for (int j = 0; j < k; ++j) t /= 1.0 - p.a[j] * ui;
      }
    }
    sum += t;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return pre * sum;
}

}  // namespace detail

// P(μ^(T) = ϰ) under the step boundary.
inline double f_stoch(const Partition& kappa, const ModelParams& p, int T) {
  return detail::f_stoch_impl(kappa, p, T, 0);
}

// Φ_M(u_1..u_T) f_stoch(ϰ), with denominators cleared term by term.
inline double f_tilde(const Partition& kappa, const ModelParams& p, int T, int M) {
  require(M >= kappa[0], "f_tilde needs M >= kappa_1");
  return detail::f_stoch_impl(kappa, p, T, M);
}

// All partitions with exactly T parts in [1, max_part].
inline std::vector<Partition> partitions_in_box(int T, int max_part) {
  std::vector<Partition> out;
  if (T < 0 || max_part < 1) return out;
  std::vector<int> cur(T, 1);
  while (true) {
    std::vector<int> parts(cur.rbegin(), cur.rend());
    out.emplace_back(parts);
    // cur is weakly increasing; advance like a multiset odometer.
    int i = T - 1;
    while (i >= 0 && cur[i] == max_part) --i;
    if (i < 0) break;
    const int v = cur[i] + 1;
    for (int k = i; k < T; ++k) cur[k] = v;
  }
  return out;
}

// Parameters with column N+1 replaced by a = ν = 0, so paths reaching it stop.
inline ModelParams absorbing_at(const ModelParams& p, int N) {
  ModelParams r = p;
  r.a.resize(N + 1);
  r.nu.resize(N + 1);
  r.a[N] = 0.0;
  r.nu[N] = 0.0;
  return r;
}

// Exact joint law of (𝔥(N_1+1,T), ..., 𝔥(N_k+1,T)) under the step boundary.
inline std::map<std::vector<int>, double> joint_height_law(const std::vector<int>& N_list, int T,
                                                           const ModelParams& p) {
  require(!N_list.empty(), "joint_height_law: empty N list");
  if (T == 0) return {{std::vector<int>(N_list.size(), 0), 1.0}};
  const int Nmax = *std::max_element(N_list.begin(), N_list.end());
  require(*std::min_element(N_list.begin(), N_list.end()) >= 0, "negative N");
  std::map<std::vector<int>, double> law;
  if (Nmax == 0) {
    law[std::vector<int>(N_list.size(), T)] = 1.0;
    return law;
  }
  const ModelParams pa = absorbing_at(p, Nmax);
  for (const auto& k : partitions_in_box(T, Nmax + 1)) {
    const double w = f_stoch(k, pa, T);
    std::vector<int> key;
    for (int N : N_list)
      key.push_back(static_cast<int>(
          std::count_if(k.parts.begin(), k.parts.end(), [N](int x) { return x >= N + 1; })));
    law[key] += w;
  }
  return law;
}

inline std::vector<double> height_law_exact(int N, int T, const ModelParams& p) {
  std::vector<double> pmf(T + 1, 0.0);
  for (const auto& [k, w] : joint_height_law({N}, T, p)) pmf[k[0]] += w;
  return pmf;
}

// Σ_{ϰ_1 <= N+1} f_stoch with column N+1 absorbing; equals 1.
inline double sum_to_one_residual(int N, int T, const ModelParams& p) {
  const ModelParams pa = absorbing_at(p, N);
  double s = 0.0;
  for (const auto& k : partitions_in_box(T, N + 1)) s += f_stoch(k, pa, T);
  return std::abs(s - 1.0);
}

}  // namespace vertexlab
