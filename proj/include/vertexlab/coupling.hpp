#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "vertexlab/core.hpp"
#include "vertexlab/qtasep.hpp"
#include "vertexlab/rng.hpp"
#include "vertexlab/vertex_model.hpp"

namespace vertexlab {

struct CouplingInputs {
  // For m = 1 the previous particles sit at +∞ and x_prev, y_prev are ignored.
  bool first = false;
  long x_prev = 0;
  long y_prev = 0;
  long xp_m = 0;
  double a_m = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
};

// Law of y†_m on {xp_m, xp_m + 1}.
inline std::array<double, 2> y_dagger_law(const CouplingInputs& in, double q) {
  check_q(q);
  int i1 = kInfinity, j1 = 0;
  if (!in.first) {
    require(in.x_prev > in.xp_m, "coupling inputs need x_{m-1} > x'_m");
    const long d = in.y_prev - in.x_prev;
    require(d == 0 || d == 1, "coupling inputs need y_{m-1} - x_{m-1} in {0,1}");
    i1 = static_cast<int>(in.x_prev - in.xp_m - 1);
    j1 = static_cast<int>(d);
  }
  std::array<double, 2> law{0.0, 0.0};
  for (const auto& o : vertex_weight_row(-in.beta, in.a_m, in.alpha * in.a_m, q, i1, j1))
    law[o.j2] += o.weight;
  return law;
}

inline long sample_y_dagger(const CouplingInputs& in, double q, Rng& rng) {
  const auto law = y_dagger_law(in, q);
  return in.xp_m + (rng.uniform() < law[1] ? 1 : 0);
}

struct LocalParams {
  std::vector<double> a;
  double alpha = 0.3;
  double beta = 1.0;
  double q = 0.5;
};

struct CouplingReport {
  std::string check;
  std::string params_digest;
  double tv_distance = 0.0;
  double truncation_deficit = 0.0;
  bool pass = false;

  json to_json() const {
    return json{{"check", check},
                {"params_digest", params_digest},
                {"tv_distance", tv_distance},
                {"truncation_deficit", truncation_deficit},
                {"pass", pass}};
  }
};

template <class K>
double total_variation(const std::map<K, double>& A, const std::map<K, double>& B) {
  double s = 0.0;
  for (const auto& [k, v] : A) {
    auto it = B.find(k);
    s += std::abs(v - (it == B.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : B)
    if (!A.count(k)) s += std::abs(v);
  return 0.5 * s;
}

inline constexpr double kCouplingTail = 1e-12;

namespace detail {

inline std::string local_digest(const ParticleConfig& x, int m, const LocalParams& lp) {
  return digest_of(json{{"x", x}, {"m", m}, {"a", lp.a}, {"alpha", lp.alpha}, {"beta", lp.beta}, {"q", lp.q}});
}

inline void check_local(const ParticleConfig& x, int m, const LocalParams& lp) {
  require(m >= 1 && m <= static_cast<int>(x.size()), "coupling check needs 1 <= m <= L");
  check_rates(x, lp.a);
  check_q(lp.q);
}

}  // namespace detail

// (y_{m-1}, y†_m) against (y_{m-1}, y^{BG}_m).
inline CouplingReport joint_law_check_prop_A(const ParticleConfig& x, int m, const LocalParams& lp,
                                             double tol, double tail_tol = kCouplingTail) {
  detail::check_local(x, m, lp);
  const double q = lp.q;
  const long inf = std::numeric_limits<long>::max();
  double def_x = 0.0;
  const ConfigLaw ylaw = bernoulli_law(x, lp.a, lp.beta, q);
  const ConfigLaw xplaw = geometric_law(x, lp.a, lp.alpha, q, tail_tol, &def_x);

  std::map<long, double> xp_m;
  for (const auto& [xp, w] : xplaw) xp_m[xp[m - 1]] += w;
  std::map<long, double> y_prev;
  for (const auto& [y, w] : ylaw) y_prev[m == 1 ? inf : y[m - 2]] += w;

  std::map<std::pair<long, long>, double> lhs, rhs;
  for (const auto& [yp, wy] : y_prev)
    for (const auto& [xpm, wx] : xp_m) {
      CouplingInputs in{m == 1, m == 1 ? 0 : x[m - 2], yp, xpm, lp.a[m - 1], lp.alpha, lp.beta};
      const auto law = y_dagger_law(in, q);
      for (int s = 0; s < 2; ++s)
        if (law[s] != 0.0) lhs[{yp, xpm + s}] += wy * wx * law[s];
    }
  double def_y = 0.0;
  for (const auto& [y, wy] : ylaw) {
    double d = 0.0;
    const ConfigLaw g = geometric_law(y, lp.a, lp.alpha, q, tail_tol, &d);
    def_y += wy * d;
    for (const auto& [z, wz] : g) rhs[{m == 1 ? inf : y[m - 2], z[m - 1]}] += wy * wz;
  }
  CouplingReport r;
  r.check = "prop_A";
  r.params_digest = detail::local_digest(x, m, lp);
  r.tv_distance = total_variation(lhs, rhs);
  r.truncation_deficit = def_x + def_y;
  r.pass = r.tv_distance <= tol && r.truncation_deficit <= tol;
  return r;
}

// (x'_m, y†_m) against (x'_m, y^{GB}_m).
inline CouplingReport joint_law_check_prop_B(const ParticleConfig& x, int m, const LocalParams& lp,
                                             double tol, double tail_tol = kCouplingTail) {
  detail::check_local(x, m, lp);
  const double q = lp.q;
  double def_x = 0.0;
  const ConfigLaw ylaw = bernoulli_law(x, lp.a, lp.beta, q);
  const ConfigLaw xplaw = geometric_law(x, lp.a, lp.alpha, q, tail_tol, &def_x);

  std::map<long, double> y_prev;
  for (const auto& [y, w] : ylaw) y_prev[m == 1 ? 0 : y[m - 2]] += w;
  std::map<long, double> xp_m;
  for (const auto& [xp, w] : xplaw) xp_m[xp[m - 1]] += w;

  std::map<std::pair<long, long>, double> lhs, rhs;
  for (const auto& [xpm, wx] : xp_m)
    for (const auto& [yp, wy] : y_prev) {
      CouplingInputs in{m == 1, m == 1 ? 0 : x[m - 2], yp, xpm, lp.a[m - 1], lp.alpha, lp.beta};
      const auto law = y_dagger_law(in, q);
      for (int s = 0; s < 2; ++s)
        if (law[s] != 0.0) lhs[{xpm, xpm + s}] += wx * wy * law[s];
    }
  for (const auto& [xp, wx] : xplaw) {
    const ParticleConfig head(xp.begin(), xp.begin() + m);
    for (const auto& [z, wz] : bernoulli_law(head, lp.a, lp.beta, q))
      rhs[{xp[m - 1], z[m - 1]}] += wx * wz;
  }
  CouplingReport r;
  r.check = "prop_B";
  r.params_digest = detail::local_digest(x, m, lp);
  r.tv_distance = total_variation(lhs, rhs);
  r.truncation_deficit = def_x;
  r.pass = r.tv_distance <= tol && r.truncation_deficit <= tol;
  return r;
}

using PathLaw = std::map<std::vector<long>, double>;

// Exact joint law of 𝔥(N_t + r, T_t) along the path, boundary of order r.
inline PathLaw vertex_path_law(const TimeLikePath& path, const ModelParams& p, int r = 1) {
  path.validate();
  const Boundary b = r == 1 ? Boundary::step_bernoulli() : Boundary::gen_step_bernoulli(r);
  check_boundary(p, b);
  const int W = path.max_N() + r - 1;
  require(static_cast<int>(p.columns()) >= W, "not enough column parameters for the path");
  require(static_cast<int>(p.u.size()) >= path.max_T(), "not enough spectral parameters for the path");
  const double q = p.q;

  // State: column counts 1..W then the overflow count, followed by observations.
  using Key = std::pair<std::vector<int>, std::vector<long>>;
  std::map<Key, double> dist;
  dist[{std::vector<int>(W + 1, 0), {}}] = 1.0;
  std::size_t t = 0;
  auto observe = [&](int T) {
    std::map<Key, double> next;
    std::size_t t_end = t;
    while (t_end < path.points.size() && path.points[t_end].second == T) ++t_end;
    for (const auto& [key, w] : dist) {
      Key k2 = key;
      for (std::size_t s = t; s < t_end; ++s) {
        const int col = path.points[s].first + r;
        long h = key.first[W];
        for (int n = col - 1; n < W; ++n) h += key.first[n];
        k2.second.push_back(h);
      }
      next[k2] += w;
    }
    dist.swap(next);
    t = t_end;
  };
  observe(0);
  for (int T = 1; T <= path.max_T(); ++T) {
    const double u = p.u[T - 1];
    std::map<Key, double> next;
    for (const auto& [key, w] : dist) {
      std::vector<int> st = key.first;
      std::function<void(int, int, double)> rec = [&](int n, int j, double wt) {
        if (n == W) {
          if (j == 1) ++st[W];
          next[{st, key.second}] += wt;
          if (j == 1) --st[W];
          return;
        }
        const int g = st[n];
        for (const auto& o : vertex_weight_row(u, p.a[n], p.nu[n], q, g, j)) {
          if (o.weight == 0.0) continue;
          st[n] = o.i2;
          rec(n + 1, o.j2, wt * o.weight);
          st[n] = g;
        }
      };
      rec(0, 1, w);
    }
    dist.swap(next);
    observe(T);
  }
  PathLaw law;
  for (const auto& [key, w] : dist) law[key.second] += w;
  return law;
}

namespace detail {

// Particle offsets from the step configuration and the observations so far,
// eight bits each.
struct PackedState {
  std::uint64_t x = 0;
  std::uint64_t obs = 0;
  bool operator==(const PackedState& o) const { return x == o.x && obs == o.obs; }
};

struct PackedStateHash {
  std::size_t operator()(const PackedState& s) const {
    return static_cast<std::size_t>(mix64(s.x ^ mix64(s.obs + 0x9e3779b97f4a7c15ull)));
  }
};

inline long unpack_byte(std::uint64_t w, std::size_t i) { return static_cast<long>((w >> (8 * i)) & 0xff); }

inline std::uint64_t with_byte(std::uint64_t w, std::size_t i, long v) {
  require(v >= 0 && v < 256, "path law: coordinate outside the packed range");
  return (w & ~(0xffull << (8 * i))) | (static_cast<std::uint64_t>(v) << (8 * i));
}

}  // namespace detail

// Joint law of x_{N_t+r-1} + N_t + r - 1 along the path, exact up to the
// reported deficit.
inline PathLaw qtasep_path_law(const TimeLikePath& path, const ModelParams& p, int r,
                               double tail_tol, double* deficit) {
  path.validate();
  const int L = path.max_N() + r - 1;
  require(static_cast<int>(p.a.size()) >= L, "not enough particle rates for the path");
  require(L <= 8 && path.points.size() <= 8, "path law supports at most 8 particles and 8 points");
  const ParticleConfig x0 = step_config(L);
  // Particle 1 moves on its own: its exact marginal fixes a coordinate cap
  // beyond which at most tail_tol of mass lies. Mass past the cap is dropped.
  std::vector<double> lead{1.0};
  for (std::size_t t = 0; t + 1 < path.points.size(); ++t) {
    const Move mv = path_move(path, t, p, r);
    std::vector<double> jump;
    if (mv.kind == MoveKind::Bernoulli) {
      const double b = bernoulli_jump_prob(p.a[0], mv.param, p.q, kInfinity, false);
      jump = {1.0 - b, b};
    } else {
      jump = jump_pmf(kInfinity, p.a[0] * mv.param, p.q, std::max(1e-14, 1e-3 * tail_tol));
    }
    std::vector<double> nl(lead.size() + jump.size() - 1, 0.0);
    for (std::size_t i = 0; i < lead.size(); ++i)
      for (std::size_t j = 0; j < jump.size(); ++j) nl[i + j] += lead[i] * jump[j];
    lead.swap(nl);
  }
  long cap = x0[0] + static_cast<long>(lead.size()) - 1;
  for (double tail = 0.0; cap > x0[0] && tail + lead[cap - x0[0]] <= tail_tol; --cap)
    tail += lead[cap - x0[0]];

  // x_k + k is the offset of particle k from x0.
  auto observed = [&](std::size_t t) { return static_cast<std::size_t>(path.points[t].first + r - 2); };
  using Dist = std::unordered_map<detail::PackedState, double, detail::PackedStateHash>;
  Dist dist;
  dist[{0, 0}] = 1.0;
  double lost = 0.0;
  ParticleConfig x(L), y(L);
  for (std::size_t t = 0; t + 1 < path.points.size(); ++t) {
    const Move mv = path_move(path, t, p, r);
    const std::size_t k = observed(t + 1);
    Dist next;
    next.reserve(dist.size() * 2);
    for (const auto& [key, w] : dist) {
      for (int i = 0; i < L; ++i) x[i] = x0[i] + detail::unpack_byte(key.x, i);
      y = x;
      auto emit = [&](double wy) {
        if (y[0] > cap) {
          lost += w * wy;
          return;
        }
        std::uint64_t px = 0;
        for (int i = 0; i < L; ++i) px = detail::with_byte(px, i, y[i] - x0[i]);
        next[{px, detail::with_byte(key.obs, t + 1, y[k] - x0[k])}] += w * wy;
      };
      if (mv.kind == MoveKind::Bernoulli) {
        std::function<void(int, bool, double)> rec = [&](int i, bool prev, double wy) {
          if (i == L) return emit(wy);
          const double pj = bernoulli_jump_prob(p.a[i], mv.param, p.q, gap_of(x, i), prev);
          if (pj > 0.0) {
            y[i] = x[i] + 1;
            rec(i + 1, true, wy * pj);
          }
          if (pj < 1.0) {
            y[i] = x[i];
            rec(i + 1, false, wy * (1.0 - pj));
          }
          y[i] = x[i];
        };
        rec(0, false, 1.0);
      } else {
        double d = 0.0;
        const auto jumps = geometric_jumps(x, p.a, mv.param, p.q, tail_tol, &d, &cap);
        lost += w * d;
        std::function<void(int, double)> rec = [&](int i, double wy) {
          if (i == L) return emit(wy);
          for (std::size_t j = 0; j < jumps[i].size(); ++j) {
            y[i] = x[i] + static_cast<long>(j);
            rec(i + 1, wy * jumps[i][j]);
          }
          y[i] = x[i];
        };
        rec(0, 1.0);
      }
    }
    dist.swap(next);
  }
  if (deficit) *deficit = lost;
  PathLaw law;
  for (const auto& [key, w] : dist) {
    std::vector<long> h;
    for (std::size_t t = 0; t < path.points.size(); ++t) h.push_back(detail::unpack_byte(key.obs, t));
    law[h] += w;
  }
  return law;
}

inline CouplingReport theorem_coupling_check(const TimeLikePath& path, const ModelParams& p, int r,
                                             double tol, double tail_tol = kCouplingTail) {
  double deficit = 0.0;
  const PathLaw v = vertex_path_law(path, p, r);
  const PathLaw x = qtasep_path_law(path, p, r, tail_tol, &deficit);
  CouplingReport rep;
  rep.check = "theorem_coupling:" + path.word() + (r > 1 ? ":r=" + std::to_string(r) : "");
  rep.params_digest = params_digest(p);
  rep.tv_distance = total_variation(v, x);
  rep.truncation_deficit = deficit;
  rep.pass = rep.tv_distance <= tol && deficit <= tol;
  return rep;
}

}  // namespace vertexlab
