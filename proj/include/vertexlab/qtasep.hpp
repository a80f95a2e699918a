#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "vertexlab/core.hpp"
#include "vertexlab/rng.hpp"

namespace vertexlab {

// x_1 > x_2 > ... > x_L; the virtual x_0 is +∞.
using ParticleConfig = std::vector<long>;

inline ParticleConfig step_config(int L) {
  ParticleConfig x(L);
  for (int i = 0; i < L; ++i) x[i] = -(i + 1);
  return x;
}

inline bool strictly_decreasing(const ParticleConfig& x) {
  for (std::size_t i = 0; i + 1 < x.size(); ++i)
    if (x[i] <= x[i + 1]) return false;
  return true;
}

// Gap in front of particle i (zero-based); kInfinity for the first particle.
inline int gap_of(const ParticleConfig& x, std::size_t i) {
  return i == 0 ? kInfinity : static_cast<int>(x[i - 1] - x[i] - 1);
}

// p_{m,α}(j) = α^j (α;q)_{m-j} (q;q)_m / ((q;q)_j (q;q)_{m-j}).
inline double q_geom_pmf(int m, double alpha, double q, int j) {
  check_q(q);
  require(j >= 0 && (m == kInfinity || (m >= 0 && j <= m)), "q_geom_pmf: j outside [0, m]");
  if (m == kInfinity)
    return std::pow(alpha, j) * q_pochhammer_inf(alpha, q) / q_pochhammer(q, q, j);
  return std::pow(alpha, j) * q_pochhammer(alpha, q, m - j) * q_pochhammer(q, q, m) /
         (q_pochhammer(q, q, j) * q_pochhammer(q, q, m - j));
}

// φ_{q,η,ζ}(j|ℓ), the q-Hahn (q-deformed Beta-binomial) weights.
inline double q_hahn_pmf(double eta, double zeta, double q, int ell, int j) {
  check_q(q);
  require(j >= 0 && (ell == kInfinity || (ell >= 0 && j <= ell)), "q_hahn_pmf: j outside [0, ell]");
  if (eta == 0.0) {
    require(zeta == 0.0, "q_hahn_pmf: eta = 0 needs zeta = 0");
    return j == 0 ? 1.0 : 0.0;
  }
  const double head = std::pow(eta, j) * q_pochhammer(zeta / eta, q, j) / q_pochhammer(q, q, j);
  double w;
  if (ell == kInfinity) {
    w = head * q_pochhammer_inf(eta, q) / q_pochhammer_inf(zeta, q);
  } else {
    w = head * q_pochhammer(eta, q, ell - j) * q_pochhammer(q, q, ell) /
        (q_pochhammer(zeta, q, ell) * q_pochhammer(q, q, ell - j));
  }
  require(w >= -1e-14, "q_hahn_pmf: negative weight for these parameters");
  return w;
}

// Jump pmf p_{m,η} listed from j = 0 until the support ends or the
// cumulative mass reaches 1 - tail_tol. The returned deficit is the cut mass.
inline std::vector<double> jump_pmf(int m, double eta, double q, double tail_tol,
                                    double* deficit = nullptr) {
  std::vector<double> p;
  double cur = m == kInfinity ? q_pochhammer_inf(eta, q) : q_pochhammer(eta, q, m);
  double cum = 0.0;
  for (int j = 0;; ++j) {
    p.push_back(cur);
    cum += cur;
    if (m != kInfinity && j == m) break;
    if (m == kInfinity && cum >= 1.0 - tail_tol) break;
    if (m == kInfinity) {
      cur *= eta / (1.0 - std::pow(q, j + 1));
    } else {
      const double qr = std::pow(q, m - j);
      cur *= eta * (1.0 - qr) / ((1.0 - eta * qr / q) * (1.0 - std::pow(q, j + 1)));
    }
    require(j < 100000, "jump_pmf: tail did not converge");
  }
  if (deficit) *deficit = std::max(0.0, 1.0 - cum);
  return p;
}

inline constexpr double kSampleTailCut = 1e-14;

inline int sample_q_geom(int m, double eta, double q, Rng& rng) {
  if (m == 0 || eta == 0.0) return 0;
  double cur = m == kInfinity ? q_pochhammer_inf(eta, q) : q_pochhammer(eta, q, m);
  const double U = rng.uniform();
  double cum = cur;
  int j = 0;
  while (U >= cum) {
    if (m != kInfinity && j == m) break;
    if (m == kInfinity && cum >= 1.0 - kSampleTailCut) break;
    if (m == kInfinity) {
      cur *= eta / (1.0 - std::pow(q, j + 1));
    } else {
      const double qr = std::pow(q, m - j);
      cur *= eta * (1.0 - qr) / ((1.0 - eta * qr / q) * (1.0 - std::pow(q, j + 1)));
    }
    ++j;
    cum += cur;
  }
  return j;
}

inline void check_rates(const ParticleConfig& x, const std::vector<double>& a) {
  require(a.size() >= x.size(), "particle rate list shorter than configuration");
  require(strictly_decreasing(x), "configuration must be strictly decreasing");
}

// Parallel update: every particle jumps by p_{gap, a_i α} using pre-move gaps.
inline ParticleConfig geometric_move(const ParticleConfig& x, const std::vector<double>& a,
                                     double alpha, double q, Rng& rng) {
  check_q(q);
  check_rates(x, a);
  ParticleConfig y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double eta = a[i] * alpha;
    require(eta >= 0.0 && eta < 1.0, "geometric move needs 0 <= a_i alpha < 1");
    y[i] = x[i] + sample_q_geom(gap_of(x, i), eta, q, rng);
  }
  require(strictly_decreasing(y), "geometric move broke ordering");
  return y;
}

inline double bernoulli_jump_prob(double a, double beta, double q, int gap, bool prev_jumped) {
  const double base = a * beta / (1.0 + a * beta);
  if (gap == kInfinity || prev_jumped) return base;
  return (1.0 - std::pow(q, gap)) * base;
}

// Sequential update from the right with pre-move gaps.
inline ParticleConfig bernoulli_move(const ParticleConfig& x, const std::vector<double>& a,
                                     double beta, double q, Rng& rng) {
  check_q(q);
  check_rates(x, a);
  require(beta >= 0.0, "Bernoulli move needs beta >= 0");
  ParticleConfig y = x;
  bool prev = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    prev = rng.uniform() < bernoulli_jump_prob(a[i], beta, q, gap_of(x, i), prev);
    if (prev) ++y[i];
  }
  require(strictly_decreasing(y), "Bernoulli move broke ordering");
  return y;
}

using ConfigLaw = std::map<ParticleConfig, double>;

// One-step law of the geometric move, exact up to the reported deficit. The
// first particle's unbounded jump is cut at tail_tol, or at the coordinate cap
// if given; each particle also sheds an upper tail of mass <= tail_tol / L.
inline std::vector<std::vector<double>> geometric_jumps(const ParticleConfig& x,
                                                       const std::vector<double>& a, double alpha,
                                                       double q, double tail_tol,
                                                       double* deficit = nullptr,
                                                       const long* cap = nullptr) {
  check_rates(x, a);
  std::vector<std::vector<double>> jumps(x.size());
  double lost = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = 0.0;
    int m = gap_of(x, i);
    if (i == 0 && cap) m = static_cast<int>(std::max(0L, *cap - x[0]));
    const double eta = a[i] * alpha;
    require(eta >= 0.0 && eta < 1.0, "geometric move needs 0 <= a_i alpha < 1");
    if (i == 0 && cap) {
      // Infinite-gap pmf listed only up to the cap.
      std::vector<double> p;
      double cur = q_pochhammer_inf(eta, q), cum = 0.0;
      for (int j = 0; j <= m; ++j) {
        p.push_back(cur);
        cum += cur;
        cur *= eta / (1.0 - std::pow(q, j + 1));
      }
      d = std::max(0.0, 1.0 - cum);
      jumps[i] = std::move(p);
    } else {
      jumps[i] = jump_pmf(m, eta, q, tail_tol, &d);
    }
    // Drop a negligible upper tail; its mass joins the deficit.
    const double budget = tail_tol / static_cast<double>(x.size());
    for (double tail = 0.0; jumps[i].size() > 1 && tail + jumps[i].back() <= budget;) {
      tail += jumps[i].back();
      d += jumps[i].back();
      jumps[i].pop_back();
    }
    lost += d;
  }
  if (deficit) *deficit = lost;
  return jumps;
}

inline ConfigLaw geometric_law(const ParticleConfig& x, const std::vector<double>& a,
                               double alpha, double q, double tail_tol, double* deficit = nullptr,
                               const long* cap = nullptr) {
  const auto jumps = geometric_jumps(x, a, alpha, q, tail_tol, deficit, cap);
  ConfigLaw law;
  ParticleConfig y = x;
  std::function<void(std::size_t, double)> rec = [&](std::size_t i, double w) {
    if (i == x.size()) {
      law[y] += w;
      return;
    }
    for (std::size_t j = 0; j < jumps[i].size(); ++j) {
      y[i] = x[i] + static_cast<long>(j);
      rec(i + 1, w * jumps[i][j]);
    }
    y[i] = x[i];
  };
  rec(0, 1.0);
  return law;
}

inline ConfigLaw bernoulli_law(const ParticleConfig& x, const std::vector<double>& a, double beta,
                               double q) {
  check_rates(x, a);
  ConfigLaw law;
  ParticleConfig y = x;
  std::function<void(std::size_t, bool, double)> rec = [&](std::size_t i, bool prev, double w) {
    if (i == x.size()) {
      law[y] += w;
      return;
    }
    const double p = bernoulli_jump_prob(a[i], beta, q, gap_of(x, i), prev);
    if (p > 0.0) {
      y[i] = x[i] + 1;
      rec(i + 1, true, w * p);
    }
    if (p < 1.0) {
      y[i] = x[i];
      rec(i + 1, false, w * (1.0 - p));
    }
    y[i] = x[i];
  };
  rec(0, false, 1.0);
  return law;
}

enum class MoveKind { Geometric, Bernoulli };

struct Move {
  MoveKind kind = MoveKind::Geometric;
  double param = 0.0;

  static Move geom(double alpha) { return {MoveKind::Geometric, alpha}; }
  static Move ber(double beta) { return {MoveKind::Bernoulli, beta}; }

  std::string label() const {
    std::ostringstream os;
    os.precision(17);
    os << (kind == MoveKind::Geometric ? "GEOM(" : "BER(") << param << ')';
    return os.str();
  }
};

inline ConfigLaw move_law(const Move& mv, const ParticleConfig& x, const std::vector<double>& a,
                          double q, double tail_tol, double* deficit = nullptr) {
  if (mv.kind == MoveKind::Bernoulli) {
    if (deficit) *deficit = 0.0;
    return bernoulli_law(x, a, mv.param, q);
  }
  return geometric_law(x, a, mv.param, q, tail_tol, deficit);
}

struct Box {
  long lo = -5;
  long hi = 5;
};

// All strictly decreasing L-tuples in [lo, hi], lexicographic in (x_1, ..., x_L).
inline std::vector<ParticleConfig> configs_in_box(int L, Box box) {
  std::vector<ParticleConfig> out;
  ParticleConfig cur(L);
  std::function<void(int, long)> rec = [&](int i, long upper) {
    if (i == L) {
      out.push_back(cur);
      return;
    }
    for (long v = box.lo + (L - 1 - i); v <= upper; ++v) {
      cur[i] = v;
      rec(i + 1, v - 1);
    }
  };
  rec(0, box.hi);
  return out;
}

struct TransitionMatrix {
  std::vector<ParticleConfig> states;
  Eigen::MatrixXd P;
  // Mass per row that leaves the box.
  std::vector<double> exit_mass;
  double max_tail_deficit = 0.0;

  int index(const ParticleConfig& x) const {
    auto it = std::lower_bound(states.begin(), states.end(), x);
    return (it != states.end() && *it == x) ? static_cast<int>(it - states.begin()) : -1;
  }
};

// Substochastic matrix of one move restricted to the box. Moves only go right,
// so products of truncated matrices equal truncations of products.
inline TransitionMatrix transition_matrix(const Move& mv, const std::vector<double>& a, int L,
                                          Box box, double tail_tol, double q) {
  check_q(q);
  require(L >= 1 && box.hi - box.lo + 1 >= L, "box too small for L particles");
  TransitionMatrix tm;
  tm.states = configs_in_box(L, box);
  const int n = static_cast<int>(tm.states.size());
  tm.P = Eigen::MatrixXd::Zero(n, n);
  tm.exit_mass.assign(n, 0.0);
  for (int r = 0; r < n; ++r) {
    const auto& x = tm.states[r];
    double d = 0.0;
    ConfigLaw law;
    if (mv.kind == MoveKind::Bernoulli) {
      law = bernoulli_law(x, a, mv.param, q);
    } else {
      law = geometric_law(x, a, mv.param, q, tail_tol, &d, &box.hi);
    }
    double inside = 0.0;
    for (const auto& [y, w] : law) {
      const int c = tm.index(y);
      if (c >= 0) {
        tm.P(r, c) += w;
        inside += w;
      }
    }
    tm.exit_mass[r] = std::max(0.0, 1.0 - inside);
    tm.max_tail_deficit = std::max(tm.max_tail_deficit, d);
  }
  return tm;
}

struct TimeLikePath {
  std::vector<std::pair<int, int>> points{{1, 0}};

  void validate() const {
    require(!points.empty() && points.front() == std::make_pair(1, 0), "path must start at (1,0)");
    for (std::size_t t = 1; t < points.size(); ++t) {
      const int dN = points[t].first - points[t - 1].first;
      const int dT = points[t].second - points[t - 1].second;
      require((dN == 1 && dT == 0) || (dN == 0 && dT == 1), "path steps must increment N or T by one");
    }
  }

  // Path from a word over {N, T}.
  static TimeLikePath from_moves(const std::string& w) {
    TimeLikePath p;
    for (char ch : w) {
      auto [N, T] = p.points.back();
      if (ch == 'N' || ch == 'n') {
        p.points.emplace_back(N + 1, T);
      } else if (ch == 'T' || ch == 't') {
        p.points.emplace_back(N, T + 1);
      } else {
        throw ParameterError(std::string("path word may contain only N and T, got '") + ch + "'");
      }
    }
    return p;
  }

  std::string word() const {
    std::string w;
    for (std::size_t t = 1; t < points.size(); ++t)
      w += points[t].first > points[t - 1].first ? 'N' : 'T';
    return w;
  }

  int max_N() const {
    int m = 0;
    for (auto& pt : points) m = std::max(m, pt.first);
    return m;
  }
  int max_T() const {
    int m = 0;
    for (auto& pt : points) m = std::max(m, pt.second);
    return m;
  }

  // All time-like paths ending on the line N + T = level.
  static std::vector<TimeLikePath> all_to_level(int level) {
    std::vector<TimeLikePath> out;
    const int steps = level - 1;
    for (int mask = 0; mask < (1 << steps); ++mask) {
      std::string w;
      for (int k = 0; k < steps; ++k) w += (mask >> k & 1) ? 'T' : 'N';
      out.push_back(from_moves(w));
    }
    return out;
  }
};

// Move applied on the step into points[t+1]; r shifts the geometric index.
inline Move path_move(const TimeLikePath& path, std::size_t t, const ModelParams& p, int r = 1) {
  const auto [N0, T0] = path.points[t];
  const auto [N1, T1] = path.points[t + 1];
  if (T1 == T0 + 1) return Move::ber(-p.u.at(T1 - 1));
  (void)N0;
  return Move::geom(p.c(static_cast<std::size_t>(N1 + r - 2)));
}

struct TrajectoryRecord {
  int t = 0;
  int N = 1;
  int T = 0;
  std::string move;
  ParticleConfig x;
  long X_value = 0;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;

  std::vector<long> X() const {
    std::vector<long> v;
    for (const auto& r : records) v.push_back(r.X_value);
    return v;
  }

  std::string to_jsonl() const {
    std::string s;
    for (const auto& r : records) {
      json j{{"t", r.t}, {"N", r.N}, {"T", r.T}, {"move", r.move.empty() ? json(nullptr) : json(r.move)},
             {"x", r.x}, {"X_value", r.X_value}};
      s += j.dump() + "\n";
    }
    return s;
  }
};

// Mixed q-TASEP along a time-like path from the step configuration.
inline Trajectory run_mixed(const TimeLikePath& path, const ModelParams& p, Rng& rng, int r = 1) {
  path.validate();
  require(r >= 1, "run_mixed needs r >= 1");
  const int L = path.max_N() + r - 1;
  require(static_cast<int>(p.a.size()) >= L, "not enough particle rates");
  ParticleConfig x = step_config(L);
  Trajectory tr;
  auto record = [&](std::size_t t, const std::string& mv) {
    const auto [N, T] = path.points[t];
    const int k = N + r - 1;
    tr.records.push_back({static_cast<int>(t), N, T, mv, x, x[k - 1] + k});
  };
  record(0, "");
  for (std::size_t t = 0; t + 1 < path.points.size(); ++t) {
    const Move mv = path_move(path, t, p, r);
    x = mv.kind == MoveKind::Bernoulli ? bernoulli_move(x, p.a, mv.param, p.q, rng)
                                       : geometric_move(x, p.a, mv.param, p.q, rng);
    record(t + 1, mv.label());
  }
  return tr;
}

}  // namespace vertexlab
