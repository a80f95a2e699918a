#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace vertexlab {

using json = nlohmann::json;
using cplx = std::complex<double>;

// Sentinel for an unbounded gap or an infinite Pochhammer length.
inline constexpr int kInfinity = std::numeric_limits<int>::max();

class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool ok, const std::string& what) {
  if (!ok) throw ParameterError(what);
}

inline void check_q(double q) {
  require(q > 0.0 && q < 1.0, "q must lie in (0,1), got " + std::to_string(q));
}

// Finite product (z;q)_n.
template <class T>
T q_pochhammer(T z, double q, int n) {
  check_q(q);
  require(n >= 0, "q_pochhammer: negative length");
  T r(1.0);
  double qk = 1.0;
  for (int k = 0; k < n; ++k) {
    r *= T(1.0) - z * qk;
    qk *= q;
  }
  return r;
}

template <class T>
struct PochhammerInf {
  T value;
  int terms = 0;
  // Bound on |log| of the neglected tail product.
  double tail_bound = 0.0;
};

inline constexpr double kPochTol = 1e-17;

template <class T>
PochhammerInf<T> q_pochhammer_inf_report(T z, double q, double tol = kPochTol) {
  check_q(q);
  PochhammerInf<T> out{T(1.0)};
  double qk = 1.0;
  int k = 0;
  while (std::abs(z) * qk >= tol) {
    out.value *= T(1.0) - z * qk;
    qk *= q;
    ++k;
    require(k < 100000, "q_pochhammer_inf: no convergence");
  }
  const double rest = std::abs(z) * qk;
  out.terms = k;
  out.tail_bound = rest / ((1.0 - q) * (1.0 - rest));
  return out;
}

template <class T>
T q_pochhammer_inf(T z, double q) {
  return q_pochhammer_inf_report(z, q).value;
}

// (z;q)_n with n possibly kInfinity.
template <class T>
T q_pochhammer_any(T z, double q, int n) {
  return n == kInfinity ? q_pochhammer_inf(z, q) : q_pochhammer(z, q, n);
}

struct ModelParams {
  double q = 0.5;
  std::vector<double> u;
  std::vector<double> a;
  std::vector<double> nu;

  // Zero-based: c(i) is the column parameter of column i+1.
  double c(std::size_t i) const { return nu.at(i) / a.at(i); }
  std::size_t columns() const { return std::min(a.size(), nu.size()); }
  std::size_t rows() const { return u.size(); }
};

struct Partition {
  std::vector<int> parts;

  Partition() = default;
  explicit Partition(std::vector<int> p) : parts(std::move(p)) {
    for (std::size_t i = 0; i + 1 < parts.size(); ++i)
      require(parts[i] >= parts[i + 1], "partition parts must be weakly decreasing");
    for (int x : parts) require(x >= 0, "partition parts must be nonnegative");
  }

  int length() const {
    return static_cast<int>(std::count_if(parts.begin(), parts.end(), [](int x) { return x > 0; }));
  }
  int size() const { return std::accumulate(parts.begin(), parts.end(), 0); }
  int operator[](std::size_t i) const { return i < parts.size() ? parts[i] : 0; }

  // Multiplicities k_r = #{i : parts_i = r} for r >= 1.
  std::map<int, int> multiplicities() const {
    std::map<int, int> m;
    for (int x : parts)
      if (x > 0) ++m[x];
    return m;
  }

  bool operator<(const Partition& o) const { return parts < o.parts; }
  bool operator==(const Partition& o) const = default;
};

struct Specialization {
  std::vector<double> alphas;
  std::vector<double> betas;
  double gamma = 0.0;

  void validate() const {
    for (double x : alphas) require(x >= 0.0, "specialization alphas must be nonnegative");
    for (double x : betas) require(x >= 0.0, "specialization betas must be nonnegative");
    require(gamma >= 0.0, "specialization gamma must be nonnegative");
  }

  Specialization concat(const Specialization& o) const {
    Specialization r = *this;
    r.alphas.insert(r.alphas.end(), o.alphas.begin(), o.alphas.end());
    r.betas.insert(r.betas.end(), o.betas.begin(), o.betas.end());
    r.gamma += o.gamma;
    return r;
  }
};

// Π_W(u;ρ) = e^{γu} ∏(1+β_i u) / ∏(α_i u;q)_∞.
template <class T>
T pi_w(T u, const Specialization& rho, double q) {
  check_q(q);
  T r = std::exp(rho.gamma * u);
  for (double b : rho.betas) r *= T(1.0) + b * u;
  for (double al : rho.alphas) {
    require(std::abs(al * u) < 1.0, "pi_w diverges: |alpha u| >= 1");
    r /= q_pochhammer_inf(T(al * u), q);
  }
  return r;
}

// Truncated product of power series.
inline std::vector<double> series_mul(const std::vector<double>& x, const std::vector<double>& y,
                                      std::size_t n) {
  std::vector<double> r(n, 0.0);
  for (std::size_t i = 0; i < x.size() && i < n; ++i)
    for (std::size_t j = 0; j < y.size() && i + j < n; ++j) r[i + j] += x[i] * y[j];
  return r;
}

// Coefficients Q_(0..n_max)(ρ) of Π_W(u;ρ) in u.
inline std::vector<double> pi_w_coefficients(const Specialization& rho, double q, int n_max) {
  check_q(q);
  require(n_max >= 0, "pi_w_coefficients: negative n_max");
  rho.validate();
  const std::size_t n = static_cast<std::size_t>(n_max) + 1;
  std::vector<double> r(n, 0.0);
  r[0] = 1.0;
  std::vector<double> f(n);
  f[0] = 1.0;
  for (std::size_t k = 1; k < n; ++k) f[k] = f[k - 1] * rho.gamma / static_cast<double>(k);
  r = series_mul(r, f, n);
  for (double b : rho.betas) r = series_mul(r, {1.0, b}, n);
  for (double al : rho.alphas) {
    // q-binomial theorem: 1/(αu;q)_∞ = Σ α^k u^k / (q;q)_k.
    f[0] = 1.0;
    for (std::size_t k = 1; k < n; ++k)
      f[k] = f[k - 1] * al / (1.0 - std::pow(q, static_cast<double>(k)));
    r = series_mul(r, f, n);
  }
  return r;
}

struct ValidityReport {
  bool basic_ok = false;
  bool whittaker_ok = false;
  bool nested_ok = false;
  double margin = 0.0;
  std::vector<std::string> notes;
};

inline constexpr double kDefaultMargin = 1e-6;

inline ValidityReport validate_params(const ModelParams& p, int N_max, int T_max,
                                      double eps = kDefaultMargin) {
  ValidityReport r;
  double margin = std::numeric_limits<double>::infinity();
  bool ok = true;
  auto note = [&](const std::string& s) {
    r.notes.push_back(s);
    ok = false;
  };
  if (!(p.q > 0.0 && p.q < 1.0)) note("q outside (0,1)");
  if (static_cast<int>(p.a.size()) < N_max || static_cast<int>(p.nu.size()) < N_max)
    note("window exceeds column parameter lists");
  if (static_cast<int>(p.u.size()) < T_max) note("window exceeds row parameter list");
  const int nc = std::min<int>(N_max, static_cast<int>(p.columns()));
  const int nr = std::min<int>(T_max, static_cast<int>(p.u.size()));
  for (int t = 0; t < nr; ++t) {
    margin = std::min(margin, -p.u[t]);
    if (!(p.u[t] < 0.0)) note("u_" + std::to_string(t + 1) + " is not negative");
  }
  for (int n = 0; n < nc; ++n) {
    margin = std::min({margin, p.a[n], 1.0 - p.nu[n]});
    if (!(p.a[n] > 0.0)) note("a_" + std::to_string(n + 1) + " is not positive");
    if (!(p.nu[n] >= 0.0 && p.nu[n] < 1.0)) note("nu_" + std::to_string(n + 1) + " outside [0,1)");
  }
  if (nc == 0 && nr == 0) margin = 1.0;
  r.margin = margin;
  if (ok && margin < eps) r.notes.push_back("parameters closer than eps to a boundary");
  r.basic_ok = ok && margin >= eps;

  bool w = r.basic_ok;
  for (int i = 0; i < nc && w; ++i)
    for (int j = 0; j < nc; ++j)
      if (!(p.a[i] * p.c(j) < 1.0)) {
        w = false;
        r.notes.push_back("a_i c_j >= 1 in window");
        break;
      }
  r.whittaker_ok = w;

  if (nc > 0 && r.basic_ok) {
    auto [lo, hi] = std::minmax_element(p.a.begin(), p.a.begin() + nc);
    r.nested_ok = *lo > p.q * *hi;
    if (!r.nested_ok) r.notes.push_back("min a <= q max a");
  }
  return r;
}

inline void to_json(json& j, const ModelParams& p) {
  j = json{{"q", p.q}, {"u", p.u}, {"a", p.a}, {"nu", p.nu}};
}

inline void from_json(const json& j, ModelParams& p) {
  p.q = j.at("q").get<double>();
  p.u = j.value("u", std::vector<double>{});
  p.a = j.value("a", std::vector<double>{});
  p.nu = j.value("nu", std::vector<double>{});
}

inline void to_json(json& j, const Specialization& s) {
  j = json{{"alphas", s.alphas}, {"betas", s.betas}, {"gamma", s.gamma}};
}

inline void from_json(const json& j, Specialization& s) {
  s.alphas = j.value("alphas", std::vector<double>{});
  s.betas = j.value("betas", std::vector<double>{});
  s.gamma = j.value("gamma", 0.0);
}

inline void to_json(json& j, const ValidityReport& r) {
  j = json{{"basic_ok", r.basic_ok},
           {"whittaker_ok", r.whittaker_ok},
           {"nested_ok", r.nested_ok},
           {"margin", r.margin},
           {"notes", r.notes}};
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return json::parse(in);
}

// FNV-1a over the canonical JSON dump.
inline std::string digest_of(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << h;
  return os.str();
}

inline std::string params_digest(const ModelParams& p) { return digest_of(json(p)); }

}  // namespace vertexlab
