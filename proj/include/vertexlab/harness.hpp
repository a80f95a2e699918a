#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "vertexlab/core.hpp"
#include "vertexlab/rng.hpp"

namespace vertexlab {

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  long n = 0;

  json to_json() const { return json{{"mean", mean}, {"se", se}, {"n", n}}; }
};

// Welford accumulator with Chan's merge.
struct RunningStats {
  long n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }

  void merge(const RunningStats& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double tot = static_cast<double>(n + o.n);
    const double d = o.mean - mean;
    mean += d * static_cast<double>(o.n) / tot;
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) / tot;
    n += o.n;
  }

  Estimate estimate() const {
    Estimate e;
    e.n = n;
    e.mean = mean;
    e.se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return e;
  }
};

inline long shard_budget(long budget, std::size_t shards, std::size_t s) {
  const long S = static_cast<long>(shards);
  return budget / S + (static_cast<long>(s) < budget % S ? 1 : 0);
}

// Vector observable; one RNG stream per seed, merged in seed order.
template <class Sampler, class Observable>
std::vector<Estimate> mc_estimate_vector(Sampler&& sample, Observable&& obs, long budget,
                                         const std::vector<std::uint64_t>& seeds) {
  require(budget > 0, "mc_estimate: budget must be positive");
  require(!seeds.empty(), "mc_estimate: no seeds");
  std::vector<RunningStats> total;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    Rng rng(seeds[s], 0);
    std::vector<RunningStats> shard;
    const long nb = shard_budget(budget, seeds.size(), s);
    for (long i = 0; i < nb; ++i) {
      const std::vector<double> v = obs(sample(rng));
      if (shard.empty()) shard.resize(v.size());
      for (std::size_t k = 0; k < v.size(); ++k) shard[k].push(v[k]);
    }
    if (total.empty()) total.resize(shard.size());
    for (std::size_t k = 0; k < shard.size(); ++k) total[k].merge(shard[k]);
  }
  std::vector<Estimate> out;
  for (const auto& t : total) out.push_back(t.estimate());
  return out;
}

template <class Sampler, class Observable>
Estimate mc_estimate(Sampler&& sample, Observable&& obs, long budget,
                     const std::vector<std::uint64_t>& seeds) {
  auto v = mc_estimate_vector(
      std::forward<Sampler>(sample),
      [&](const auto& s) { return std::vector<double>{obs(s)}; }, budget, seeds);
  return v.at(0);
}

inline std::vector<std::uint64_t> seed_list(std::uint64_t base, std::size_t k) {
  std::vector<std::uint64_t> s;
  for (std::size_t i = 0; i < k; ++i) s.push_back(detail::mix64(base + 0x9e3779b97f4a7c15ull * (i + 1)));
  return s;
}

enum class CompareMode { ExactTV, Chi2, KS };

struct ComparisonReport {
  std::string statistic;
  double value = 0.0;
  double p_value = -1.0;
  double threshold = 0.0;
  int dof = 0;
  bool pass = false;
  double runtime_s = 0.0;
  json details = json::object();

  json to_json() const {
    json j{{"statistic", statistic}, {"value", value}, {"threshold", threshold}, {"pass", pass}};
    if (p_value >= 0.0) {
      j["p_value"] = p_value;
      j["dof"] = dof;
    }
    if (!details.empty()) j["details"] = details;
    return j;
  }
};

using Pmf = std::map<long, double>;
using Counts = std::map<long, long>;

inline double chi2_sf(double stat, int dof) {
  if (dof <= 0) return 1.0;
  boost::math::chi_squared_distribution<double> d(dof);
  return boost::math::cdf(boost::math::complement(d, std::max(0.0, stat)));
}

inline ComparisonReport compare_tv(const Pmf& a, const Pmf& b, double tol) {
  require(!a.empty() || !b.empty(), "distribution_compare: empty support");
  ComparisonReport r;
  r.statistic = "TV";
  double s = 0.0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    s += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) s += std::abs(v);
  r.value = 0.5 * s;
  r.threshold = tol;
  r.pass = r.value <= tol;
  return r;
}

// Goodness of fit: adjacent atoms are merged until each bin expects >= min_expected.
inline ComparisonReport chi2_gof(const Counts& counts, const Pmf& pmf, double p_threshold,
                                 double min_expected = 5.0) {
  require(!pmf.empty(), "distribution_compare: empty support");
  long n = 0;
  for (const auto& [k, c] : counts) n += c;
  require(n > 0, "chi-square needs samples");
  ComparisonReport r;
  r.statistic = "chi2";
  r.threshold = p_threshold;
  std::vector<std::pair<double, double>> bins;  // (observed, expected)
  double obs = 0.0, exp = 0.0, covered = 0.0;
  long seen = 0;
  for (const auto& [k, p] : pmf) {
    auto it = counts.find(k);
    const double o = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    obs += o;
    exp += p * static_cast<double>(n);
    covered += p;
    seen += static_cast<long>(o);
    if (exp >= min_expected) {
      bins.emplace_back(obs, exp);
      obs = exp = 0.0;
    }
  }
  // Lump bin: leftover atoms plus the mass and counts outside the listed support.
  obs += static_cast<double>(n - seen);
  exp += std::max(0.0, 1.0 - covered) * static_cast<double>(n);
  if (exp >= min_expected || bins.empty()) {
    bins.emplace_back(obs, exp);
  } else if (obs > 0.0 && exp <= 0.0) {
    bins.emplace_back(obs, exp);
  } else {
    bins.back().first += obs;
    bins.back().second += exp;
  }
  double stat = 0.0;
  for (const auto& [o, e] : bins) {
    if (e <= 0.0) {
      if (o > 0.0) stat = std::numeric_limits<double>::infinity();
      continue;
    }
    stat += (o - e) * (o - e) / e;
  }
  r.value = stat;
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = std::isfinite(stat) ? chi2_sf(stat, r.dof) : 0.0;
  r.pass = r.p_value > p_threshold;
  r.details = json{{"bins", bins.size()}, {"n", n}};
  return r;
}

// Two-sample homogeneity test on merged bins.
inline ComparisonReport chi2_two_sample(const Counts& a, const Counts& b, double p_threshold,
                                        double min_count = 10.0) {
  long na = 0, nb = 0;
  for (const auto& [k, c] : a) na += c;
  for (const auto& [k, c] : b) nb += c;
  require(na > 0 && nb > 0, "two-sample chi-square needs samples on both sides");
  std::map<long, std::pair<double, double>> joint;
  for (const auto& [k, c] : a) joint[k].first += static_cast<double>(c);
  for (const auto& [k, c] : b) joint[k].second += static_cast<double>(c);
  std::vector<std::pair<double, double>> bins;
  double ca = 0.0, cb = 0.0;
  for (const auto& [k, v] : joint) {
    ca += v.first;
    cb += v.second;
    if (ca + cb >= min_count) {
      bins.emplace_back(ca, cb);
      ca = cb = 0.0;
    }
  }
  if (ca + cb > 0.0) {
    if (bins.empty()) {
      bins.emplace_back(ca, cb);
    } else {
      bins.back().first += ca;
      bins.back().second += cb;
    }
  }
  const double k1 = std::sqrt(static_cast<double>(nb) / static_cast<double>(na));
  const double k2 = std::sqrt(static_cast<double>(na) / static_cast<double>(nb));
  double stat = 0.0;
  for (const auto& [x, y] : bins) stat += (k1 * x - k2 * y) * (k1 * x - k2 * y) / (x + y);
  ComparisonReport r;
  r.statistic = "chi2_two_sample";
  r.value = stat;
  r.dof = static_cast<int>(bins.size()) - 1;
  r.p_value = chi2_sf(stat, r.dof);
  r.threshold = p_threshold;
  r.pass = r.p_value > p_threshold;
  r.details = json{{"bins", bins.size()}, {"n_a", na}, {"n_b", nb}};
  return r;
}

// Kolmogorov distance of samples to a continuous CDF; ties handled at jumps.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
  require(!samples.empty(), "KS needs samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double F = cdf(samples[i]);
    d = std::max({d, std::abs(static_cast<double>(i) / n - F), std::abs(static_cast<double>(j) / n - F)});
    i = j;
  }
  return d;
}

inline ComparisonReport ks_against_cdf(const std::vector<double>& samples,
                                       const std::function<double(double)>& cdf, double tol) {
  ComparisonReport r;
  r.statistic = "KS";
  r.value = ks_distance(samples, cdf);
  r.threshold = tol;
  r.pass = r.value <= tol;
  r.details = json{{"n", samples.size()}};
  return r;
}

// Kolmogorov distance between two pmfs on the integers.
inline double ks_between(const Pmf& a, const Pmf& b) {
  std::map<long, std::pair<double, double>> joint;
  for (const auto& [k, v] : a) joint[k].first += v;
  for (const auto& [k, v] : b) joint[k].second += v;
  double ca = 0.0, cb = 0.0, d = 0.0;
  for (const auto& [k, v] : joint) {
    ca += v.first;
    cb += v.second;
    d = std::max(d, std::abs(ca - cb));
  }
  return d;
}

// EXACT_TV: a, b are pmfs. CHI2: a holds Monte Carlo counts, b the oracle pmf.
// KS: a, b are pmfs compared through their CDFs.
inline ComparisonReport distribution_compare(const Pmf& a, const Pmf& b, CompareMode mode,
                                             double tolerance) {
  require(!a.empty() && !b.empty(), "distribution_compare: empty support");
  const auto t0 = std::chrono::steady_clock::now();
  ComparisonReport r;
  switch (mode) {
    case CompareMode::ExactTV:
      r = compare_tv(a, b, tolerance);
      break;
    case CompareMode::Chi2: {
      Counts c;
      for (const auto& [k, v] : a) c[k] = std::lround(v);
      r = chi2_gof(c, b, tolerance);
      break;
    }
    case CompareMode::KS:
      r.statistic = "KS";
      r.value = ks_between(a, b);
      r.threshold = tolerance;
      r.pass = r.value <= tolerance;
      break;
  }
  r.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline Pmf normalize_counts(const Counts& c) {
  long n = 0;
  for (const auto& [k, v] : c) n += v;
  Pmf p;
  for (const auto& [k, v] : c) p[k] = static_cast<double>(v) / static_cast<double>(n);
  return p;
}

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace vertexlab
