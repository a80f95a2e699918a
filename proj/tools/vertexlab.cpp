#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vertexlab/checks.hpp"

namespace {

using namespace vertexlab;

struct Common {
  std::string config;
  std::uint64_t seed = kDefaultSeed;
  long budget = 0;
  std::string out;
  std::string format = "csv";
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream f(path);
  if (!f) throw ParameterError("cannot read config '" + path + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParameterError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

template <class T>
T get_or(const json& cfg, const char* key, T fallback) {
  return cfg.contains(key) ? cfg.at(key).get<T>() : fallback;
}

ModelParams params_from(const json& cfg, const ModelParams& fallback) {
  return cfg.contains("params") ? cfg.at("params").get<ModelParams>() : fallback;
}

SchurSetup schur_from(const json& cfg, SchurSetup s) {
  s.q = get_or(cfg, "q", s.q);
  s.u = get_or(cfg, "u", s.u);
  s.a1 = get_or(cfg, "a1", s.a1);
  s.N = get_or(cfg, "N", s.N);
  s.T = get_or(cfg, "T", s.T);
  s.eta = get_or(cfg, "eta", s.eta);
  s.tau = get_or(cfg, "tau", s.tau);
  return s;
}

// Writes to <out>/<name> when --out is set, otherwise to stdout.
void emit(const Common& c, const std::string& name, const std::string& text) {
  if (c.out.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::create_directories(c.out);
  write_text(std::filesystem::path(c.out) / name, text);
}

std::string ext(const Common& c) { return c.format == "jsonl" ? ".jsonl" : ".csv"; }

long budget_or(const Common& c, long fallback) { return c.budget > 0 ? c.budget : fallback; }

int sample_vertex(const Common& c) {
  const json cfg = load_config(c.config);
  ModelParams def;
  def.q = 0.5;
  def.u = {-1.0, -0.8, -1.2, -0.9};
  def.a = {1.0, 1.1, 0.9, 1.2};
  def.nu = {0.0, 0.4, 0.3, 0.5};
  const ModelParams p = params_from(cfg, def);
  const Boundary b = Boundary::parse(get_or<std::string>(cfg, "boundary", "step-bernoulli"));
  const int N_max = get_or(cfg, "N_max", static_cast<int>(p.columns()));
  const int T_max = get_or(cfg, "T_max", static_cast<int>(p.rows()));
  const long n = budget_or(c, 1);
  Rng rng(c.seed, 0);
  std::ostringstream os;
  if (c.format == "csv") os << "sample,N,T,h\n";
  for (long i = 0; i < n; ++i) {
    const HeightField hf = sample_quadrant(p, b, N_max, T_max, rng);
    if (c.format == "csv") {
      for (int T = 0; T <= T_max; ++T)
        for (int N = 1; N <= N_max + 1; ++N) os << i << ',' << N << ',' << T << ',' << hf(N, T) << '\n';
    } else {
      json j = hf.to_json();
      j["sample"] = i;
      os << j.dump() << '\n';
    }
  }
  emit(c, "sample-vertex" + ext(c), os.str());
  return 0;
}

int sample_qtasep(const Common& c) {
  const json cfg = load_config(c.config);
  ModelParams def;
  def.q = 0.5;
  def.u = {-1.0, -0.8, -1.2};
  def.a = {1.0, 1.1, 0.9, 1.2};
  def.nu = {0.0, 0.4, 0.3, 0.5};
  const ModelParams p = params_from(cfg, def);
  const TimeLikePath path = TimeLikePath::from_moves(get_or<std::string>(cfg, "path", "TTNTN"));
  const int r = get_or(cfg, "r", 1);
  const long n = budget_or(c, 1);
  Rng rng(c.seed, 0);
  std::ostringstream os;
  if (c.format == "csv") os << "sample,t,N,T,move,X_value\n";
  for (long i = 0; i < n; ++i) {
    const Trajectory tr = run_mixed(path, p, rng, r);
    for (const auto& rec : tr.records) {
      if (c.format == "csv") {
        os << i << ',' << rec.t << ',' << rec.N << ',' << rec.T << ',' << rec.move << ',' << rec.X_value << '\n';
      } else {
        os << json{{"sample", i}, {"t", rec.t}, {"N", rec.N}, {"T", rec.T},
                   {"move", rec.move.empty() ? json(nullptr) : json(rec.move)}, {"x", rec.x},
                   {"X_value", rec.X_value}}
                  .dump()
           << '\n';
      }
    }
  }
  emit(c, "sample-qtasep" + ext(c), os.str());
  return 0;
}

int couple_check(const Common& c) {
  const json cfg = load_config(c.config);
  ModelParams def;
  def.q = 0.5;
  def.u = {-1.0, -0.8, -1.2};
  def.a = {1.0, 1.1, 0.9, 1.2};
  def.nu = {0.0, 0.4, 0.3, 0.35};
  const ModelParams p = params_from(cfg, def);
  const TimeLikePath path = TimeLikePath::from_moves(get_or<std::string>(cfg, "path", "TNTN"));
  const int r = get_or(cfg, "r", 1);
  const double tol = get_or(cfg, "tolerance", 1e-8);
  const CouplingReport rep = theorem_coupling_check(path, p, r, tol);
  emit(c, "couple-check.json", rep.to_json().dump(2) + "\n");
  return rep.pass ? 0 : 1;
}

int moments(const Common& c) {
  const json cfg = load_config(c.config);
  ModelParams def;
  def.q = 0.5;
  def.u = {-1.0, -0.8};
  def.a = {1.0, 1.3, 0.8};
  def.nu = {0.3, 0.4, 0.2};
  const ModelParams p = params_from(cfg, def);
  const auto N_list = get_or(cfg, "N_list", std::vector<int>{2, 1});
  const int T = get_or(cfg, "T", static_cast<int>(p.rows()));
  const long n = budget_or(c, 100000);
  // The contour integral computes the shifted product; the plain q-moment is
  // compared against Monte Carlo.
  const MomentResult quad = moment_product_quadrature(N_list, T, p);
  const double product_residue = moment_product_residues(N_list, T, p);
  const double residue = moment_height_residues(N_list, T, p);
  const int N_max = *std::max_element(N_list.begin(), N_list.end());
  auto sample = [&](Rng& rng) {
    QuadrantSampler s(p, Boundary::step(), N_max);
    for (int t = 0; t < T; ++t) s.advance_row(rng);
    double v = 1.0;
    for (int N : N_list) v *= std::pow(p.q, s.height(N + 1));
    return v;
  };
  const Estimate est = mc_estimate(sample, [](double v) { return v; }, n, seed_list(c.seed, 4));
  const double z = est.se > 0.0 ? std::abs(est.mean - residue) / est.se : 0.0;
  const double gap = std::abs(quad.value - product_residue);
  const bool pass = gap <= 1e-9 && z <= 4.0;
  const json j{{"N_list", N_list},
               {"T", T},
               {"params", p},
               {"product", {{"quadrature", quad.value}, {"nodes", quad.nodes}, {"residues", product_residue},
                            {"abs_diff", gap}}},
               {"moment", {{"residues", residue}, {"mc", est.to_json()}, {"z", z}}},
               {"pass", pass}};
  emit(c, "moments.json", j.dump(2) + "\n");
  return pass ? 0 : 1;
}

int diffops_check(const Common& c) {
  const json cfg = load_config(c.config);
  ModelParams def;
  def.q = 0.4;
  def.u = {-1.0, -0.7, -1.3};
  def.a = {1.0, 1.25, 0.8};
  def.nu = {0.3, 0.5, 0.2};
  const ModelParams p = params_from(cfg, def);
  const int N = get_or(cfg, "N", static_cast<int>(p.columns()));
  const int T = get_or(cfg, "T", static_cast<int>(p.rows()));
  const int M = get_or(cfg, "M", N);
  const double tol = get_or(cfg, "tolerance", 1e-9);
  const double res = key_lemma_residual(p, N, T, M);
  const json j{{"N", N}, {"T", T}, {"M", M}, {"params", p}, {"relative_residual", res},
               {"threshold", tol}, {"pass", res <= tol}};
  emit(c, "diffops-check.json", j.dump(2) + "\n");
  return res <= tol ? 0 : 1;
}

int schur(const Common& c) {
  const json cfg = load_config(c.config);
  SchurSetup def;
  def.q = 0.4;
  def.u = -0.8;
  def.a1 = 1.3;
  def.N = 2;
  def.T = 3;
  const SchurSetup s = schur_from(cfg, def);
  s.validate();
  double deficit = 0.0;
  const std::vector<double> brute = schur_length_law(s, &deficit);
  const std::vector<double> fred = length_law_fredholm(s, get_or(cfg, "nodes", 256));
  const std::size_t K = std::max(brute.size(), fred.size());
  double tv = 0.0;
  std::ostringstream os;
  if (c.format == "csv") os << "length,bruteforce,fredholm\n";
  for (std::size_t x = 0; x < K; ++x) {
    const double b = x < brute.size() ? brute[x] : 0.0;
    const double f = x < fred.size() ? fred[x] : 0.0;
    tv += 0.5 * std::abs(b - f);
    if (c.format == "csv") {
      char buf[96];
      std::snprintf(buf, sizeof buf, "%zu,%.15g,%.15g\n", x, b, f);
      os << buf;
    } else {
      os << json{{"length", x}, {"bruteforce", b}, {"fredholm", f}}.dump() << '\n';
    }
  }
  const double tol = get_or(cfg, "tolerance", 1e-6);
  emit(c, "schur" + ext(c), os.str());
  std::cerr << "TV(bruteforce, fredholm) = " << tv << ", enumeration deficit = " << deficit << "\n";
  return tv <= tol ? 0 : 1;
}

int asymptotics(const Common& c) {
  const json cfg = load_config(c.config);
  SchurSetup def;
  def.q = 0.5;
  def.u = -1.0;
  def.a1 = 1.0;
  def.eta = 1.0;
  def.tau = 2.0;
  const SchurSetup s = schur_from(cfg, def);
  const auto M_list = get_or(cfg, "M_list", std::vector<int>{50, 100, 200, 400});
  const int replicas = static_cast<int>(budget_or(c, get_or(cfg, "replicas", 200L)));
  const bool with_ks = get_or(cfg, "ks", true);
  const AsymptoticsReport rep = asymptotics_experiment(s, M_list, replicas, c.seed, with_ks);
  if (c.format == "csv") {
    emit(c, "asymptotics.csv", rep.to_csv());
  } else {
    std::ostringstream os;
    for (const auto& r : rep.rows)
      os << json{{"M", r.M}, {"replica", r.replica}, {"x_scaled", r.x_scaled}, {"standardized", r.standardized}}.dump()
         << '\n';
    emit(c, "asymptotics.jsonl", os.str());
  }
  const std::string summary = rep.summary_json().dump(2) + "\n";
  if (c.out.empty())
    std::cerr << summary;
  else
    write_text(std::filesystem::path(c.out) / "summary.json", summary);
  return 0;
}

int verify(const Common& c, const std::string& suite) {
  SuiteSpec spec = parse_suite(suite);
  CheckContext ctx;
  ctx.seed = resolve_seed(spec.seed.value_or(c.seed));
  if (spec.budget_scale) ctx.budget_scale = *spec.budget_scale;
  // --budget is the Monte Carlo sample count of a nominal 10^6-sample check.
  if (c.budget > 0) ctx.budget_scale = static_cast<double>(c.budget) / 1e6;
  if (!c.out.empty()) std::filesystem::create_directories(c.out);
  int failures = 0;
  run_suite(spec.ids, ctx, c.out, [&](const CheckResult& r) {
    std::cout << result_line(r) << std::endl;
    if (!r.pass) ++failures;
  });
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stochastic higher spin six vertex model and q-TASEP toolkit"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "JSON config file")->option_text("FILE");
  app.add_option("--seed", c.seed, "base seed (VERTEXLAB_SEED overrides)")->capture_default_str();
  app.add_option("--budget", c.budget, "sample count or replica count");
  app.add_option("--out", c.out, "output directory (default: stdout)");
  app.add_option("--format", c.format, "csv or jsonl")
      ->check(CLI::IsMember({"csv", "jsonl"}))
      ->capture_default_str();

  auto sub = [&](const char* name, const char* help) {
    CLI::App* s = app.add_subcommand(name, help);
    s->fallthrough();
    return s;
  };
  CLI::App* sv = sub("sample-vertex", "sample height fields of the vertex model");
  CLI::App* sq = sub("sample-qtasep", "sample mixed q-TASEP trajectories along a time-like path");
  CLI::App* cc = sub("couple-check", "exact joint laws along a path: vertex heights against q-TASEP");
  CLI::App* mo = sub("moments", "q-moments by contour integrals, residues and Monte Carlo");
  CLI::App* dc = sub("diffops-check", "residual of the difference operator eigenrelation");
  CLI::App* sc = sub("schur", "length law by enumeration and by Fredholm determinant");
  CLI::App* as = sub("asymptotics", "large-scale special q-TASEP runs and GUE Tracy-Widom comparison");
  CLI::App* ve = sub("verify", "run a check suite: default, full, none, a comma list, or a JSON file");
  std::string suite = "default";
  ve->add_option("suite", suite, "suite name, id list or JSON file")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    c.seed = resolve_seed(c.seed);
    if (*sv) return sample_vertex(c);
    if (*sq) return sample_qtasep(c);
    if (*cc) return couple_check(c);
    if (*mo) return moments(c);
    if (*dc) return diffops_check(c);
    if (*sc) return schur(c);
    if (*as) return asymptotics(c);
    if (*ve) return verify(c, suite);
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
