// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cli.hpp"
#include "goex/coupon.hpp"
#include "goex/discretize.hpp"
#include "goex/engine.hpp"
#include "goex/magnitude.hpp"
#include "goex/metrics.hpp"
#include "goex/problems.hpp"
#include "goex/surrogate.hpp"

using namespace goex;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void criterion(int id, const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
  const auto start = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& ex) {
    detail = std::string("exception: ") + ex.what();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!pass) ++failures;
  std::printf("criterion %2d %-34s %s  (%s; %.1fs)\n", id, name.c_str(), pass ? "PASS" : "FAIL",
              detail.c_str(), secs);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double mag_at(const std::vector<State>& pts, double t) {
  return magnitude(solve_weighting(similarity(DissimilarityMatrix::pairwise(pts, euclidean_distance), t)));
}

std::vector<double> dirichlet(std::size_t n, Rng& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::vector<double> p(n);
  for (auto& v : p) v = g(rng);
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (auto& v : p) v /= total;
  return p;
}

double monte_carlo_mean(const std::vector<double>& p, std::size_t m, int trials, Rng& rng, double* se) {
  std::discrete_distribution<std::size_t> draw(p.begin(), p.end());
  double sum = 0.0, sum_sq = 0.0;
  std::vector<char> got(p.size());
  for (int t = 0; t < trials; ++t) {
    std::fill(got.begin(), got.end(), 0);
    std::size_t distinct = 0, steps = 0;
    while (distinct < m) {
      ++steps;
      char& g = got[draw(rng)];
      if (!g) g = 1, ++distinct;
    }
    sum += static_cast<double>(steps);
    sum_sq += static_cast<double>(steps * steps);
  }
  const double mean = sum / trials;
  *se = std::sqrt((sum_sq / trials - mean * mean) / trials);
  return mean;
}

std::string serialize(const std::vector<HistoryEntry>& h) {
  std::string out;
  for (std::size_t i = 0; i < h.size(); ++i) out += cli::history_record(i, h[i]).dump() + "\n";
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EngineConfig desk_config(std::size_t budget, std::uint64_t seed) {
  EngineConfig cfg;
  cfg.num_landmarks = 15;
  cfg.num_initial = 41;
  cfg.rank = 2;
  cfg.max_effort = 128;
  cfg.budget = budget;
  cfg.seed = seed;
  return cfg;
}

EngineConfig binary_config(std::size_t budget, std::uint64_t seed) {
  EngineConfig cfg = desk_config(budget, seed);
  cfg.num_landmarks = 10;
  cfg.num_initial = 24;
  return cfg;
}

ProblemDefinition problem(const std::string& name, int dim, std::uint64_t instance_seed = 1) {
  ProblemParams params;
  params.name = name;
  params.dimension = dim;
  params.instance_seed = instance_seed;
  return make_problem(params);
}

std::vector<double> all_energies(const ProblemDefinition& p, int n) {
  std::vector<double> out(std::size_t{1} << n);
  State bits(static_cast<std::size_t>(n));
  for (std::uint32_t code = 0; code < out.size(); ++code) {
    for (int j = 0; j < n; ++j) bits[j] = (code >> j) & 1u;
    out[code] = p.objective(bits);
  }
  return out;
}

double best_of(const RunResult& r) {
  double best = INFINITY;
  for (const auto& e : r.history) best = std::min(best, e.objective);
  return best;
}

constexpr int kSeeds = 5;

}  // namespace

int main() {
  criterion(1, "isoceles magnitude curve", [] {
    Eigen::Matrix3d d;
    d << 0, 1, 1, 1, 0, 1e-3, 1, 1e-3, 0;
    const DissimilarityMatrix dm(d);
    const Weighting small = solve_weighting(similarity(dm, 1e-2));
    const double m1 = magnitude(small);
    const double m2 = magnitude(solve_weighting(similarity(dm, 10.0)));
    const double m3 = magnitude(solve_weighting(similarity(dm, 1e4)));
    const bool ok = std::abs(m1 - 1) <= 0.1 && std::abs(m2 - 2) <= 0.1 && std::abs(m3 - 3) <= 0.01 &&
                    std::abs(small.components[0] - 0.5) <= 0.05 &&
                    std::abs(small.components[1] - 0.25) <= 0.05 &&
                    std::abs(small.components[2] - 0.25) <= 0.05;
    return std::pair{ok, fmt("mag %.4f %.4f %.4f, distal w %.4f", m1, m2, m3, small.components[0])};
  });

  criterion(2, "submodularity counterexample", [] {
    const State a{1.0, 0.0}, b{0.0, 1.0}, x1{-1.0, 0.0}, x2{2.0, 0.0};
    const double singles = mag_at({a, b, x1}, 1.0) + mag_at({a, b, x2}, 1.0);
    const double joint = mag_at({a, b, x1, x2}, 1.0) + mag_at({a, b}, 1.0);
    const bool ok = std::abs(singles - 4.1773) <= 1e-3 && std::abs(joint - 4.1815) <= 1e-3;
    return std::pair{ok, fmt("sums %.5f %.5f", singles, joint)};
  });

  criterion(3, "coupon sandwich", [] {
    // Exact sums carry ~1e-11 rounding, so a bound equal to the true value
    // (uniform lower = harmonic) may sit a hair above them.
    auto inside = [](const CouponBounds& b) {
      const double slack = 1e-9 * *b.exact;
      return b.lower <= *b.exact + slack && *b.exact <= b.upper + slack;
    };
    Rng rng(2024);
    std::uniform_int_distribution<std::size_t> size(4, 16);
    int violations = 0;
    double worst_uniform = 0.0, worst_full = 0.0;
    for (int k = 0; k < 100; ++k) {
      const std::size_t n = size(rng);
      const auto p = dirichlet(n, rng);
      const std::size_t m = (n + 1) / 2;
      const CouponBounds b = partial_collection_bounds(p, m, n, {.exact_as_bounds = false});
      if (!inside(b)) ++violations;
      const double full = expected_full_integral(p);
      worst_full = std::max(worst_full, std::abs(full - expected_partial_exact(p, n)) / full);
    }
    for (std::size_t n = 4; n <= 16; ++n) {
      const std::vector<double> u(n, 1.0 / static_cast<double>(n));
      const std::size_t m = (n + 1) / 2;
      const CouponBounds b = partial_collection_bounds(u, m, n, {.exact_as_bounds = false});
      const double h = harmonic_lower_bound(n, m);
      worst_uniform = std::max({worst_uniform, std::abs(*b.exact - h), std::abs(b.lower - h)});
      if (!inside(b)) ++violations;
    }
    int mc_fail = 0;
    std::uniform_int_distribution<std::size_t> small(4, 10);
    for (int k = 0; k < 10; ++k) {
      const std::size_t n = small(rng);
      const auto p = dirichlet(n, rng);
      const std::size_t m = (n + 1) / 2;
      double se = 0.0;
      const double mean = monte_carlo_mean(p, m, 100000, rng, &se);
      if (std::abs(mean - expected_partial_exact(p, m)) > 3 * se) ++mc_fail;
    }
    const bool ok = violations == 0 && worst_uniform <= 1e-9 && worst_full <= 1e-3 && mc_fail == 0;
    return std::pair{ok, fmt("violations %.0f, uniform err %.1e, integral rel err %.1e, MC misses %.0f",
                             violations, worst_uniform, worst_full, mc_fail)};
  });

  criterion(4, "weighting contract at the cutoff", [] {
    Rng rng(77);
    std::uniform_int_distribution<std::size_t> count(2, 30), dims(1, 5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int bad = 0;
    double worst_eig = INFINITY, worst_res = 0.0;
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = count(rng), dim = dims(rng);
      std::vector<State> pts(n, State(dim));
      for (auto& p : pts) {
        for (auto& v : p) v = u(rng);
      }
      const DissimilarityMatrix d = DissimilarityMatrix::pairwise(pts, euclidean_distance);
      const SimilarityMatrix z = similarity(d, operating_scale(d, CutoffKind::kStrong));
      const Weighting w = solve_weighting(z);
      const double eig = min_eigenvalue(z.entries);
      const double res = (z.entries * w.components - Eigen::VectorXd::Ones(n)).lpNorm<Eigen::Infinity>();
      const double nn = static_cast<double>(n);
      worst_eig = std::min(worst_eig, eig / nn);
      worst_res = std::max(worst_res, res / nn);
      if (w.components.minCoeff() < 0.0 || eig < -1e-10 * nn || res >= 1e-8 * nn) ++bad;
    }
    return std::pair{bad == 0, fmt("bad sets %.0f, min eig/n %.2e, max residual/n %.2e", bad,
                                   worst_eig, worst_res)};
  });

  criterion(5, "landmark trace and dispersion", [] {
    const auto p = problem("rastrigin", 2);
    int ok_seeds = 0;
    double min_margin = INFINITY;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      Rng rng(static_cast<std::uint64_t>(seed));
      const LandmarkSet ls = generate_landmarks(p.dissimilarity, 15, 41, p.global_generator, rng);
      const auto& tr = ls.magnitude_trace;
      bool monotone = true;
      for (std::size_t k = 1; k < tr.size(); ++k) monotone &= tr[k] >= tr[k - 1];
      const double final_mag = mag_at(ls.landmarks(), ls.scale);
      std::vector<std::size_t> idx(ls.states.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      double random_mean = 0.0;
      for (int r = 0; r < 100; ++r) {
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<State> subset;
        for (std::size_t k = 0; k < 15; ++k) subset.push_back(ls.states[idx[k]]);
        random_mean += mag_at(subset, ls.scale) / 100.0;
      }
      min_margin = std::min(min_margin, final_mag - random_mean);
      if (monotone && final_mag >= random_mean) ++ok_seeds;
    }
    return std::pair{ok_seeds == kSeeds, fmt("%.0f/5 seeds, min margin %.3f", ok_seeds, min_margin)};
  });

  criterion(6, "surrogate interpolation", [] {
    Rng rng(6);
    std::uniform_int_distribution<std::size_t> count(1, 50), dims(1, 30);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const std::size_t n = count(rng), dim = dims(rng);
      std::vector<std::vector<double>> nodes(n, std::vector<double>(dim));
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : nodes[i]) v = g(rng);
        y[i] = 10.0 * g(rng);
      }
      const RbfInterpolant s = RbfInterpolant::fit(nodes, y);
      for (std::size_t i = 0; i < n; ++i) worst = std::max(worst, std::abs(s(nodes[i]) - y[i]) / (1 + std::abs(y[i])));
    }
    return std::pair{worst <= 1e-8, fmt("max relative error %.2e", worst)};
  });

  std::vector<std::string> rastrigin_histories;
  criterion(7, "Rastrigin N=2 desk run", [&] {
    const auto p = problem("rastrigin", 2);
    int ok_seeds = 0;
    std::string counts;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const RunResult r = run(p, desk_config(3000, static_cast<std::uint64_t>(seed)));
      rastrigin_histories.push_back(serialize(r.history));
      const auto landmarks = r.landmarks.landmarks();
      const CellId origin = state_cell(p.dissimilarity, landmarks, 2, State{0.0, 0.0});
      int near_lattice = 0;
      double origin_f = INFINITY;
      for (std::size_t i : elite_indices(r.history, r.epochs)) {
        const State& x = r.history[i].state;
        const double dx = x[0] - std::round(x[0]), dy = x[1] - std::round(x[1]);
        const bool inside = std::round(x[0]) >= -2 && std::round(x[0]) <= 3 && std::round(x[1]) >= -2 &&
                            std::round(x[1]) <= 3;
        if (inside && std::hypot(dx, dy) <= 0.15) ++near_lattice;
        if (r.history[i].cell == origin) origin_f = r.history[i].objective;
      }
      counts += (counts.empty() ? "" : " ") + std::to_string(near_lattice) + "/" + fmt("%.2f", origin_f);
      if (near_lattice >= 8 && origin_f < 0.5) ++ok_seeds;
    }
    return std::pair{ok_seeds >= 4, std::to_string(ok_seeds) + "/5 seeds; near-lattice/origin f: " + counts};
  });

  std::string sk_history;
  criterion(8, "SK N=16 against exhaustive scan", [&] {
    int ok_seeds = 0;
    std::string detail;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const auto useed = static_cast<std::uint64_t>(seed);
      const auto p = problem("sk", 16, useed);
      const auto energies = all_energies(p, 16);
      const auto [lo, hi] = std::minmax_element(energies.begin(), energies.end());
      const RunResult big = run(p, binary_config(3000, useed));
      const RunResult small = run(p, binary_config(300, useed));
      if (seed == 1) sk_history = serialize(big.history);
      const double gap = (best_of(big) - *lo) / (*hi - *lo);
      const std::size_t e_big = elite_indices(big.history, big.epochs).size();
      const std::size_t e_small = elite_indices(small.history, small.epochs).size();
      detail += fmt(" %.3f", gap) + "/" + std::to_string(e_small) + "->" + std::to_string(e_big);
      if (gap <= 0.05 && e_big > e_small) ++ok_seeds;
    }
    return std::pair{ok_seeds >= 4, std::to_string(ok_seeds) + "/5 seeds; gap/elites:" + detail};
  });

  criterion(9, "LABS N=16 against brute force", [] {
    const auto p = problem("labs", 16);
    auto energies = all_energies(p, 16);
    std::sort(energies.begin(), energies.end());
    const double cutoff = energies[99];
    int ok_seeds = 0;
    std::string detail;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const double best = best_of(run(p, binary_config(3000, static_cast<std::uint64_t>(seed))));
      detail += fmt(" %.0f", best);
      if (best <= cutoff) ++ok_seeds;
    }
    return std::pair{ok_seeds >= 3, std::to_string(ok_seeds) + "/5 seeds; optimum " + fmt("%.0f", energies[0]) +
                                        ", 100th best " + fmt("%.0f", cutoff) + ", found" + detail};
  });

  std::string r10_history;
  criterion(10, "10-D Rastrigin vs baseline", [&] {
    const auto p = problem("rastrigin", 10);
    const std::vector<double> thetas{0.1, 0.2, 0.5};
    std::vector<RunResult> full;
    std::vector<std::vector<RunResult>> base(thetas.size());
    for (int seed = 1; seed <= kSeeds; ++seed) {
      const auto useed = static_cast<std::uint64_t>(seed);
      full.push_back(run(p, desk_config(1000, useed)));
      for (std::size_t k = 0; k < thetas.size(); ++k) {
        EngineConfig cfg = desk_config(1000, useed);
        cfg.algorithm = Algorithm::kBaseline;
        cfg.baseline_bandwidth = thetas[k];
        base[k].push_back(run(p, cfg));
      }
    }
    r10_history = serialize(full[0].history);
    // Shared normalization across every run in the comparison.
    double lo = INFINITY, hi = -INFINITY;
    auto widen = [&](const RunResult& r) {
      for (const auto& e : r.history) lo = std::min(lo, e.objective), hi = std::max(hi, e.objective);
    };
    for (const auto& r : full) widen(r);
    for (const auto& runs : base) {
      for (const auto& r : runs) widen(r);
    }
    auto mean_qd = [&](const std::vector<RunResult>& runs) {
      double acc = 0.0;
      for (const auto& r : runs) acc += score_history(r.history, p.dissimilarity, std::pair{lo, hi}).qd.back();
      return acc / static_cast<double>(runs.size());
    };
    const double full_qd = mean_qd(full);
    bool ok = true;
    std::string detail = fmt("full %.2f; baseline", full_qd);
    for (std::size_t k = 0; k < thetas.size(); ++k) {
      const double b = mean_qd(base[k]);
      detail += fmt(" %.1f:%.2f", thetas[k], b);
      ok &= full_qd > b;
    }
    return std::pair{ok, detail};
  });

  criterion(11, "determinism", [&] {
    bool ok = true;
    std::string detail;
    // Repeat in-process with parallel evaluation.
    {
      EngineConfig cfg = desk_config(3000, 1);
      cfg.workers = 3;
      const bool same = serialize(run(problem("rastrigin", 2), cfg).history) == rastrigin_histories.at(0);
      ok &= same;
      detail += std::string("rastrigin2d ") + (same ? "same" : "DIFF");
    }
    {
      EngineConfig cfg = binary_config(3000, 1);
      cfg.workers = 4;
      const bool same = serialize(run(problem("sk", 16, 1), cfg).history) == sk_history;
      ok &= same;
      detail += std::string(", sk16 ") + (same ? "same" : "DIFF");
    }
    {
      EngineConfig cfg = desk_config(1000, 1);
      cfg.workers = 2;
      const bool same = serialize(run(problem("rastrigin", 10), cfg).history) == r10_history;
      ok &= same;
      detail += std::string(", rastrigin10d ") + (same ? "same" : "DIFF");
    }
    // Through the command line driver: history.jsonl bytes.
    const fs::path dir = fs::temp_directory_path() / "goex_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const fs::path config = dir / "config.json";
    std::ofstream(config) << R"({"problem":{"name":"sk","N":16,"instance_seed":1},)"
                          << R"("engine":{"L":10,"T":24,"K":2,"M":3000,"mu":128},"seed":1})";
    std::ostringstream out, err;
    for (const auto& [name, workers] : {std::pair{"a", 1}, std::pair{"b", 4}}) {
      cli::Overrides o;
      o.output_dir = (dir / name).string();
      o.workers = static_cast<std::size_t>(workers);
      if (cli::cmd_run(config, o, true, out, err) != cli::kOk) return std::pair{false, "cli run failed: " + err.str()};
    }
    const std::string a = slurp(dir / "a" / "history.jsonl");
    const bool same = !a.empty() && a == slurp(dir / "b" / "history.jsonl") && a == sk_history;
    ok &= same;
    detail += std::string(", cli history.jsonl ") + (same ? "same" : "DIFF");
    return std::pair{ok, detail};
  });

  std::printf("%d criteria failed\n", failures);
  return failures;
}
