#include "goex/engine.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

#include "goex/coupon.hpp"
#include "goex/surrogate.hpp"

namespace goex {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
// Epochs in a row that may add no new state before the run is declared stuck.
constexpr int kMaxStalledEpochs = 100;

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

CutoffKind cutoff_kind(const EngineConfig& cfg) {
  return cfg.metric_is_euclidean ? CutoffKind::kPositive : CutoffKind::kStrong;
}

// State shared by the full and baseline loops: history, landmarks, the
// per-cell elite bookkeeping and the single RNG stream.
class Session {
 public:
  Session(const ProblemDefinition& problem, const EngineConfig& cfg)
      : problem_(problem), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    result_.landmarks = generate_landmarks(problem_.dissimilarity, cfg_.num_landmarks,
                                           cfg_.num_initial, problem_.global_generator, rng_);
    landmarks_ = result_.landmarks.landmarks();
    commit(result_.landmarks.states);
  }

  RunResult finish() && { return std::move(result_); }

  bool exhausted() const { return history().size() >= cfg_.budget; }
  std::size_t remaining() const { return cfg_.budget - history().size(); }
  int epoch() const { return result_.epochs; }
  const std::vector<HistoryEntry>& history() const { return result_.history; }
  Rng& rng() { return rng_; }
  const EngineConfig& config() const { return cfg_; }
  const ProblemDefinition& problem() const { return problem_; }
  std::span<const State> landmarks() const { return landmarks_; }

  CellId cell_of(const State& x) const {
    return state_cell(problem_.dissimilarity, landmarks_, cfg_.rank, x);
  }

  bool seen(const State& x) const { return known_.contains(x); }

  void begin_epoch() { ++result_.epochs; }

  // Evaluates new states, appends them with the current epoch as birth and
  // crowns the best entry of every cell.
  void commit(std::span<const State> fresh) {
    const std::vector<double> values = evaluate_batch(problem_.objective, fresh, cfg_.workers);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      HistoryEntry e;
      e.state = fresh[i];
      e.cell = cell_of(fresh[i]);
      e.birth = result_.epochs;
      e.reign = 0;
      e.objective = values[i];
      known_.insert(e.state);
      auto [it, inserted] = best_in_cell_.try_emplace(e.cell, result_.history.size());
      if (!inserted && e.objective < result_.history[it->second].objective) {
        it->second = result_.history.size();
      }
      result_.history.push_back(std::move(e));
    }
    for (const auto& [cell, idx] : best_in_cell_) result_.history[idx].reign = result_.epochs;
  }

  void report(std::size_t expeditions, std::size_t elites, const ProgressSink& progress) const {
    if (progress) progress({result_.epochs, history().size(), expeditions, elites});
  }

 private:
  const ProblemDefinition& problem_;
  EngineConfig cfg_;
  Rng rng_;
  RunResult result_;
  std::vector<State> landmarks_;
  std::set<State> known_;
  std::map<CellId, std::size_t> best_in_cell_;
};

struct EliteView {
  std::vector<std::size_t> index;  // into history
  std::vector<State> states;
  DissimilarityMatrix dissimilarity{Eigen::MatrixXd::Zero(1, 1)};
  Weighting weighting;
};

EliteView current_elites(const Session& s) {
  EliteView v;
  v.index = elite_indices(s.history(), s.epoch());
  for (std::size_t i : v.index) v.states.push_back(s.history()[i].state);
  v.dissimilarity = DissimilarityMatrix::pairwise(v.states, s.problem().dissimilarity);
  v.weighting = weighting_at_cutoff(v.dissimilarity, cutoff_kind(s.config()));
  return v;
}

// Effort for an expedition from `base_cell`: compares the best objective of
// the cell's two most recent birth epochs, normalized to the global range.
std::size_t effort_for(const Session& s, const std::vector<std::size_t>& in_base, double global_min,
                       double global_max) {
  const auto& h = s.history();
  std::vector<int> births;
  for (std::size_t i : in_base) births.push_back(h[i].birth);
  std::sort(births.begin(), births.end());
  births.erase(std::unique(births.begin(), births.end()), births.end());
  const int last = births.back();
  const int before = births.size() > 1 ? births[births.size() - 2] : last;

  double denom = global_max - global_min;
  if (denom == 0.0) denom = 1.0;
  double best_last = std::numeric_limits<double>::infinity();
  double best_before = std::numeric_limits<double>::infinity();
  std::size_t count_last = 0;
  for (std::size_t i : in_base) {
    const double normed = (h[i].objective - global_min) / denom;
    if (h[i].birth == last) {
      best_last = std::min(best_last, normed);
      ++count_last;
    }
    if (h[i].birth == before) best_before = std::min(best_before, normed);
  }
  const std::size_t cap = s.config().max_effort;
  const double prior = s.epoch() > 2 ? static_cast<double>(count_last)
                                     : std::ceil(std::sqrt(static_cast<double>(cap)));
  return exploration_effort(best_before, best_last, prior, cap);
}

std::size_t expedition_count(const Eigen::VectorXd& go) {
  const auto n = static_cast<std::size_t>(go.size());
  std::vector<double> p(go.data(), go.data() + go.size());
  const auto support = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [](double v) { return v > 0.0; }));
  const std::size_t m = std::min((n + 1) / 2, support);
  const CouponBounds bounds = partial_collection_bounds(p, m, n);
  return static_cast<std::size_t>(std::ceil(bounds.lower));
}

// One expedition of the full algorithm; returns the selected probes.
std::vector<State> expedition(Session& s, const EliteView& elites, const Eigen::VectorXd& go,
                              const std::set<State>& pending, std::size_t room, double global_min,
                              double global_max) {
  const auto& h = s.history();
  const auto& cfg = s.config();
  const auto& dis = s.problem().dissimilarity;

  const std::size_t base = sample_index(go, s.rng());
  const State& x = elites.states[base];
  const CellId& base_cell = h[elites.index[base]].cell;

  std::vector<std::size_t> in_base;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i].cell == base_cell) in_base.push_back(i);
  }
  const std::size_t effort = effort_for(s, in_base, global_min, global_max);

  // U: nearest history states to the base elite; V: its cell mates.
  const std::size_t num_nearest = std::min(h.size(), (cfg.max_effort + 1) / 2);
  std::vector<double> to_base(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) to_base[i] = dis(x, h[i].state);
  std::vector<std::size_t> order(h.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return to_base[a] < to_base[b]; });
  std::vector<std::size_t> near = in_base;
  near.insert(near.end(), order.begin(), order.begin() + static_cast<long>(num_nearest));
  std::sort(near.begin(), near.end());
  near.erase(std::unique(near.begin(), near.end()), near.end());

  std::vector<std::vector<double>> encoded;
  std::vector<double> known_values;
  for (std::size_t i : near) {
    encoded.push_back(s.problem().encode(h[i].state));
    known_values.push_back(h[i].objective);
  }
  const RbfInterpolant surrogate = RbfInterpolant::fit(encoded, known_values);

  double initial = 0.0;
  for (Eigen::Index k = 0; k < elites.dissimilarity.size(); ++k) {
    initial = std::max(initial, elites.dissimilarity(static_cast<Eigen::Index>(base), k));
  }
  if (!(initial > 0.0) || !std::isfinite(initial)) {
    initial = 0.0;
    for (std::size_t i : near) {
      if (std::isfinite(to_base[i])) initial = std::max(initial, to_base[i]);
    }
    if (!(initial > 0.0)) initial = 1.0;
  }
  BandwidthResult probing = adapt_bandwidth(s.problem().local_generator, x, initial, base_cell, dis,
                                            s.landmarks(), cfg.rank, cfg.max_effort, s.rng());

  std::vector<State> probes;
  std::set<State> fresh;
  for (State& p : probing.probes) {
    if (s.seen(p) || pending.contains(p) || fresh.contains(p)) continue;
    fresh.insert(p);
    probes.push_back(std::move(p));
  }
  if (probes.empty()) return {};

  std::vector<State> local;
  for (std::size_t i : near) local.push_back(h[i].state);
  local.insert(local.end(), probes.begin(), probes.end());
  const std::size_t offset = near.size();
  const auto total = static_cast<Eigen::Index>(local.size());

  Eigen::VectorXd w = Eigen::VectorXd::Zero(total);
  try {
    w = weighting_at_cutoff(DissimilarityMatrix::pairwise(local, dis), cutoff_kind(cfg)).components;
  } catch (const SingularSystemError&) {
    // No usable diversity signal; rank by the surrogate alone.
  }

  Eigen::MatrixXd bi(2, total);
  for (Eigen::Index j = 0; j < total; ++j) {
    const auto ju = static_cast<std::size_t>(j);
    bi(0, j) = ju < offset ? known_values[ju] : surrogate(s.problem().encode(local[ju]));
    bi(1, j) = -w[j];
  }
  const Eigen::VectorXd dominated = pareto_domination(standardize_rows(bi));

  std::vector<std::size_t> rank(probes.size());
  std::iota(rank.begin(), rank.end(), std::size_t{0});
  std::stable_sort(rank.begin(), rank.end(), [&](std::size_t a, std::size_t b) {
    return dominated[static_cast<Eigen::Index>(offset + a)] < dominated[static_cast<Eigen::Index>(offset + b)];
  });
  const std::size_t take = std::min({effort, room, probes.size()});
  std::vector<State> chosen;
  chosen.reserve(take);
  for (std::size_t k = 0; k < take; ++k) chosen.push_back(probes[rank[k]]);
  return chosen;
}

}  // namespace

void EngineConfig::validate() const {
  if (rank < 1) throw std::invalid_argument("K must be >= 1");
  if (num_landmarks < rank) throw std::invalid_argument("L must be >= K");
  if (num_initial < num_landmarks) throw std::invalid_argument("T must be >= L");
  if (budget < num_initial) throw std::invalid_argument("budget M must be >= T");
  if (max_effort < 1) throw std::invalid_argument("mu must be >= 1");
  if (algorithm == Algorithm::kBaseline) {
    if (!(baseline_bandwidth > 0.0)) throw std::invalid_argument("baseline bandwidth must be > 0");
    if (baseline_effort < 1) throw std::invalid_argument("baseline effort must be >= 1");
  }
}

Eigen::VectorXd quantile_normalize(const Eigen::VectorXd& phi) {
  if (phi.size() == 0) throw std::invalid_argument("empty vector");
  std::vector<double> finite;
  for (double v : phi) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  if (finite.empty()) return Eigen::VectorXd::Zero(phi.size());
  const double med = median_of(finite);
  double denom = *std::max_element(finite.begin(), finite.end()) - med;
  if (denom == 0.0) denom = 1.0;
  return (phi.array() - med) / denom;
}

Eigen::VectorXd go_distribution(const Eigen::VectorXd& weights, const Eigen::VectorXd& objectives) {
  if (weights.size() != objectives.size() || weights.size() == 0) {
    throw std::invalid_argument("weights and objectives must be nonempty and equally long");
  }
  if (weights.size() == 1) return Eigen::VectorXd::Ones(1);
  Eigen::VectorXd log_w(weights.size());
  for (Eigen::Index j = 0; j < weights.size(); ++j) {
    log_w[j] = weights[j] > 0.0 ? std::log(weights[j]) : kNegInf;
  }
  Eigen::VectorXd exponent = quantile_normalize(log_w) - quantile_normalize(objectives);
  // Shift by the largest finite exponent so exp never overflows.
  double top = kNegInf;
  for (double v : exponent) {
    if (std::isfinite(v)) top = std::max(top, v);
  }
  Eigen::VectorXd p(exponent.size());
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    p[j] = std::isfinite(exponent[j]) ? std::exp(exponent[j] - top) : 0.0;
  }
  return p / p.sum();
}

std::size_t exploration_effort(double f_prev, double f_last, double prior_effort, std::size_t cap) {
  const double scaled = std::max(1.0, std::exp2(-(f_last - f_prev)) * prior_effort);
  return static_cast<std::size_t>(std::ceil(std::min(scaled, static_cast<double>(cap))));
}

Eigen::MatrixXd standardize_rows(const Eigen::MatrixXd& objectives) {
  Eigen::MatrixXd out = objectives;
  const Eigen::Index n = objectives.cols();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double mean = out.row(i).mean();
    out.row(i).array() -= mean;
    if (n < 2) continue;
    const double sd = std::sqrt(out.row(i).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0.0) out.row(i) /= sd;
  }
  return out;
}

Eigen::VectorXd pareto_domination(const Eigen::MatrixXd& objectives) {
  const Eigen::Index n = objectives.cols();
  Eigen::VectorXd out(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index k = 0; k < n; ++k) {
      worst = std::max(worst, (objectives.col(j) - objectives.col(k)).minCoeff());
    }
    out[j] = worst;
  }
  return out;
}

BandwidthResult adapt_bandwidth(const LocalGenerator& local, const State& base, double initial,
                                const CellId& base_cell, const Dissimilarity& dis,
                                std::span<const State> landmarks, std::size_t rank,
                                std::size_t max_effort, Rng& rng) {
  if (!(initial > 0.0)) throw std::invalid_argument("initial bandwidth must be positive");
  BandwidthResult out;
  out.bandwidth = initial;
  const std::size_t count = 2 * max_effort;
  const double needed = static_cast<double>(count) / 4.0;
  out.probes.resize(count);
  for (;;) {
    std::size_t in_cell = 0;
    for (State& p : out.probes) {
      p = local(base, out.bandwidth, rng);
      if (state_cell(dis, landmarks, rank, p) == base_cell) ++in_cell;
    }
    if (static_cast<double>(in_cell) >= needed) return out;
    if (out.halvings == kMaxHalvings) {
      throw NonLocalizingGeneratorError("local generator never concentrated probes in the base cell");
    }
    out.bandwidth /= 2.0;
    ++out.halvings;
  }
}

std::size_t sample_index(const Eigen::VectorXd& p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double cdf = 0.0;
  std::size_t last_positive = 0;
  for (Eigen::Index j = 0; j < p.size(); ++j) {
    cdf += p[j];
    if (p[j] > 0.0) last_positive = static_cast<std::size_t>(j);
    if (u < cdf) return static_cast<std::size_t>(j);
  }
  return last_positive;
}

std::vector<double> evaluate_batch(const Objective& f, std::span<const State> states,
                                   std::size_t workers) {
  std::vector<double> out(states.size());
  const std::size_t threads = std::min(std::max<std::size_t>(workers, 1), states.size());
  if (threads <= 1) {
    for (std::size_t i = 0; i < states.size(); ++i) out[i] = f(states[i]);
    return out;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < states.size(); i += threads) out[i] = f(states[i]);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::vector<std::size_t> elite_indices(std::span<const HistoryEntry> history, int epoch) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (history[i].reign == epoch) out.push_back(i);
  }
  return out;
}

RunResult run_go_explore(const ProblemDefinition& problem, const EngineConfig& cfg,
                         const ProgressSink& progress) {
  Session s(problem, cfg);
  s.report(0, elite_indices(s.history(), s.epoch()).size(), progress);
  int stalled = 0;
  while (!s.exhausted()) {
    const EliteView elites = current_elites(s);
    s.begin_epoch();

    Eigen::VectorXd f(static_cast<Eigen::Index>(elites.index.size()));
    for (std::size_t k = 0; k < elites.index.size(); ++k) {
      f[static_cast<Eigen::Index>(k)] = s.history()[elites.index[k]].objective;
    }
    const Eigen::VectorXd go = go_distribution(elites.weighting.components, f);
    const std::size_t expeditions = expedition_count(go);

    double global_min = std::numeric_limits<double>::infinity();
    double global_max = -global_min;
    for (const auto& e : s.history()) {
      global_min = std::min(global_min, e.objective);
      global_max = std::max(global_max, e.objective);
    }

    std::vector<State> batch;
    std::set<State> pending;
    for (std::size_t x = 0; x < expeditions && batch.size() < s.remaining(); ++x) {
      for (State& p : expedition(s, elites, go, pending, s.remaining() - batch.size(), global_min,
                                 global_max)) {
        pending.insert(p);
        batch.push_back(std::move(p));
      }
    }
    stalled = batch.empty() ? stalled + 1 : 0;
    if (stalled >= kMaxStalledEpochs) {
      throw std::runtime_error("search stalled: no new states in " +
                               std::to_string(kMaxStalledEpochs) + " consecutive epochs");
    }
    s.commit(batch);
    s.report(expeditions, elites.index.size(), progress);
  }
  return std::move(s).finish();
}

RunResult run_baseline(const ProblemDefinition& problem, const EngineConfig& cfg,
                       const ProgressSink& progress) {
  Session s(problem, cfg);
  s.report(0, elite_indices(s.history(), s.epoch()).size(), progress);
  while (!s.exhausted()) {
    const EliteView elites = current_elites(s);
    s.begin_epoch();
    const Eigen::VectorXd p = max_diversity_distribution(elites.weighting);
    const double n = static_cast<double>(elites.index.size());
    const auto expeditions = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n * std::log(n))));

    std::vector<State> batch;
    for (std::size_t x = 0; x < expeditions && batch.size() < s.remaining(); ++x) {
      const State& base = elites.states[sample_index(p, s.rng())];
      for (std::size_t j = 0; j < cfg.baseline_effort && batch.size() < s.remaining(); ++j) {
        batch.push_back(problem.local_generator(base, cfg.baseline_bandwidth, s.rng()));
      }
    }
    s.commit(batch);
    s.report(expeditions, elites.index.size(), progress);
  }
  return std::move(s).finish();
}

RunResult run(const ProblemDefinition& problem, const EngineConfig& cfg, const ProgressSink& progress) {
  return cfg.algorithm == Algorithm::kBaseline ? run_baseline(problem, cfg, progress)
                                               : run_go_explore(problem, cfg, progress);
}

}  // namespace goex
