#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "mgnc/datasets.hpp"
#include "mgnc/errors.hpp"
#include "mgnc/metrics.hpp"
#include "mgnc/training.hpp"

#include <json.hpp>

namespace mgnc {

enum class Variant { cnn, ccnn, mg, mgnc };

inline const char* to_string(Variant v) {
  switch (v) {
    case Variant::cnn: return "cnn";
    case Variant::ccnn: return "ccnn";
    case Variant::mg: return "mg";
    default: return "mgnc";
  }
}

inline Variant variant_from_string(const std::string& s) {
  if (s == "cnn") return Variant::cnn;
  if (s == "ccnn") return Variant::ccnn;
  if (s == "mg") return Variant::mg;
  if (s == "mgnc") return Variant::mgnc;
  throw UsageError("unknown variant: " + s);
}

/// A classification task ready for trials: encoded examples, aligned
/// embedding groups, and the reporting metric.
struct TaskData {
  Vocabulary vocab;
  std::vector<EncodedExample> examples;
  int n_classes = 2;
  std::vector<EmbeddingGroup<double>> groups;
  Metric metric = Metric::accuracy;

  std::string group_names() const {
    std::string s;
    for (const auto& g : groups) {
      if (!s.empty()) s += "+";
      s += g.name;
    }
    return s;
  }
};

struct TrialResult {
  Variant variant = Variant::cnn;
  std::string groups;
  std::vector<double> lambdas;
  std::uint64_t seed = 0;
  int fold = 0;
  Metric metric = Metric::accuracy;
  double value = 0;
};

/// The embedding groups a variant actually trains on: the first group for
/// cnn, one concatenated synthetic group for ccnn, all groups otherwise.
inline std::vector<EmbeddingGroup<double>> variant_groups(
    Variant v, const std::vector<EmbeddingGroup<double>>& base) {
  if (base.empty()) throw UsageError("variant_groups: no embedding groups");
  switch (v) {
    case Variant::cnn:
      return {base.front()};
    case Variant::ccnn:
      if (base.size() < 2)
        throw UsageError("ccnn requires at least two embedding groups");
      return {make_ccnn_group(base)};
    default:
      return base;
  }
}

/// The number of lambda values a variant's grid tuples carry.
inline std::size_t lambda_arity(Variant v, std::size_t n_groups) {
  return v == Variant::mgnc ? n_groups : 1;
}

inline RegularizationSpec make_reg_spec(Variant v,
                                        const std::vector<double>& lambdas,
                                        ConstraintTarget target,
                                        double dropout_p) {
  RegularizationSpec spec;
  spec.mode = v == Variant::mgnc ? ConstraintMode::per_group
                                 : ConstraintMode::single_lambda;
  spec.target = target;
  spec.lambdas = lambdas;
  spec.dropout_p = dropout_p;
  return spec;
}

namespace detail {
inline std::vector<EncodedExample> subset(
    const std::vector<EncodedExample>& all,
    const std::vector<std::size_t>& idx) {
  std::vector<EncodedExample> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all[i]);
  return out;
}
}  // namespace detail

template <class T>
struct TrialOutput {
  double dev_metric = 0;   // best-epoch dev metric (NaN without a dev set)
  double test_metric = 0;  // NaN without a test set
  TrainResult<T> trained;
};

/// One full train(+test) run of a variant with fixed lambdas and seed.
template <class T = double>
TrialOutput<T> run_trial(const TaskData& task, const Fold& fold, Variant v,
                         const TrainConfig& cfg, const RegularizationSpec& reg,
                         std::uint64_t seed,
                         const BatchHook<T>& after_batch = nullptr) {
  Rng rng(seed);
  auto base = variant_groups(v, task.groups);
  std::vector<EmbeddingGroup<T>> groups;
  for (auto& g : base) groups.push_back(g.template cast<T>());
  auto params = init_model<T>(std::move(groups), cfg.heights,
                              cfg.maps_per_height, task.n_classes, cfg.act,
                              rng);

  const auto train_ex = detail::subset(task.examples, fold.train);
  const auto dev_ex = detail::subset(task.examples, fold.dev);

  TrialOutput<T> out;
  out.trained = train<T>(std::move(params), train_ex, dev_ex, cfg, reg,
                         task.metric, rng, after_batch);
  out.dev_metric = std::numeric_limits<double>::quiet_NaN();
  for (const auto& row : out.trained.history)
    if (row.epoch == out.trained.best_epoch) out.dev_metric = row.dev_metric;
  out.test_metric = std::numeric_limits<double>::quiet_NaN();
  if (!fold.test.empty()) {
    const auto test_ex = detail::subset(task.examples, fold.test);
    out.test_metric = evaluate_metric(out.trained.params, test_ex,
                                      static_cast<T>(reg.dropout_p),
                                      task.metric, cfg.h_max());
  }
  return out;
}

/// Run fn(0..n-1) on up to n_threads workers. Work items must be
/// independent; results keyed by index so scheduling does not affect output.
template <class Fn>
void parallel_for(std::size_t n, int n_threads, Fn&& fn) {
  if (n_threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> workers;
  const int count = std::min<std::size_t>(static_cast<std::size_t>(n_threads), n);
  std::exception_ptr error;
  std::mutex error_mu;
  for (int t = 0; t < count; ++t) {
    workers.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& w : workers) w.join();
  if (error) std::rethrow_exception(error);
}

struct RepeatResult {
  Summary summary;
  std::vector<TrialResult> trials;
  std::size_t n_effective = 0;
  std::vector<std::string> errors;
};

/// Repeat a trial with seeds base_seed .. base_seed+n-1 and aggregate.
/// Failed trials are recorded and skipped.
inline RepeatResult repeat_runs(const TaskData& task, const Fold& fold,
                                Variant v, const TrainConfig& cfg,
                                const RegularizationSpec& reg, std::size_t n,
                                std::uint64_t base_seed, int n_threads = 1) {
  if (n < 1) throw UsageError("repeat_runs: n must be >= 1");
  std::vector<double> values(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<std::string> errors(n);
  parallel_for(n, n_threads, [&](std::size_t i) {
    try {
      const auto out =
          run_trial<double>(task, fold, v, cfg, reg, base_seed + i);
      values[i] = fold.test.empty() ? out.dev_metric : out.test_metric;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  RepeatResult result;
  std::vector<double> ok;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i].empty()) {
      result.errors.push_back(errors[i]);
      continue;
    }
    ok.push_back(values[i]);
    result.trials.push_back(TrialResult{v, task.group_names(), reg.lambdas,
                                        base_seed + i, 0, task.metric,
                                        values[i]});
  }
  result.n_effective = ok.size();
  if (ok.empty()) throw NumericError("repeat_runs: all trials failed");
  result.summary = summarize(ok);
  return result;
}

struct GridPoint {
  std::vector<double> lambdas;
  double score = 0;  // mean dev metric over repetitions
};

struct GridResult {
  std::vector<double> best_lambdas;
  double best_score = 0;
  std::vector<GridPoint> points;  // full Cartesian product
};

/// Exhaustive dev-split search over the Cartesian product of grid values
/// (arity 1, or one lambda per group for mgnc). Ties break toward the
/// lexicographically smallest tuple, independent of grid order.
inline GridResult grid_search(const TaskData& task, const Fold& fold,
                              Variant v, const TrainConfig& cfg,
                              double dropout_p, ConstraintTarget target,
                              std::vector<double> grid, std::size_t reps,
                              std::uint64_t base_seed, int n_threads = 1) {
  if (grid.empty()) throw UsageError("grid_search: empty grid");
  if (reps < 1) throw UsageError("grid_search: reps must be >= 1");
  if (fold.dev.empty()) throw UsageError("grid_search: no dev split");
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  const std::size_t arity = lambda_arity(v, task.groups.size());
  std::size_t n_points = 1;
  for (std::size_t i = 0; i < arity; ++i) n_points *= grid.size();

  GridResult result;
  result.points.resize(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    std::vector<double> tuple(arity);
    std::size_t rem = p;
    for (std::size_t a = arity; a-- > 0;) {
      tuple[a] = grid[rem % grid.size()];
      rem /= grid.size();
    }
    result.points[p].lambdas = std::move(tuple);
  }

  parallel_for(n_points, n_threads, [&](std::size_t p) {
    const auto reg =
        make_reg_spec(v, result.points[p].lambdas, target, dropout_p);
    double sum = 0;
    for (std::size_t r = 0; r < reps; ++r) {
      const auto out =
          run_trial<double>(task, fold, v, cfg, reg, base_seed + r);
      sum += out.dev_metric;
    }
    result.points[p].score = sum / static_cast<double>(reps);
  });

  // Points were generated in lexicographic tuple order over the sorted
  // grid, so the first strict maximum is the tie-break winner.
  std::size_t best = 0;
  for (std::size_t p = 1; p < n_points; ++p)
    if (result.points[p].score > result.points[best].score) best = p;
  result.best_lambdas = result.points[best].lambdas;
  result.best_score = result.points[best].score;
  return result;
}

struct CvFoldOutcome {
  GridResult grid;
  double test_metric = 0;
};

struct CvResult {
  Summary summary;
  std::vector<CvFoldOutcome> folds;
  std::vector<TrialResult> trials;
};

/// Per fold: grid search on the nested dev set, retrain on the fold's full
/// training portion (train + dev) with the chosen lambdas, evaluate on the
/// fold's test slice; aggregate over folds.
inline CvResult cross_validate(const TaskData& task, const SplitPlan& plan,
                               Variant v, const TrainConfig& cfg,
                               double dropout_p, ConstraintTarget target,
                               const std::vector<double>& grid,
                               std::size_t reps, std::uint64_t seed,
                               int n_threads = 1) {
  if (plan.folds.empty()) throw UsageError("cross_validate: empty plan");
  CvResult result;
  std::vector<double> values;
  for (std::size_t fi = 0; fi < plan.folds.size(); ++fi) {
    const Fold& fold = plan.folds[fi];
    CvFoldOutcome outcome;
    outcome.grid = grid_search(task, fold, v, cfg, dropout_p, target, grid,
                               reps, seed + fi * 1000, n_threads);
    Fold retrain_fold;
    retrain_fold.train = fold.train;
    retrain_fold.train.insert(retrain_fold.train.end(), fold.dev.begin(),
                              fold.dev.end());
    retrain_fold.test = fold.test;
    const auto reg =
        make_reg_spec(v, outcome.grid.best_lambdas, target, dropout_p);
    const auto out =
        run_trial<double>(task, retrain_fold, v, cfg, reg, seed + fi);
    outcome.test_metric = out.test_metric;
    values.push_back(out.test_metric);
    result.trials.push_back(TrialResult{v, task.group_names(),
                                        outcome.grid.best_lambdas, seed + fi,
                                        static_cast<int>(fi), task.metric,
                                        out.test_metric});
    result.folds.push_back(std::move(outcome));
  }
  result.summary = summarize(values);
  return result;
}

// ---- result serialization ----------------------------------------------

inline std::string lambdas_to_string(const std::vector<double>& lambdas) {
  std::string s;
  char buf[32];
  for (double l : lambdas) {
    if (!s.empty()) s += ";";
    std::snprintf(buf, sizeof(buf), "%.17g", l);
    s += buf;
  }
  return s;
}

inline void write_results_csv(const std::string& path,
                              const std::vector<TrialResult>& trials) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "variant,groups,lambda,seed,fold,metric,value\n";
  char buf[32];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof(buf), "%.17g", t.value);
    out << to_string(t.variant) << ',' << t.groups << ','
        << lambdas_to_string(t.lambdas) << ',' << t.seed << ',' << t.fold
        << ',' << to_string(t.metric) << ',' << buf << '\n';
  }
}

inline void write_history_csv(const std::string& path, const History& h) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << "epoch,train_loss,dev_metric\n";
  char buf[64];
  for (const auto& row : h) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g", row.epoch,
                  row.train_loss, row.dev_metric);
    out << buf << '\n';
  }
}

/// Best-lambda table export (one row per variant/grouping).
inline nlohmann::json grid_result_json(Variant v, const std::string& groups,
                                       const GridResult& grid) {
  nlohmann::json j;
  j["variant"] = to_string(v);
  j["groups"] = groups;
  j["best_lambda"] = grid.best_lambdas;
  j["best_dev_score"] = grid.best_score;
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : grid.points)
    pts.push_back({{"lambda", p.lambdas}, {"dev_score", p.score}});
  j["points"] = pts;
  return j;
}

}  // namespace mgnc
