// Command-line driver: dataset ingestion, training, evaluation, lambda grid
// search, cross validation, gradient checking and synthetic data generation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <tuple>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgnc/checkpoint.hpp"
#include "mgnc/datasets.hpp"
#include "mgnc/embeddings.hpp"
#include "mgnc/errors.hpp"
#include "mgnc/evaluation.hpp"
#include "mgnc/gradcheck.hpp"
#include "mgnc/synthetic.hpp"
#include "mgnc/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mgnc;

namespace {

struct EmbeddingSpec {
  std::string name, path, format = "text";  // text | word2vec
  bool trainable = true;
};

struct ExperimentConfig {
  std::string data;
  std::string split = "fixed";  // fixed | kfold
  double train_frac = 0.8, dev_frac = 0.1;
  std::size_t kfold_k = 10;
  double nested_dev_frac = 0.1;
  std::vector<EmbeddingSpec> embeddings;
  std::string variant = "cnn";
  std::vector<int> heights = {3, 4, 5};
  int maps = 100;
  std::size_t batch_size = 50;
  int epochs = 25;
  std::string activation = "relu";
  double dropout = 0.5;
  std::string constraint_target = "weights";  // weights | activations
  std::vector<double> lambdas = {1e9};
  std::vector<double> lambda_grid = {1.0 / 3, 1, 3, 9, 81, 243};
  std::size_t repetitions = 10;
  std::uint64_t seed = 1;
  int parallel = 1;
  int precision = 64;
  std::string metric = "accuracy";  // accuracy | auc
  std::string tokenizer = "cleaned";
  std::size_t min_length = 0;  // filter_short on training portions when > 0
  bool undersample = false;
  std::string out = "out";
};

json to_json(const ExperimentConfig& c) {
  json j;
  j["data"] = c.data;
  j["split"] = c.split;
  j["train_frac"] = c.train_frac;
  j["dev_frac"] = c.dev_frac;
  j["kfold_k"] = c.kfold_k;
  j["nested_dev_frac"] = c.nested_dev_frac;
  j["embeddings"] = json::array();
  for (const auto& e : c.embeddings)
    j["embeddings"].push_back({{"name", e.name},
                               {"path", e.path},
                               {"format", e.format},
                               {"trainable", e.trainable}});
  j["variant"] = c.variant;
  j["heights"] = c.heights;
  j["maps"] = c.maps;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["activation"] = c.activation;
  j["dropout"] = c.dropout;
  j["constraint_target"] = c.constraint_target;
  j["lambdas"] = c.lambdas;
  j["lambda_grid"] = c.lambda_grid;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  j["parallel"] = c.parallel;
  j["precision"] = c.precision;
  j["metric"] = c.metric;
  j["tokenizer"] = c.tokenizer;
  j["min_length"] = c.min_length;
  j["undersample"] = c.undersample;
  j["out"] = c.out;
  return j;
}

void from_json(const json& j, ExperimentConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("data", c.data);
  get("split", c.split);
  get("train_frac", c.train_frac);
  get("dev_frac", c.dev_frac);
  get("kfold_k", c.kfold_k);
  get("nested_dev_frac", c.nested_dev_frac);
  if (j.contains("embeddings")) {
    c.embeddings.clear();
    for (const auto& je : j.at("embeddings")) {
      EmbeddingSpec e;
      je.at("name").get_to(e.name);
      je.at("path").get_to(e.path);
      if (je.contains("format")) je.at("format").get_to(e.format);
      if (je.contains("trainable")) je.at("trainable").get_to(e.trainable);
      c.embeddings.push_back(std::move(e));
    }
  }
  get("variant", c.variant);
  get("heights", c.heights);
  get("maps", c.maps);
  get("batch_size", c.batch_size);
  get("epochs", c.epochs);
  get("activation", c.activation);
  get("dropout", c.dropout);
  get("constraint_target", c.constraint_target);
  get("lambdas", c.lambdas);
  get("lambda_grid", c.lambda_grid);
  get("repetitions", c.repetitions);
  get("seed", c.seed);
  get("parallel", c.parallel);
  get("precision", c.precision);
  get("metric", c.metric);
  get("tokenizer", c.tokenizer);
  get("min_length", c.min_length);
  get("undersample", c.undersample);
  get("out", c.out);
}

/// "name=path:format[:frozen]" flag parser.
EmbeddingSpec parse_embedding_flag(const std::string& raw) {
  EmbeddingSpec e;
  const auto eq = raw.find('=');
  if (eq == std::string::npos)
    throw UsageError("--embedding expects name=path:format[:frozen], got: " +
                     raw);
  e.name = raw.substr(0, eq);
  std::string rest = raw.substr(eq + 1);
  if (rest.size() >= 7 && rest.substr(rest.size() - 7) == ":frozen") {
    e.trainable = false;
    rest = rest.substr(0, rest.size() - 7);
  }
  const auto colon = rest.rfind(':');
  if (colon != std::string::npos &&
      (rest.substr(colon + 1) == "text" ||
       rest.substr(colon + 1) == "word2vec")) {
    e.format = rest.substr(colon + 1);
    rest = rest.substr(0, colon);
  }
  e.path = rest;
  if (e.name.empty() || e.path.empty())
    throw UsageError("--embedding expects name=path:format[:frozen], got: " +
                     raw);
  return e;
}

Activation activation_from_string(const std::string& s) {
  if (s == "relu") return Activation::relu;
  if (s == "tanh") return Activation::tanh;
  if (s == "identity") return Activation::identity;
  throw UsageError("unknown activation: " + s);
}

Metric metric_from_string(const std::string& s) {
  if (s == "accuracy") return Metric::accuracy;
  if (s == "auc") return Metric::auc;
  throw UsageError("unknown metric: " + s);
}

ConstraintTarget target_from_string(const std::string& s) {
  if (s == "weights") return ConstraintTarget::classifier_weights;
  if (s == "activations") return ConstraintTarget::activations;
  throw UsageError("unknown constraint target: " + s);
}

TrainConfig make_train_config(const ExperimentConfig& c) {
  TrainConfig cfg;
  cfg.heights = c.heights;
  cfg.maps_per_height = c.maps;
  cfg.batch_size = c.batch_size;
  cfg.epochs = c.epochs;
  cfg.act = activation_from_string(c.activation);
  cfg.seed = c.seed;
  cfg.precision = c.precision;
  cfg.validate();
  return cfg;
}

void validate_config(const ExperimentConfig& c) {
  if (c.data.empty()) throw UsageError("config: data path is required");
  if (!fs::exists(c.data))
    throw UsageError("config: data file not readable: " + c.data);
  if (c.embeddings.empty())
    throw UsageError("config: at least one embedding is required");
  for (const auto& e : c.embeddings) {
    if (!fs::exists(e.path))
      throw UsageError("config: embedding file not readable: " + e.path);
    if (e.format != "text" && e.format != "word2vec")
      throw UsageError("config: embedding format must be text or word2vec");
  }
  variant_from_string(c.variant);
  metric_from_string(c.metric);
  target_from_string(c.constraint_target);
  activation_from_string(c.activation);
  if (c.split != "fixed" && c.split != "kfold")
    throw UsageError("config: split must be fixed or kfold");
  if (c.precision != 32 && c.precision != 64)
    throw UsageError("config: precision must be 32 or 64");
  if (c.parallel < 1) throw UsageError("config: parallel must be >= 1");
}

struct LoadedTask {
  TaskData task;
  SplitPlan plan;
};

/// Corpus + embeddings + splits, with the preprocessing rules applied:
/// optional class balancing on the whole dataset, optional short-phrase
/// filtering on training portions only.
LoadedTask load_task(const ExperimentConfig& c) {
  validate_config(c);
  const auto mode = c.tokenizer == "whitespace" ? TokenizeMode::whitespace
                                                : TokenizeMode::cleaned;
  auto corpus = load_tsv(c.data, mode);
  if (corpus.skipped_empty > 0)
    std::cerr << "warning: skipped " << corpus.skipped_empty
              << " empty-text lines\n";
  auto examples = std::move(corpus.examples);
  if (c.undersample) {
    Rng rng(c.seed ^ 0x5eedbaULL);
    examples = undersample_majority(examples, rng);
  }
  if (examples.empty()) throw UsageError("dataset is empty");

  std::vector<std::vector<std::string>> corpora;
  for (const auto& e : examples) corpora.push_back(e.tokens);

  LoadedTask out;
  out.task.vocab = Vocabulary::build(corpora);
  out.task.n_classes = static_cast<int>(corpus.label_names.size());
  out.task.metric = metric_from_string(c.metric);
  out.task.examples = encode(examples, out.task.vocab);

  for (const auto& e : c.embeddings) {
    Rng rng(c.seed ^ std::hash<std::string>{}(e.name));
    auto g = e.format == "word2vec"
                 ? load_word2vec_binary(e.path, out.task.vocab, rng, e.name,
                                        e.trainable)
                 : load_text_vectors(e.path, out.task.vocab, rng, e.name,
                                     e.trainable);
    out.task.groups.push_back(std::move(g));
  }

  const auto strategy =
      c.split == "kfold"
          ? SplitStrategy::kfold(c.kfold_k, c.nested_dev_frac)
          : SplitStrategy::fixed(c.train_frac, c.dev_frac);
  out.plan = make_splits(out.task.examples.size(), strategy, c.seed);

  if (c.min_length > 0) {
    for (auto& fold : out.plan.folds) {
      std::vector<std::size_t> kept;
      for (std::size_t i : fold.train)
        if (out.task.examples[i].idx.size() >= c.min_length) kept.push_back(i);
      if (kept.empty())
        throw UsageError("min_length filter left an empty training set");
      fold.train = std::move(kept);
    }
  }
  return out;
}

void write_snapshot(const ExperimentConfig& c, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream out(dir / "config.json");
  out << to_json(c).dump(2) << "\n";
}

/// Effective variant after the single-group reduction, with a warning.
Variant effective_variant(const ExperimentConfig& c, std::size_t n_groups) {
  Variant v = variant_from_string(c.variant);
  if (n_groups == 1 && (v == Variant::mg || v == Variant::mgnc)) {
    std::cerr << "warning: " << c.variant
              << " with one embedding group behaves as cnn\n";
  }
  return v;
}

std::vector<double> effective_lambdas(Variant v, std::size_t n_groups,
                                      const std::vector<double>& lambdas) {
  const std::size_t arity = lambda_arity(v, n_groups);
  if (lambdas.size() == arity) return lambdas;
  if (lambdas.size() == 1)
    return std::vector<double>(arity, lambdas[0]);
  throw UsageError("expected " + std::to_string(arity) +
                   " lambda value(s), got " + std::to_string(lambdas.size()));
}

// ---- subcommands --------------------------------------------------------

int cmd_train(const ExperimentConfig& c) {
  auto loaded = load_task(c);
  const auto cfg = make_train_config(c);
  const Variant v = effective_variant(c, loaded.task.groups.size());
  const auto lambdas =
      effective_lambdas(v, loaded.task.groups.size(), c.lambdas);
  const auto reg =
      make_reg_spec(v, lambdas, target_from_string(c.constraint_target),
                    c.dropout);
  const Fold& fold = loaded.plan.folds.front();

  const fs::path dir(c.out);
  write_snapshot(c, dir);

  Checkpoint ck;
  History history;
  if (c.precision == 64) {
    auto out = run_trial<double>(loaded.task, fold, v, cfg, reg, c.seed);
    ck.params = std::move(out.trained.params);
    history = out.trained.history;
  } else {
    auto out = run_trial<float>(loaded.task, fold, v, cfg, reg, c.seed);
    ck.params = out.trained.params.cast<double>();
    history = out.trained.history;
  }
  ck.vocab = loaded.task.vocab;
  ck.heights = cfg.heights;
  ck.maps_per_height = cfg.maps_per_height;
  ck.dropout_p = c.dropout;
  save_checkpoint((dir / "checkpoint.bin").string(), ck);
  write_history_csv((dir / "history.csv").string(), history);

  double best = 0;
  int best_epoch = 0;
  for (const auto& row : history)
    if (!std::isnan(row.dev_metric) && row.dev_metric > best) {
      best = row.dev_metric;
      best_epoch = row.epoch;
    }
  std::cout << "trained " << to_string(v) << " for " << history.size()
            << " epochs; best dev " << to_string(loaded.task.metric) << " "
            << best << " at epoch " << best_epoch << "\n";
  std::cout << "wrote " << (dir / "checkpoint.bin").string() << "\n";
  return 0;
}

int cmd_evaluate(const ExperimentConfig& c, const std::string& checkpoint,
                 const std::string& on) {
  if (c.data.empty()) throw UsageError("config: data path is required");
  auto ck = load_checkpoint(checkpoint);

  const auto mode = c.tokenizer == "whitespace" ? TokenizeMode::whitespace
                                                : TokenizeMode::cleaned;
  auto corpus = load_tsv(c.data, mode);
  auto examples = std::move(corpus.examples);
  if (c.undersample) {
    Rng rng(c.seed ^ 0x5eedbaULL);
    examples = undersample_majority(examples, rng);
  }
  // Tokens unseen at training time are dropped (they have no embedding row).
  std::vector<EncodedExample> encoded;
  std::size_t dropped_tokens = 0;
  for (const auto& e : examples) {
    EncodedExample enc;
    enc.label = e.label;
    for (const auto& t : e.tokens) {
      const int id = ck.vocab.lookup(t);
      if (id > 0) enc.idx.push_back(id);
      else ++dropped_tokens;
    }
    if (!enc.idx.empty()) encoded.push_back(std::move(enc));
  }
  if (dropped_tokens > 0)
    std::cerr << "warning: dropped " << dropped_tokens
              << " tokens unseen at training time\n";
  if (encoded.empty()) throw UsageError("no evaluable examples");

  const auto strategy =
      c.split == "kfold"
          ? SplitStrategy::kfold(c.kfold_k, c.nested_dev_frac)
          : SplitStrategy::fixed(c.train_frac, c.dev_frac);
  const auto plan = make_splits(encoded.size(), strategy, c.seed);
  const Fold& fold = plan.folds.front();
  const auto& idx = on == "dev"     ? fold.dev
                    : on == "train" ? fold.train
                                    : fold.test;
  std::vector<EncodedExample> subset;
  if (on == "all") subset = encoded;
  else
    for (std::size_t i : idx) subset.push_back(encoded[i]);
  if (subset.empty()) throw UsageError("selected split is empty");

  std::size_t h_max = 1;
  for (int h : ck.heights) h_max = std::max(h_max, static_cast<std::size_t>(h));
  const Metric metric = metric_from_string(c.metric);
  const double value = evaluate_metric(ck.params, subset, ck.dropout_p,
                                       metric, h_max);
  std::cout << to_string(metric) << " on " << on << ": " << value << "\n";

  const fs::path dir(c.out);
  fs::create_directories(dir);
  json j;
  j["metric"] = to_string(metric);
  j["split"] = on;
  j["value"] = value;
  j["n"] = subset.size();
  std::ofstream outf(dir / "metrics.json");
  outf << j.dump(2) << "\n";
  return 0;
}

int cmd_gridsearch(const ExperimentConfig& c) {
  if (c.lambda_grid.empty()) throw UsageError("lambda grid must be non-empty");
  auto loaded = load_task(c);
  const auto cfg = make_train_config(c);
  const Variant v = effective_variant(c, loaded.task.groups.size());
  const Fold& fold = loaded.plan.folds.front();
  if (fold.dev.empty()) throw UsageError("grid search needs a dev split");

  const fs::path dir(c.out);
  write_snapshot(c, dir);

  const auto grid = grid_search(
      loaded.task, fold, v, cfg, c.dropout,
      target_from_string(c.constraint_target), c.lambda_grid, c.repetitions,
      c.seed, c.parallel);

  std::ofstream jf(dir / "gridsearch.json");
  jf << grid_result_json(v, loaded.task.group_names(), grid).dump(2) << "\n";
  std::ofstream cf(dir / "gridsearch.csv");
  cf << "lambda,dev_score\n";
  char buf[32];
  for (const auto& p : grid.points) {
    std::snprintf(buf, sizeof(buf), "%.17g", p.score);
    cf << lambdas_to_string(p.lambdas) << "," << buf << "\n";
  }
  std::cout << "evaluated " << grid.points.size() << " grid points\n";
  std::cout << "best lambda (" << lambdas_to_string(grid.best_lambdas)
            << ") dev " << to_string(loaded.task.metric) << " "
            << grid.best_score << "\n";
  return 0;
}

int cmd_cv(const ExperimentConfig& c) {
  ExperimentConfig cc = c;
  cc.split = "kfold";
  auto loaded = load_task(cc);
  const auto cfg = make_train_config(cc);
  const Variant v = effective_variant(cc, loaded.task.groups.size());

  const fs::path dir(c.out);
  write_snapshot(cc, dir);

  const auto cv = cross_validate(
      loaded.task, loaded.plan, v, cfg, c.dropout,
      target_from_string(c.constraint_target), c.lambda_grid, c.repetitions,
      c.seed, c.parallel);
  write_results_csv((dir / "results.csv").string(), cv.trials);
  std::ofstream sf(dir / "summary.csv");
  sf << "variant,groups,metric,n,summary\n";
  sf << to_string(v) << "," << loaded.task.group_names() << ","
     << to_string(loaded.task.metric) << "," << cv.summary.n << ",\""
     << format_summary(cv.summary) << "\"\n";
  std::cout << to_string(v) << " " << to_string(loaded.task.metric) << " "
            << format_summary(cv.summary) << " over " << cv.folds.size()
            << " folds\n";
  return 0;
}

int cmd_gradcheck(const std::string& mode, int precision,
                  std::uint64_t seed) {
  if (precision != 64)
    throw UsageError("gradcheck requires --precision 64");
  std::vector<ConstraintTarget> targets;
  if (mode == "weights" || mode == "both")
    targets.push_back(ConstraintTarget::classifier_weights);
  if (mode == "activations" || mode == "both")
    targets.push_back(ConstraintTarget::activations);
  if (targets.empty())
    throw UsageError("gradcheck --mode must be weights, activations or both");

  bool ok = true;
  for (const auto target : targets) {
    const auto report = gradient_check(target, seed);
    // Aggregate per tensor class for the report.
    std::map<std::string, double> by_class;
    for (const auto& e : report.entries) {
      const auto cut = e.tensor.find('[');
      const std::string cls =
          cut == std::string::npos ? e.tensor : e.tensor.substr(0, cut);
      by_class[cls] = std::max(by_class[cls], e.max_rel_err);
    }
    const char* label = target == ConstraintTarget::activations
                            ? "activations"
                            : "weights";
    std::cout << "constraint target: " << label << "\n";
    for (const auto& [cls, err] : by_class)
      std::cout << "  " << cls << ": max relative error " << err << "\n";
    if (!report.pass(1e-4)) {
      ok = false;
      std::cout << "  FAIL (tolerance 1e-4); offending tensors:\n";
      for (const auto& e : report.entries)
        if (e.max_rel_err >= 1e-4)
          std::cout << "    " << e.tensor << " index " << e.worst_index
                    << " rel err " << e.max_rel_err << "\n";
    } else {
      std::cout << "  PASS (all tensors <= 1e-4)\n";
    }
  }
  if (!ok) {
    std::cerr << "gradient check failed\n";
    return 2;
  }
  return 0;
}

int cmd_synth(const std::string& task_name, std::size_t n_train,
              std::size_t n_test, std::size_t dim1, std::size_t dim2,
              std::uint64_t seed, const std::string& out_dir) {
  SyntheticTask task;
  if (task_name == "separable") task = SyntheticTask::separable;
  else if (task_name == "group_informative")
    task = SyntheticTask::group_informative;
  else
    throw UsageError("unknown synthetic task: " + task_name);

  SyntheticSizes sizes;
  sizes.n_train = n_train;
  sizes.n_test = n_test;
  sizes.dim1 = dim1;
  sizes.dim2 = dim2;
  Rng rng(seed);
  auto data = make_synthetic(task, sizes, rng);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream tsv(dir / "corpus.tsv");
    for (const auto& e : data.raw) {
      tsv << (e.label == 1 ? "pos" : "neg") << '\t';
      for (std::size_t i = 0; i < e.tokens.size(); ++i)
        tsv << (i ? " " : "") << e.tokens[i];
      tsv << '\n';
    }
  }
  for (std::size_t gi = 0; gi < data.task.groups.size(); ++gi) {
    const auto& g = data.task.groups[gi];
    std::vector<std::string> words;
    Matrix<double> vecs(g.table.rows - 1, g.dim);
    for (std::size_t r = 1; r < g.table.rows; ++r) {
      words.push_back(data.task.vocab.at(r));
      for (std::size_t c = 0; c < g.dim; ++c) vecs(r - 1, c) = g.table(r, c);
    }
    write_text_vectors((dir / (g.name + ".txt")).string(), words, vecs);
  }
  json j;
  j["task"] = task_name;
  j["n_train"] = n_train;
  j["n_test"] = n_test;
  j["dims"] = {dim1, dim2};
  j["seed"] = seed;
  j["groups"] = json::array();
  for (const auto& g : data.task.groups)
    j["groups"].push_back({{"name", g.name},
                           {"dim", g.dim},
                           {"trainable", g.trainable},
                           {"file", g.name + ".txt"}});
  std::ofstream mf(dir / "synth.json");
  mf << j.dump(2) << "\n";
  std::cout << "wrote " << (dir / "corpus.tsv").string() << " and "
            << data.task.groups.size() << " embedding files\n";
  return 0;
}

int cmd_report(const std::string& results_path, const std::string& out_path) {
  std::ifstream in(results_path);
  if (!in) throw FormatError("cannot open " + results_path);
  std::string line;
  if (!std::getline(in, line) ||
      line != "variant,groups,lambda,seed,fold,metric,value")
    throw FormatError(results_path + ": unexpected results header");

  struct Key {
    std::string variant, groups, lambda, metric;
    bool operator<(const Key& o) const {
      return std::tie(variant, groups, lambda, metric) <
             std::tie(o.variant, o.groups, o.lambda, o.metric);
    }
  };
  std::map<Key, std::vector<double>> buckets;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        cols.push_back(cur);
        cur.clear();
      } else cur.push_back(ch);
    }
    cols.push_back(cur);
    if (cols.size() != 7)
      throw FormatError(results_path + ": malformed row at line " +
                        std::to_string(line_no));
    buckets[{cols[0], cols[1], cols[2], cols[5]}].push_back(
        std::stod(cols[6]));
  }

  std::ostream* out = &std::cout;
  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path);
    if (!file) throw FormatError("cannot write " + out_path);
    out = &file;
  }
  *out << "variant,groups,lambda,metric,n,summary\n";
  for (const auto& [key, values] : buckets) {
    const auto s = summarize(values);
    *out << key.variant << ',' << key.groups << ',' << key.lambda << ','
         << key.metric << ',' << s.n << ",\"" << format_summary(s) << "\"\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-group CNN sentence classification engine"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string config_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config file");
    cmd->add_option("--data", cfg.data, "TSV corpus (label<TAB>text)");
    cmd->add_option_function<std::vector<std::string>>(
        "--embedding",
        [&](const std::vector<std::string>& raw) {
          // Flag-given embeddings replace any config-file list.
          cfg.embeddings.clear();
          for (const auto& r : raw)
            cfg.embeddings.push_back(parse_embedding_flag(r));
        },
        "Embedding group: name=path:format[:frozen] (repeatable)");
    cmd->add_option("--variant", cfg.variant, "cnn | ccnn | mg | mgnc");
    cmd->add_option("--heights", cfg.heights, "Filter heights");
    cmd->add_option("--maps", cfg.maps, "Feature maps per filter height");
    cmd->add_option("--batch-size", cfg.batch_size, "Mini-batch size");
    cmd->add_option("--epochs", cfg.epochs, "Training epochs");
    cmd->add_option("--activation", cfg.activation,
                    "relu | tanh | identity");
    cmd->add_option("--dropout", cfg.dropout, "Dropout probability on o");
    cmd->add_option("--constraint-target", cfg.constraint_target,
                    "weights | activations");
    cmd->add_option("--lambda", cfg.lambdas,
                    "Max-norm bound(s); one value, or one per group (mgnc)");
    cmd->add_option("--lambda-grid", cfg.lambda_grid, "Grid-search values");
    cmd->add_option("--repetitions", cfg.repetitions,
                    "Repetitions per configuration");
    cmd->add_option("--seed", cfg.seed, "Base random seed");
    cmd->add_option("--parallel", cfg.parallel, "Worker threads for trials");
    cmd->add_option("--precision", cfg.precision, "32 or 64");
    cmd->add_option("--metric", cfg.metric, "accuracy | auc");
    cmd->add_option("--tokenizer", cfg.tokenizer, "cleaned | whitespace");
    cmd->add_option("--min-length", cfg.min_length,
                    "Drop training sentences shorter than this");
    cmd->add_flag("--undersample", cfg.undersample,
                  "Balance binary classes by undersampling");
    cmd->add_option("--split", cfg.split, "fixed | kfold");
    cmd->add_option("--kfold-k", cfg.kfold_k, "Number of folds");
    cmd->add_option("--out", cfg.out, "Output directory");
  };

  auto* train_cmd = app.add_subcommand("train", "Train one model");
  add_common(train_cmd);

  auto* eval_cmd =
      app.add_subcommand("evaluate", "Evaluate a checkpoint on a split");
  std::string checkpoint_path, eval_on = "test";
  add_common(eval_cmd);
  eval_cmd->add_option("--checkpoint", checkpoint_path, "Checkpoint file")
      ->required();
  eval_cmd->add_option("--on", eval_on, "train | dev | test | all");

  auto* grid_cmd =
      app.add_subcommand("gridsearch", "Lambda grid search on the dev split");
  add_common(grid_cmd);

  auto* cv_cmd = app.add_subcommand(
      "cv", "K-fold cross validation with nested grid search");
  add_common(cv_cmd);

  auto* gc_cmd = app.add_subcommand(
      "gradcheck", "Verify analytic gradients against finite differences");
  std::string gc_mode = "both";
  int gc_precision = 64;
  std::uint64_t gc_seed = 7;
  gc_cmd->add_option("--mode", gc_mode, "weights | activations | both");
  gc_cmd->add_option("--precision", gc_precision, "Must be 64");
  gc_cmd->add_option("--seed", gc_seed, "Model seed");

  auto* synth_cmd =
      app.add_subcommand("synth", "Generate a synthetic dataset + embeddings");
  std::string synth_task = "separable", synth_out = "synth";
  std::size_t synth_train = 500, synth_test = 100, synth_d1 = 20,
              synth_d2 = 20;
  std::uint64_t synth_seed = 1;
  synth_cmd->add_option("--task", synth_task,
                        "separable | group_informative");
  synth_cmd->add_option("--train", synth_train, "Training examples");
  synth_cmd->add_option("--test", synth_test, "Test examples");
  synth_cmd->add_option("--dim1", synth_d1, "Group 1 dimensionality");
  synth_cmd->add_option("--dim2", synth_d2, "Group 2 dimensionality");
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");
  synth_cmd->add_option("--out", synth_out, "Output directory");

  auto* report_cmd =
      app.add_subcommand("report", "Summarize a results CSV (mean (min,max))");
  std::string report_in, report_out;
  report_cmd->add_option("--results", report_in, "results.csv path")
      ->required();
  report_cmd->add_option("--out", report_out,
                         "Summary CSV path (default: stdout)");

  // Two-pass parse: first to discover --config, then defaults from the file
  // with flags overriding.
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw UsageError("cannot open config file: " + config_path);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw FormatError(config_path + ": " + e.what());
      }
      ExperimentConfig from_file;
      from_json(j, from_file);
      // Flags override file values: reparse on top of the file config.
      cfg = from_file;
      std::vector<std::string> args(argv + 1, argv + argc);
      app.clear();
      try {
        app.parse(argc, argv);
      } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
      }
    }

    if (train_cmd->parsed()) return cmd_train(cfg);
    if (eval_cmd->parsed()) return cmd_evaluate(cfg, checkpoint_path, eval_on);
    if (grid_cmd->parsed()) return cmd_gridsearch(cfg);
    if (cv_cmd->parsed()) return cmd_cv(cfg);
    if (gc_cmd->parsed()) return cmd_gradcheck(gc_mode, gc_precision, gc_seed);
    if (synth_cmd->parsed())
      return cmd_synth(synth_task, synth_train, synth_test, synth_d1,
                       synth_d2, synth_seed, synth_out);
    if (report_cmd->parsed()) return cmd_report(report_in, report_out);
    throw UsageError("no subcommand given");
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
