#include "mgnc/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "mgnc/errors.hpp"

namespace mgnc {

std::vector<std::string> tokenize(const std::string& text, TokenizeMode mode) {
  std::string prepared;
  if (mode == TokenizeMode::cleaned) {
    prepared.reserve(text.size() * 2);
    for (char ch : text) {
      const unsigned char u = static_cast<unsigned char>(ch);
      switch (ch) {
        case ',': case '.': case '!': case '?':
        case '\'': case '"': case '(': case ')':
          prepared.push_back(' ');
          prepared.push_back(ch);
          prepared.push_back(' ');
          break;
        default:
          prepared.push_back(static_cast<char>(std::tolower(u)));
      }
    }
  } else {
    prepared = text;
  }
  std::vector<std::string> out;
  std::istringstream ss(prepared);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

Corpus load_tsv(const std::string& path, TokenizeMode mode) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open corpus file: " + path);
  Corpus corpus;
  std::unordered_map<std::string, int> label_ids;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      std::ostringstream msg;
      msg << path << ": missing TAB at line " << line_no;
      throw FormatError(msg.str());
    }
    const std::string label = line.substr(0, tab);
    const std::string text = line.substr(tab + 1);
    auto tokens = tokenize(text, mode);
    if (tokens.empty()) {
      ++corpus.skipped_empty;
      continue;
    }
    auto it = label_ids.find(label);
    int id;
    if (it == label_ids.end()) {
      id = static_cast<int>(corpus.label_names.size());
      label_ids.emplace(label, id);
      corpus.label_names.push_back(label);
    } else {
      id = it->second;
    }
    corpus.examples.push_back(Example{std::move(tokens), id});
  }
  return corpus;
}

std::vector<Example> filter_short(const std::vector<Example>& examples,
                                  std::size_t min_len) {
  if (min_len < 1) throw UsageError("filter_short: min_len must be >= 1");
  std::vector<Example> out;
  out.reserve(examples.size());
  for (const auto& e : examples)
    if (e.tokens.size() >= min_len) out.push_back(e);
  return out;
}

std::vector<Example> undersample_majority(const std::vector<Example>& examples,
                                          Rng& rng) {
  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const int l = examples[i].label;
    if (l < 0 || l > 1)
      throw UsageError("undersample_majority: labels must be binary");
    by_class[l].push_back(i);
  }
  const std::size_t minority =
      std::min(by_class[0].size(), by_class[1].size());
  std::vector<std::size_t> kept;
  for (auto& cls : by_class) {
    rng.shuffle(cls);
    cls.resize(minority);
    kept.insert(kept.end(), cls.begin(), cls.end());
  }
  rng.shuffle(kept);
  std::vector<Example> out;
  out.reserve(kept.size());
  for (std::size_t i : kept) out.push_back(examples[i]);
  return out;
}

SplitPlan make_splits(std::size_t n, const SplitStrategy& strategy,
                      std::uint64_t seed) {
  if (n == 0) throw UsageError("make_splits: empty dataset");
  Rng rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  SplitPlan plan;
  if (strategy.kind == SplitStrategy::Kind::fixed) {
    const auto n_train = static_cast<std::size_t>(
        static_cast<double>(n) * strategy.train_frac);
    const auto n_dev =
        static_cast<std::size_t>(static_cast<double>(n) * strategy.dev_frac);
    if (n_train == 0 || n_train + n_dev >= n)
      throw UsageError("make_splits: fractions leave an empty split");
    Fold f;
    f.train.assign(order.begin(), order.begin() + n_train);
    f.dev.assign(order.begin() + n_train, order.begin() + n_train + n_dev);
    f.test.assign(order.begin() + n_train + n_dev, order.end());
    plan.folds.push_back(std::move(f));
  } else {
    const std::size_t k = strategy.k;
    if (k < 2) throw UsageError("make_splits: k must be >= 2");
    if (n < k) throw UsageError("make_splits: fewer examples than folds");
    for (std::size_t fold = 0; fold < k; ++fold) {
      // Contiguous slice of the shuffled order; remainder spread over the
      // first n % k folds.
      const std::size_t base = n / k, extra = n % k;
      const std::size_t begin =
          fold * base + std::min<std::size_t>(fold, extra);
      const std::size_t len = base + (fold < extra ? 1 : 0);
      Fold f;
      f.test.assign(order.begin() + begin, order.begin() + begin + len);
      std::vector<std::size_t> rest;
      rest.insert(rest.end(), order.begin(), order.begin() + begin);
      rest.insert(rest.end(), order.begin() + begin + len, order.end());
      const auto n_dev = static_cast<std::size_t>(
          static_cast<double>(rest.size()) * strategy.nested_dev_frac);
      f.dev.assign(rest.begin(), rest.begin() + n_dev);
      f.train.assign(rest.begin() + n_dev, rest.end());
      if (f.train.empty())
        throw UsageError("make_splits: empty training portion");
      plan.folds.push_back(std::move(f));
    }
  }
  return plan;
}

std::vector<EncodedExample> encode(const std::vector<Example>& examples,
                                   const Vocabulary& vocab) {
  std::vector<EncodedExample> out;
  out.reserve(examples.size());
  for (const auto& e : examples) {
    EncodedExample enc;
    enc.label = e.label;
    enc.idx.reserve(e.tokens.size());
    for (const auto& t : e.tokens) {
      const int id = vocab.lookup(t);
      if (id < 0)
        throw UsageError("encode: token not in vocabulary: " + t);
      enc.idx.push_back(id);
    }
    out.push_back(std::move(enc));
  }
  return out;
}

Batch make_batch(const std::vector<EncodedExample>& examples,
                 std::size_t h_max) {
  Batch b;
  b.size = examples.size();
  std::size_t s = h_max;
  for (const auto& e : examples) s = std::max(s, e.idx.size());
  b.s = s;
  b.idx.assign(b.size * s, Vocabulary::kPadIndex);
  b.lengths.resize(b.size);
  b.labels.resize(b.size);
  for (std::size_t i = 0; i < b.size; ++i) {
    const auto& e = examples[i];
    std::copy(e.idx.begin(), e.idx.end(), b.idx.begin() + i * s);
    b.lengths[i] = static_cast<int>(e.idx.size());
    b.labels[i] = e.label;
  }
  return b;
}

std::vector<Batch> batch_iter(const std::vector<EncodedExample>& examples,
                              std::size_t batch_size, std::size_t h_max,
                              Rng& rng) {
  if (batch_size < 1) throw UsageError("batch_iter: batch_size must be >= 1");
  std::vector<std::size_t> order(examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::vector<EncodedExample> slice;
    slice.reserve(end - start);
    for (std::size_t i = start; i < end; ++i)
      slice.push_back(examples[order[i]]);
    batches.push_back(make_batch(slice, h_max));
  }
  return batches;
}

}  // namespace mgnc
