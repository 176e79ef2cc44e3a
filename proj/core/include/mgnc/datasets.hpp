#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mgnc/rng.hpp"
#include "mgnc/vocab.hpp"

namespace mgnc {

struct Example {
  std::vector<std::string> tokens;
  int label = 0;
};

struct Corpus {
  std::vector<Example> examples;
  std::vector<std::string> label_names;  // dense indices, first occurrence
  std::size_t skipped_empty = 0;
};

enum class TokenizeMode { whitespace, cleaned };

/// whitespace: split on runs of whitespace. cleaned: additionally lowercase
/// and split the characters , . ! ? ' " ( ) into standalone tokens.
std::vector<std::string> tokenize(const std::string& text, TokenizeMode mode);

/// UTF-8 lines "label<TAB>text". Empty-text lines are skipped and counted.
Corpus load_tsv(const std::string& path,
                TokenizeMode mode = TokenizeMode::cleaned);

/// Keep examples with at least min_len tokens. Training portions only.
std::vector<Example> filter_short(const std::vector<Example>& examples,
                                  std::size_t min_len = 4);

/// Binary tasks: subsample the majority class without replacement down to the
/// minority size, then reshuffle.
std::vector<Example> undersample_majority(const std::vector<Example>& examples,
                                          Rng& rng);

struct Fold {
  std::vector<std::size_t> train, dev, test;
};

struct SplitPlan {
  std::vector<Fold> folds;
};

struct SplitStrategy {
  enum class Kind { fixed, kfold } kind = Kind::fixed;
  // fixed:
  double train_frac = 0.8, dev_frac = 0.1;  // test = remainder
  // kfold:
  std::size_t k = 10;
  double nested_dev_frac = 0.1;  // carved from each fold's training portion

  static SplitStrategy fixed(double train, double dev) {
    SplitStrategy s;
    s.kind = Kind::fixed;
    s.train_frac = train;
    s.dev_frac = dev;
    return s;
  }
  static SplitStrategy kfold(std::size_t k, double dev_frac = 0.1) {
    SplitStrategy s;
    s.kind = Kind::kfold;
    s.k = k;
    s.nested_dev_frac = dev_frac;
    return s;
  }
};

/// Disjoint, covering, deterministic splits over n items.
SplitPlan make_splits(std::size_t n, const SplitStrategy& strategy,
                      std::uint64_t seed);

/// Example after vocabulary lookup.
struct EncodedExample {
  std::vector<int> idx;
  int label = 0;
};

std::vector<EncodedExample> encode(const std::vector<Example>& examples,
                                   const Vocabulary& vocab);

/// Zero-padded mini-batch. s is at least the largest filter height so every
/// filter yields a non-empty feature map.
struct Batch {
  std::size_t size = 0;
  std::size_t s = 0;               // padded length
  std::vector<int> idx;            // size x s, row-major; pad index 0
  std::vector<int> lengths;
  std::vector<int> labels;
};

/// One epoch of shuffled mini-batches; the last batch may be smaller.
std::vector<Batch> batch_iter(const std::vector<EncodedExample>& examples,
                              std::size_t batch_size, std::size_t h_max,
                              Rng& rng);

/// Single batch over the given examples in order (for evaluation).
Batch make_batch(const std::vector<EncodedExample>& examples,
                 std::size_t h_max);

}  // namespace mgnc
