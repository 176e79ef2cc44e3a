#pragma once

#include <cstddef>
#include <vector>

#include "mgnc/datasets.hpp"
#include "mgnc/evaluation.hpp"
#include "mgnc/rng.hpp"

namespace mgnc {

enum class SyntheticTask { separable, group_informative };

struct SyntheticSizes {
  std::size_t n_train = 500;
  std::size_t n_test = 100;
  std::size_t dim1 = 20;
  std::size_t dim2 = 20;
  double dev_frac = 0.2;  // carved from the training block
};

/// Desk-scale synthetic classification task with two embedding groups.
///
/// separable: two classes with disjoint indicator tokens mixed into shared
/// filler; both groups carry random per-token embeddings, so the task is
/// learnable from either group.
///
/// group_informative: group 1 is as above; group 2 maps every token to the
/// same frozen vector, so it carries no class signal at all (noise-only
/// control).
struct SyntheticData {
  TaskData task;
  Fold fold;  // train/dev/test over task.examples
  std::vector<Example> raw;  // token form, same order as task.examples
};

SyntheticData make_synthetic(SyntheticTask kind, const SyntheticSizes& sizes,
                             Rng& rng);

/// Oracle for the separable task: majority vote over indicator tokens.
/// Returns -1 when a sentence carries no indicators.
int indicator_oracle(const Example& e);

}  // namespace mgnc
