#include "mgnc/synthetic.hpp"

#include <numeric>
#include <string>

#include "mgnc/embeddings.hpp"
#include "mgnc/errors.hpp"

namespace mgnc {
namespace {

constexpr std::size_t kIndicatorsPerClass = 10;
constexpr std::size_t kFillerTokens = 30;

std::string indicator_token(int label, std::size_t i) {
  return (label == 0 ? "neg" : "pos") + std::to_string(i);
}

Example make_sentence(int label, Rng& rng) {
  Example e;
  e.label = label;
  const std::size_t len = 5 + rng.uniform_index(5);  // 5..9 tokens
  // Three indicator positions, the rest filler.
  std::vector<std::size_t> pos(len);
  std::iota(pos.begin(), pos.end(), std::size_t{0});
  rng.shuffle(pos);
  std::vector<bool> is_ind(len, false);
  for (std::size_t i = 0; i < 3; ++i) is_ind[pos[i]] = true;
  for (std::size_t i = 0; i < len; ++i) {
    if (is_ind[i]) {
      e.tokens.push_back(
          indicator_token(label, rng.uniform_index(kIndicatorsPerClass)));
    } else {
      e.tokens.push_back("fill" +
                         std::to_string(rng.uniform_index(kFillerTokens)));
    }
  }
  return e;
}

Matrix<double> random_table(std::size_t rows, std::size_t dim, Rng& rng) {
  Matrix<double> t(rows, dim);
  for (std::size_t r = 1; r < rows; ++r)
    for (std::size_t c = 0; c < dim; ++c) t(r, c) = rng.uniform(-0.25, 0.25);
  return t;  // row 0 (pad) stays zero
}

}  // namespace

int indicator_oracle(const Example& e) {
  int votes[2] = {0, 0};
  for (const auto& t : e.tokens) {
    if (t.rfind("neg", 0) == 0) ++votes[0];
    else if (t.rfind("pos", 0) == 0) ++votes[1];
  }
  if (votes[0] == votes[1]) return -1;
  return votes[1] > votes[0] ? 1 : 0;
}

SyntheticData make_synthetic(SyntheticTask kind, const SyntheticSizes& sizes,
                             Rng& rng) {
  if (sizes.n_train == 0 || sizes.n_test == 0 || sizes.dim1 == 0 ||
      sizes.dim2 == 0)
    throw UsageError("make_synthetic: sizes must be positive");

  SyntheticData out;
  const std::size_t total = sizes.n_train + sizes.n_test;
  for (std::size_t i = 0; i < total; ++i)
    out.raw.push_back(make_sentence(static_cast<int>(i % 2), rng));

  std::vector<std::vector<std::string>> corpora;
  for (const auto& e : out.raw) corpora.push_back(e.tokens);
  out.task.vocab = Vocabulary::build(corpora);
  out.task.examples = encode(out.raw, out.task.vocab);
  out.task.n_classes = 2;
  out.task.metric = Metric::accuracy;

  EmbeddingGroup<double> g1;
  g1.name = "syn1";
  g1.dim = sizes.dim1;
  g1.table = random_table(out.task.vocab.size(), sizes.dim1, rng);
  g1.trainable = true;
  out.task.groups.push_back(std::move(g1));

  EmbeddingGroup<double> g2;
  g2.name = kind == SyntheticTask::separable ? "syn2" : "noise";
  g2.dim = sizes.dim2;
  if (kind == SyntheticTask::separable) {
    g2.table = random_table(out.task.vocab.size(), sizes.dim2, rng);
    g2.trainable = true;
  } else {
    // Every token shares one frozen vector: token identity is invisible.
    Vec<double> shared(sizes.dim2);
    for (auto& x : shared) x = rng.uniform(-0.25, 0.25);
    g2.table = Matrix<double>(out.task.vocab.size(), sizes.dim2);
    for (std::size_t r = 1; r < g2.table.rows; ++r)
      for (std::size_t c = 0; c < sizes.dim2; ++c) g2.table(r, c) = shared[c];
    g2.trainable = false;
  }
  out.task.groups.push_back(std::move(g2));

  const auto n_dev =
      static_cast<std::size_t>(static_cast<double>(sizes.n_train) *
                               sizes.dev_frac);
  for (std::size_t i = 0; i < sizes.n_train - n_dev; ++i)
    out.fold.train.push_back(i);
  for (std::size_t i = sizes.n_train - n_dev; i < sizes.n_train; ++i)
    out.fold.dev.push_back(i);
  for (std::size_t i = sizes.n_train; i < total; ++i)
    out.fold.test.push_back(i);
  return out;
}

}  // namespace mgnc
