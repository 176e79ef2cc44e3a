#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mgnc/matrix.hpp"
#include "mgnc/rng.hpp"
#include "mgnc/vocab.hpp"

namespace mgnc {

/// One embedding set aligned to the task vocabulary. Groups may have
/// different widths. Row 0 (padding) is all-zero and never updated.
template <class T>
struct EmbeddingGroup {
  std::string name;
  std::size_t dim = 0;
  Matrix<T> table;  // |V| x dim
  bool trainable = true;
  std::size_t oov_count = 0;

  template <class U>
  EmbeddingGroup<U> cast() const {
    return EmbeddingGroup<U>{name, dim, table.template cast<U>(), trainable,
                             oov_count};
  }
};

/// Random vector for a word absent from the embedding file, each component
/// uniform on [-0.25, 0.25].
Vec<double> init_oov(std::size_t dim, Rng& rng);

/// word2vec binary format: ASCII header "<count> <dim>\n", then per record a
/// token terminated by 0x20 followed by dim little-endian float32 values and
/// an optional trailing 0x0A. Only task-vocabulary words are retained.
EmbeddingGroup<double> load_word2vec_binary(const std::string& path,
                                            const Vocabulary& vocab, Rng& rng,
                                            const std::string& name = "w2v",
                                            bool trainable = true);

/// Text format: one "token v1 v2 ... vd" record per line; an optional first
/// line of exactly two integers ("count dim") is detected and skipped.
EmbeddingGroup<double> load_text_vectors(const std::string& path,
                                         const Vocabulary& vocab, Rng& rng,
                                         const std::string& name = "vec",
                                         bool trainable = true);

/// Synthetic group whose rows are the horizontal concatenation of the input
/// groups' rows (the concatenation baseline input).
template <class T>
EmbeddingGroup<T> make_ccnn_group(const std::vector<EmbeddingGroup<T>>& groups) {
  if (groups.size() < 2)
    throw UsageError("make_ccnn_group: need at least two groups");
  const std::size_t rows = groups.front().table.rows;
  std::size_t total_dim = 0;
  for (const auto& g : groups) {
    if (g.table.rows != rows)
      throw UsageError("make_ccnn_group: vocabulary mismatch between groups");
    total_dim += g.dim;
  }
  EmbeddingGroup<T> out;
  out.name = "concat";
  out.dim = total_dim;
  out.table = Matrix<T>(rows, total_dim);
  out.trainable = true;
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t off = 0;
    for (const auto& g : groups) {
      for (std::size_t c = 0; c < g.dim; ++c)
        out.table(r, off + c) = g.table(r, c);
      off += g.dim;
    }
  }
  return out;
}

/// Fixture/synth writers matching the two loader formats.
void write_word2vec_binary(const std::string& path,
                           const std::vector<std::string>& words,
                           const Matrix<double>& vectors,
                           bool trailing_newline = true);
void write_text_vectors(const std::string& path,
                        const std::vector<std::string>& words,
                        const Matrix<double>& vectors, bool header = false);

}  // namespace mgnc
