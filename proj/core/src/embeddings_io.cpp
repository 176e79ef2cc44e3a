#include "mgnc/embeddings.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "mgnc/errors.hpp"

namespace mgnc {
namespace {

EmbeddingGroup<double> make_group(const std::string& name,
                                  const Vocabulary& vocab, std::size_t dim,
                                  bool trainable) {
  EmbeddingGroup<double> g;
  g.name = name;
  g.dim = dim;
  g.table = Matrix<double>(vocab.size(), dim);
  g.trainable = trainable;
  return g;
}

/// Fill rows not found in the file with random vectors; row 0 stays zero.
void finish_oov(EmbeddingGroup<double>& g, const std::vector<bool>& seen,
                Rng& rng) {
  for (std::size_t r = 1; r < g.table.rows; ++r) {
    if (seen[r]) continue;
    const Vec<double> v = init_oov(g.dim, rng);
    for (std::size_t c = 0; c < g.dim; ++c) g.table(r, c) = v[c];
    ++g.oov_count;
  }
}

}  // namespace

Vec<double> init_oov(std::size_t dim, Rng& rng) {
  if (dim == 0) throw UsageError("init_oov: dim must be positive");
  Vec<double> v(dim);
  for (auto& x : v) x = rng.uniform(-0.25, 0.25);
  return v;
}

EmbeddingGroup<double> load_word2vec_binary(const std::string& path,
                                            const Vocabulary& vocab, Rng& rng,
                                            const std::string& name,
                                            bool trainable) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open embedding file: " + path);

  std::string header;
  if (!std::getline(in, header))
    throw FormatError(path + ": missing header line at byte offset 0");
  long long count = -1, dim = -1;
  {
    std::istringstream hs(header);
    char extra;
    if (!(hs >> count >> dim) || (hs >> extra))
      throw FormatError(path + ": malformed header \"" + header + "\"");
  }
  if (dim <= 0)
    throw FormatError(path + ": non-positive dimension in header");
  if (count < 0) throw FormatError(path + ": negative count in header");

  auto g = make_group(name, vocab, static_cast<std::size_t>(dim), trainable);
  std::vector<bool> seen(vocab.size(), false);
  std::vector<float> buf(static_cast<std::size_t>(dim));

  for (long long rec = 0; rec < count; ++rec) {
    std::string word;
    char ch;
    while (in.get(ch)) {
      if (ch == ' ') break;
      if (ch == '\n' && word.empty()) continue;  // tolerate stray newline
      word.push_back(ch);
    }
    if (!in) {
      std::ostringstream msg;
      msg << path << ": truncated record " << rec << " at byte offset "
          << in.tellg();
      throw FormatError(msg.str());
    }
    in.read(reinterpret_cast<char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (in.gcount() !=
        static_cast<std::streamsize>(buf.size() * sizeof(float))) {
      std::ostringstream msg;
      msg << path << ": truncated vector payload for \"" << word
          << "\" at byte offset " << in.tellg();
      throw FormatError(msg.str());
    }
    const int id = vocab.lookup(word);
    if (id > 0 && !seen[static_cast<std::size_t>(id)]) {
      for (std::size_t c = 0; c < g.dim; ++c)
        g.table(static_cast<std::size_t>(id), c) =
            static_cast<double>(buf[c]);
      seen[static_cast<std::size_t>(id)] = true;
    }
    // Optional record separator.
    if (in.peek() == '\n') in.get();
  }

  finish_oov(g, seen, rng);
  return g;
}

EmbeddingGroup<double> load_text_vectors(const std::string& path,
                                         const Vocabulary& vocab, Rng& rng,
                                         const std::string& name,
                                         bool trainable) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open embedding file: " + path);

  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  EmbeddingGroup<double> g;
  std::vector<bool> seen;
  std::vector<double> vals;

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;

    // Auto-detect a two-integer header on the first line.
    if (line_no == 1) {
      std::istringstream probe(line);
      long long a, b;
      std::string rest;
      if ((probe >> a >> b) && !(probe >> rest)) continue;
    }

    vals.clear();
    double x;
    while (ls >> x) vals.push_back(x);
    if (!ls.eof()) {
      std::ostringstream msg;
      msg << path << ": unparseable value at line " << line_no;
      throw FormatError(msg.str());
    }
    if (vals.empty()) {
      std::ostringstream msg;
      msg << path << ": no vector components at line " << line_no;
      throw FormatError(msg.str());
    }
    if (dim == 0) {
      dim = vals.size();
      g = make_group(name, vocab, dim, trainable);
      seen.assign(vocab.size(), false);
    } else if (vals.size() != dim) {
      std::ostringstream msg;
      msg << path << ": dimension mismatch at line " << line_no << " (got "
          << vals.size() << ", expected " << dim << ")";
      throw FormatError(msg.str());
    }
    const int id = vocab.lookup(token);
    if (id > 0 && !seen[static_cast<std::size_t>(id)]) {
      for (std::size_t c = 0; c < dim; ++c)
        g.table(static_cast<std::size_t>(id), c) = vals[c];
      seen[static_cast<std::size_t>(id)] = true;
    }
  }
  if (dim == 0) throw FormatError(path + ": no vector records found");

  finish_oov(g, seen, rng);
  return g;
}

void write_word2vec_binary(const std::string& path,
                           const std::vector<std::string>& words,
                           const Matrix<double>& vectors,
                           bool trailing_newline) {
  if (words.size() != vectors.rows)
    throw UsageError("write_word2vec_binary: word/vector count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path);
  out << words.size() << " " << vectors.cols << "\n";
  for (std::size_t r = 0; r < vectors.rows; ++r) {
    out << words[r] << ' ';
    for (std::size_t c = 0; c < vectors.cols; ++c) {
      const float f = static_cast<float>(vectors(r, c));
      out.write(reinterpret_cast<const char*>(&f), sizeof(float));
    }
    if (trailing_newline) out << '\n';
  }
}

void write_text_vectors(const std::string& path,
                        const std::vector<std::string>& words,
                        const Matrix<double>& vectors, bool header) {
  if (words.size() != vectors.rows)
    throw UsageError("write_text_vectors: word/vector count mismatch");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out.precision(17);
  if (header) out << words.size() << " " << vectors.cols << "\n";
  for (std::size_t r = 0; r < vectors.rows; ++r) {
    out << words[r];
    for (std::size_t c = 0; c < vectors.cols; ++c) out << ' ' << vectors(r, c);
    out << '\n';
  }
}

}  // namespace mgnc
