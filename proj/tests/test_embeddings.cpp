#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "mgnc/embeddings.hpp"
#include "mgnc/errors.hpp"

using namespace mgnc;

namespace {
std::filesystem::path tmp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "mgnc_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}
}  // namespace

TEST_CASE("vocabulary construction") {
  auto v = Vocabulary::build({{"a", "b"}, {"b", "c"}});
  CHECK(v.size() == 4);
  CHECK(v.lookup(Vocabulary::kPadToken) == 0);
  CHECK(v.lookup("a") == 1);
  CHECK(v.lookup("b") == 2);
  CHECK(v.lookup("c") == 3);

  auto single = Vocabulary::build({{"x"}});
  CHECK(single.size() == 2);
  CHECK(single.lookup("x") == 1);

  auto dedup = Vocabulary::build({{"a", "a"}});
  CHECK(dedup.size() == 2);

  CHECK_THROWS_AS(Vocabulary::build({}), UsageError);
  CHECK_THROWS_AS(Vocabulary::build({{}}), UsageError);
}

TEST_CASE("init_oov") {
  Rng rng(1);
  for (int i = 0; i < 10000; ++i) {
    auto v = init_oov(3, rng);
    for (double x : v) {
      CHECK(x >= -0.25);
      CHECK(x < 0.25);
    }
  }
  Rng a(5), b(5);
  CHECK(init_oov(8, a) == init_oov(8, b));
  Rng r(0);
  CHECK_THROWS_AS(init_oov(0, r), UsageError);
}

TEST_CASE("word2vec binary round-trip") {
  const auto path = tmp_file("w2v.bin");
  Matrix<double> vecs(1, 2);
  vecs(0, 0) = 1.0;
  vecs(0, 1) = 2.0;
  write_word2vec_binary(path.string(), {"dog"}, vecs);

  Vocabulary vocab;
  vocab.add("dog");
  Rng rng(3);
  auto g = load_word2vec_binary(path.string(), vocab, rng);
  CHECK(g.dim == 2);
  CHECK(g.oov_count == 0);
  CHECK(g.table(0, 0) == 0.0);  // PAD row zero
  CHECK(g.table(0, 1) == 0.0);
  CHECK(g.table(1, 0) == 1.0);
  CHECK(g.table(1, 1) == 2.0);
}

TEST_CASE("word2vec binary without trailing newlines") {
  const auto path = tmp_file("w2v_nonl.bin");
  Matrix<double> vecs(2, 3);
  for (std::size_t i = 0; i < vecs.size(); ++i)
    vecs.data[i] = 0.5 * static_cast<double>(i + 1);
  write_word2vec_binary(path.string(), {"dog", "cat"}, vecs,
                        /*trailing_newline=*/false);
  Vocabulary vocab;
  vocab.add("cat");
  Rng rng(3);
  auto g = load_word2vec_binary(path.string(), vocab, rng);
  CHECK(g.table(1, 0) == 2.0);
  CHECK(g.table(1, 2) == 3.0);
}

TEST_CASE("word2vec binary oov initialization bounds over many seeds") {
  const auto path = tmp_file("w2v_oov.bin");
  Matrix<double> vecs(1, 2);
  vecs(0, 0) = 1;
  vecs(0, 1) = 2;
  write_word2vec_binary(path.string(), {"dog"}, vecs);
  Vocabulary vocab;
  vocab.add("dog");
  vocab.add("cat");
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    Rng rng(seed);
    auto g = load_word2vec_binary(path.string(), vocab, rng);
    CHECK(g.oov_count == 1);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(g.table(2, c) >= -0.25);
      CHECK(g.table(2, c) < 0.25);
    }
  }
}

TEST_CASE("word2vec binary truncation errors") {
  const auto path = tmp_file("w2v_trunc.bin");
  {
    std::ofstream out(path, std::ios::binary);
    out << "2 3\n";
    out << "dog ";
    const float f[3] = {1, 2, 3};
    out.write(reinterpret_cast<const char*>(f), sizeof(f));
    out << "\n";
    // second record missing entirely
  }
  Vocabulary vocab;
  vocab.add("dog");
  Rng rng(1);
  CHECK_THROWS_AS(load_word2vec_binary(path.string(), vocab, rng),
                  FormatError);

  {
    std::ofstream out(path, std::ios::binary);
    out << "1 -2\n";
  }
  CHECK_THROWS_AS(load_word2vec_binary(path.string(), vocab, rng),
                  FormatError);

  {
    std::ofstream out(path, std::ios::binary);
    out << "not a header\n";
  }
  CHECK_THROWS_AS(load_word2vec_binary(path.string(), vocab, rng),
                  FormatError);
}

TEST_CASE("text vectors basic and header skip") {
  const auto path = tmp_file("vecs.txt");
  {
    std::ofstream out(path);
    out << "dog 1.0 2.0\n";
  }
  Vocabulary vocab;
  vocab.add("dog");
  Rng rng(1);
  auto g = load_text_vectors(path.string(), vocab, rng);
  CHECK(g.dim == 2);
  CHECK(g.table(1, 0) == 1.0);
  CHECK(g.table(1, 1) == 2.0);

  {
    std::ofstream out(path);
    out << "1 2\ndog 1.0 2.0\n";
  }
  auto h = load_text_vectors(path.string(), vocab, rng);
  CHECK(h.table(1, 0) == 1.0);
  CHECK(h.table(1, 1) == 2.0);
}

TEST_CASE("text vectors dimension mismatch names the line") {
  const auto path = tmp_file("vecs_bad.txt");
  {
    std::ofstream out(path);
    out << "dog 1.0\ncat 1.0 2.0\n";
  }
  Vocabulary vocab;
  vocab.add("dog");
  Rng rng(1);
  try {
    load_text_vectors(path.string(), vocab, rng);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("text round-trip is bit exact for in-vocabulary words") {
  const auto path = tmp_file("vecs_rt.txt");
  Rng gen(99);
  Matrix<double> vecs(5, 7);
  for (auto& x : vecs.data) x = gen.uniform(-1, 1);
  std::vector<std::string> words{"a", "b", "c", "d", "e"};
  write_text_vectors(path.string(), words, vecs);

  Vocabulary vocab;
  for (const auto& w : words) vocab.add(w);
  Rng rng(1);
  auto g = load_text_vectors(path.string(), vocab, rng);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 7; ++c) CHECK(g.table(r + 1, c) == vecs(r, c));
}

TEST_CASE("groups of different dimensionality over one vocabulary") {
  Vocabulary vocab;
  vocab.add("x");
  vocab.add("y");
  Rng rng(1);
  std::vector<EmbeddingGroup<double>> groups;
  for (std::size_t dim : {100u, 300u, 25u}) {
    EmbeddingGroup<double> g;
    g.name = "d" + std::to_string(dim);
    g.dim = dim;
    g.table = Matrix<double>(vocab.size(), dim);
    groups.push_back(std::move(g));
  }
  for (const auto& g : groups) {
    CHECK(g.table.rows == vocab.size());
    CHECK(g.table.cols == g.dim);
  }
}

TEST_CASE("make_ccnn_group concatenates rows") {
  Vocabulary vocab;
  vocab.add("w");
  std::vector<EmbeddingGroup<double>> gs(2);
  gs[0] = {"a", 2, Matrix<double>(2, 2), true, 0};
  gs[1] = {"b", 3, Matrix<double>(2, 3), true, 0};
  gs[0].table(1, 0) = 1;
  gs[0].table(1, 1) = 2;
  gs[1].table(1, 0) = 3;
  gs[1].table(1, 1) = 4;
  gs[1].table(1, 2) = 5;
  auto cc = make_ccnn_group(gs);
  CHECK(cc.dim == 5);
  for (std::size_t c = 0; c < 5; ++c) {
    CHECK(cc.table(0, c) == 0.0);  // PAD stays zero
    CHECK(cc.table(1, c) == static_cast<double>(c + 1));
  }
  std::vector<EmbeddingGroup<double>> one{gs[0]};
  CHECK_THROWS_AS(make_ccnn_group(one), UsageError);
  gs[1].table = Matrix<double>(3, 3);
  CHECK_THROWS_AS(make_ccnn_group(gs), UsageError);
}
