#include <doctest.h>

#include <cmath>

#include "mgnc/gradcheck.hpp"
#include "mgnc/model.hpp"

using namespace mgnc;

namespace {

/// Naive triple-loop convolution oracle, kept deliberately independent of
/// the implementation.
Vec<double> naive_convolve(const Matrix<double>& A, const Matrix<double>& w,
                           double b) {
  Vec<double> out;
  for (std::size_t j = 0; j + w.rows <= A.rows; ++j) {
    double acc = b;
    for (std::size_t r = 0; r < w.rows; ++r)
      for (std::size_t c = 0; c < w.cols; ++c) acc += A(j + r, c) * w(r, c);
    out.push_back(acc);
  }
  return out;
}

ModelParams<double> tiny_model(std::size_t n_groups, Rng& rng,
                               int maps_per_height = 2, int n_classes = 2) {
  std::vector<EmbeddingGroup<double>> groups;
  for (std::size_t g = 0; g < n_groups; ++g) {
    EmbeddingGroup<double> grp;
    grp.name = "g" + std::to_string(g);
    grp.dim = 3 + g;
    grp.table = Matrix<double>(10, grp.dim);
    for (std::size_t r = 1; r < 10; ++r)
      for (std::size_t c = 0; c < grp.dim; ++c)
        grp.table(r, c) = rng.uniform(-0.5, 0.5);
    groups.push_back(std::move(grp));
  }
  auto p = init_model<double>(std::move(groups), {2, 3}, maps_per_height,
                              n_classes, Activation::relu, rng);
  for (auto& x : p.classifier.w.data) x = rng.uniform(-0.3, 0.3);
  return p;
}

Batch tiny_batch(Rng& rng, std::size_t n = 3, std::size_t s = 6) {
  Batch b;
  b.size = n;
  b.s = s;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 3 + rng.uniform_index(s - 2);
    b.lengths.push_back(static_cast<int>(len));
    b.labels.push_back(static_cast<int>(rng.uniform_index(2)));
    for (std::size_t t = 0; t < s; ++t)
      b.idx.push_back(t < len ? static_cast<int>(1 + rng.uniform_index(9))
                              : 0);
  }
  return b;
}

}  // namespace

TEST_CASE("convolve worked example") {
  Matrix<double> A(3, 2);
  A.data = {1, 2, 3, 4, 5, 6};
  Matrix<double> w(2, 2);
  w.data = {1, 0, 0, 1};
  auto c = convolve(A, w, 0.0);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == doctest::Approx(5.0));
  CHECK(c[1] == doctest::Approx(9.0));

  Matrix<double> zeros(2, 2);
  auto cz = convolve(A, zeros, 0.5);
  for (double x : cz) CHECK(x == doctest::Approx(0.5));

  Matrix<double> full(3, 2, 1.0);
  CHECK(convolve(A, full, 0.0).size() == 1);

  Matrix<double> tall(4, 2);
  CHECK_THROWS_AS(convolve(A, tall, 0.0), UsageError);
}

TEST_CASE("convolve matches the naive oracle on random instances") {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t s = 2 + rng.uniform_index(10);
    const std::size_t h = 1 + rng.uniform_index(s);
    const std::size_t d = 1 + rng.uniform_index(8);
    Matrix<double> A(s, d), w(h, d);
    for (auto& x : A.data) x = rng.uniform(-2, 2);
    for (auto& x : w.data) x = rng.uniform(-2, 2);
    const double b = rng.uniform(-1, 1);
    const auto fast = convolve(A, w, b);
    const auto slow = naive_convolve(A, w, b);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t i = 0; i < fast.size(); ++i)
      CHECK(fast[i] == doctest::Approx(slow[i]).epsilon(1e-12));
  }
}

TEST_CASE("activate") {
  CHECK(activate<double>({-1, 2}, Activation::relu) == Vec<double>{0, 2});
  CHECK(activate<double>({-1, 2}, Activation::identity) == Vec<double>{-1, 2});
  CHECK(activate<double>({0}, Activation::tanh)[0] == doctest::Approx(0.0));
}

TEST_CASE("max_pool_1") {
  auto [v1, a1] = max_pool_1<double>({5, 9});
  CHECK(v1 == 9);
  CHECK(a1 == 1);
  auto [v2, a2] = max_pool_1<double>({7, 7});
  CHECK(v2 == 7);
  CHECK(a2 == 0);  // first-max tie break
  auto [v3, a3] = max_pool_1<double>({-3});
  CHECK(v3 == -3);
  CHECK(a3 == 0);
  CHECK_THROWS_AS(max_pool_1<double>({}), UsageError);
}

TEST_CASE("sentence_matrix") {
  EmbeddingGroup<double> g;
  g.name = "g";
  g.dim = 2;
  g.table = Matrix<double>(2, 2);
  g.table(1, 0) = 1;
  g.table(1, 1) = 2;
  const int tokens[2] = {1, 0};
  auto A = sentence_matrix(tokens, 2, g);
  CHECK(A(0, 0) == 1);
  CHECK(A(0, 1) == 2);
  CHECK(A(1, 0) == 0);
  CHECK(A(1, 1) == 0);

  const int bad[1] = {5};
  CHECK_THROWS_AS(sentence_matrix(bad, 1, g), UsageError);
}

TEST_CASE("per-group sentence matrices have their own widths") {
  Rng rng(2);
  auto p = tiny_model(2, rng);
  const int tokens[4] = {1, 2, 3, 0};
  auto A0 = sentence_matrix(tokens, 4, p.groups[0]);
  auto A1 = sentence_matrix(tokens, 4, p.groups[1]);
  CHECK(A0.cols == 3);
  CHECK(A1.cols == 4);
  CHECK(A0.rows == 4);
}

TEST_CASE("forward shapes and feature concatenation") {
  Rng rng(3);
  auto p = tiny_model(2, rng, 3);
  auto b = tiny_batch(rng);
  ForwardOptions<double> opt;
  auto traces = forward(p, b, opt, nullptr);
  REQUIRE(traces.size() == b.size);
  // 2 groups x 2 heights x 3 maps.
  CHECK(p.feature_dim() == 12);
  for (const auto& tr : traces) {
    CHECK(tr.o.size() == 12);
    CHECK(tr.probs.size() == 2);
    double sum = 0;
    for (double x : tr.probs) sum += x;
    CHECK(sum == doctest::Approx(1.0));
    // argmax attains the pooled maximum
    for (std::size_t f = 0; f < tr.preact.size(); ++f) {
      const auto act = activate(tr.preact[f], p.act);
      CHECK(tr.o[f] == *std::max_element(act.begin(), act.end()));
      CHECK(act[tr.argmax[f]] == tr.o[f]);
    }
  }
  CHECK(p.classifier.group_bounds ==
        std::vector<std::pair<std::size_t, std::size_t>>{{0, 6}, {6, 12}});
}

TEST_CASE("train mode with p=0 equals test mode with p=0") {
  Rng rng(4);
  auto p = tiny_model(2, rng);
  auto b = tiny_batch(rng);
  ForwardOptions<double> train_opt;
  train_opt.mode = Mode::train;
  train_opt.dropout_p = 0;
  ForwardOptions<double> test_opt;
  test_opt.mode = Mode::test;
  test_opt.dropout_p = 0;
  Rng r2(1);
  auto t1 = forward(p, b, train_opt, &r2);
  auto t2 = forward(p, b, test_opt, nullptr);
  for (std::size_t i = 0; i < t1.size(); ++i)
    CHECK(t1[i].logits == t2[i].logits);
}

TEST_CASE("test-mode forward consumes no randomness and is deterministic") {
  Rng rng(5);
  auto p = tiny_model(1, rng);
  auto b = tiny_batch(rng);
  ForwardOptions<double> opt;
  opt.dropout_p = 0.5;
  auto t1 = forward(p, b, opt, nullptr);
  auto t2 = forward(p, b, opt, nullptr);
  for (std::size_t i = 0; i < t1.size(); ++i)
    CHECK(t1[i].probs == t2[i].probs);
}

TEST_CASE("group independence: group 2 perturbation leaves o_1 unchanged") {
  Rng rng(6);
  auto p = tiny_model(2, rng);
  auto b = tiny_batch(rng);
  ForwardOptions<double> opt;
  auto before = forward(p, b, opt, nullptr);

  auto q = p;
  for (auto& x : q.groups[1].table.data) x += 0.37;
  for (auto& row : q.banks[1].filters)
    for (auto& f : row)
      for (auto& x : f.w.data) x -= 0.21;
  auto after = forward(q, b, opt, nullptr);

  const auto [lo, hi] = p.classifier.group_bounds[0];
  for (std::size_t i = 0; i < before.size(); ++i)
    for (std::size_t j = lo; j < hi; ++j)
      CHECK(before[i].o[j] == after[i].o[j]);  // exact
}

TEST_CASE("permutation equivariance within a filter height") {
  Rng rng(7);
  auto p = tiny_model(1, rng, 3);
  auto b = tiny_batch(rng, 1);
  ForwardOptions<double> opt;
  auto base = forward(p, b, opt, nullptr)[0];

  auto q = p;
  std::swap(q.banks[0].filters[0][0], q.banks[0].filters[0][2]);
  auto swapped = forward(q, b, opt, nullptr)[0];
  CHECK(swapped.o[0] == base.o[2]);
  CHECK(swapped.o[2] == base.o[0]);
  CHECK(swapped.o[1] == base.o[1]);
}

TEST_CASE("zero classifier makes the first forward pass class-uniform") {
  Rng rng(8);
  std::vector<EmbeddingGroup<double>> groups(1);
  groups[0] = {"g", 4, Matrix<double>(10, 4), true, 0};
  for (std::size_t r = 1; r < 10; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      groups[0].table(r, c) = rng.uniform(-0.5, 0.5);
  auto p = init_model<double>(std::move(groups), {2}, 2, 3, Activation::relu,
                              rng);
  auto b = tiny_batch(rng, 2);
  ForwardOptions<double> opt;
  for (const auto& tr : forward(p, b, opt, nullptr))
    for (double prob : tr.probs) CHECK(prob == doctest::Approx(1.0 / 3));
}

TEST_CASE("backward matches finite differences (weights mode)") {
  const auto report = gradient_check(ConstraintTarget::classifier_weights);
  for (const auto& e : report.entries) {
    INFO(e.tensor);
    CHECK(e.max_rel_err < 1e-4);
  }
}

TEST_CASE("backward matches finite differences (activations mode)") {
  const auto report = gradient_check(ConstraintTarget::activations);
  for (const auto& e : report.entries) {
    INFO(e.tensor);
    CHECK(e.max_rel_err < 1e-4);
  }
}

TEST_CASE("dropout-masked feature zeroes its classifier column gradient") {
  Rng rng(9);
  auto p = tiny_model(1, rng);
  auto b = tiny_batch(rng, 1);
  const std::size_t k = p.feature_dim();
  std::vector<std::vector<std::uint8_t>> masks{
      std::vector<std::uint8_t>(k, 1)};
  masks[0][2] = 0;
  ForwardOptions<double> opt;
  opt.mode = Mode::train;
  opt.dropout_p = 0.5;
  opt.fixed_masks = &masks;
  auto traces = forward(p, b, opt, nullptr);
  auto g = zero_gradients(p);
  backward(traces[0], p, b.labels[0], 1.0, g);
  for (std::size_t c = 0; c < g.cw.rows; ++c) CHECK(g.cw(c, 2) == 0.0);
}

TEST_CASE("tokens outside every argmax window get zero embedding gradient") {
  Rng rng(10);
  auto p = tiny_model(1, rng);
  Batch b;
  b.size = 1;
  b.s = 6;
  b.idx = {1, 2, 3, 4, 5, 6};
  b.lengths = {6};
  b.labels = {1};
  ForwardOptions<double> opt;
  opt.mode = Mode::train;
  auto traces = forward(p, b, opt, nullptr);
  auto g = zero_gradients(p);
  backward(traces[0], p, 1, 1.0, g);

  // Figure out which sentence positions appear inside an argmax window.
  std::vector<bool> touched(b.s, false);
  std::size_t flat = 0;
  for (std::size_t hi = 0; hi < p.banks[0].filters.size(); ++hi)
    for (std::size_t f = 0; f < p.banks[0].filters[hi].size(); ++f, ++flat) {
      const std::size_t h =
          static_cast<std::size_t>(p.banks[0].heights[hi]);
      for (std::size_t r = 0; r < h; ++r)
        touched[traces[0].argmax[flat] + r] = true;
    }
  for (std::size_t t = 0; t < b.s; ++t) {
    if (touched[t]) continue;
    const int tok = b.idx[t];
    for (std::size_t c = 0; c < p.groups[0].dim; ++c)
      CHECK(g.emb[0](static_cast<std::size_t>(tok), c) == 0.0);
  }
  // PAD row gradient is always zero.
  for (std::size_t c = 0; c < p.groups[0].dim; ++c)
    CHECK(g.emb[0](0, c) == 0.0);
}

TEST_CASE("ccnn forward equals basic cnn on the concatenated matrix") {
  Rng rng(11);
  auto two = tiny_model(2, rng);
  auto cc_group = make_ccnn_group(two.groups);

  Rng init1(42), init2(42);
  auto p_cc = init_model<double>({cc_group}, {2, 3}, 2, 2, Activation::relu,
                                 init1);
  // Manually concatenated table, same seed: identical parameters.
  EmbeddingGroup<double> manual;
  manual.name = "manual";
  manual.dim = cc_group.dim;
  manual.table = cc_group.table;
  auto p_manual = init_model<double>({manual}, {2, 3}, 2, 2, Activation::relu,
                                     init2);

  auto b = tiny_batch(rng);
  ForwardOptions<double> opt;
  auto t1 = forward(p_cc, b, opt, nullptr);
  auto t2 = forward(p_manual, b, opt, nullptr);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(t1[i].o == t2[i].o);          // bit-exact
    CHECK(t1[i].probs == t2[i].probs);  // bit-exact
  }
}
