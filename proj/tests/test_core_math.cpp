#include <doctest.h>

#include <cmath>

#include "mgnc/math_ops.hpp"
#include "mgnc/rng.hpp"

using namespace mgnc;

TEST_CASE("l2_norm basics") {
  CHECK(l2_norm<double>({3, 4}) == doctest::Approx(5.0));
  CHECK(l2_norm<double>({0, 0, 0}) == doctest::Approx(0.0));
  CHECK(l2_norm<double>({1, 1, 1, 1}) == doctest::Approx(2.0));
  CHECK_THROWS_AS(l2_norm(Vec<double>{}), UsageError);
}

TEST_CASE("rescale_to_max_norm") {
  auto v = rescale_to_max_norm<double>({3, 4}, 2.5);
  CHECK(v[0] == doctest::Approx(1.5));
  CHECK(v[1] == doctest::Approx(2.0));

  // Already within bound: untouched bit-exactly.
  Vec<double> w{1, 0};
  CHECK(rescale_to_max_norm(w, 9.0) == w);

  auto u = rescale_to_max_norm<double>({6, 8}, 5.0);
  CHECK(u[0] == doctest::Approx(3.0));
  CHECK(u[1] == doctest::Approx(4.0));

  CHECK_THROWS_AS(rescale_to_max_norm<double>({1}, 0.0), UsageError);
  CHECK_THROWS_AS(rescale_to_max_norm<double>({1}, -1.0), UsageError);
}

TEST_CASE("rescale_to_max_norm properties") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(8);
    Vec<double> v(n);
    for (auto& x : v) x = rng.uniform(-10, 10);
    const double lambda = rng.uniform(0.1, 5.0);
    const auto once = rescale_to_max_norm(v, lambda);

    // Idempotent up to one rounding step: re-applying may shave at most an
    // ulp-scale factor when the rescaled norm lands a hair above lambda.
    const auto twice = rescale_to_max_norm(once, lambda);
    for (std::size_t i = 0; i < n; ++i)
      CHECK(twice[i] == doctest::Approx(once[i]).epsilon(1e-14));

    // Norm = min(||v||, lambda) within 1e-12 relative.
    const double n0 = l2_norm(v);
    if (n0 > 0)
      CHECK(l2_norm(once) ==
            doctest::Approx(std::min(n0, lambda)).epsilon(1e-12));

    // Direction preserved: nonnegative multiple of the input.
    for (std::size_t i = 0; i < n; ++i)
      CHECK(once[i] * v[i] >= 0.0);
  }
}

TEST_CASE("softmax") {
  auto p = softmax<double>({0, 0});
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));

  auto q = softmax<double>({1000, 1000, 1000});
  for (double x : q) CHECK(x == doctest::Approx(1.0 / 3));

  auto r = softmax<double>({std::log(2.0), 0});
  CHECK(r[0] == doctest::Approx(2.0 / 3).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(1.0 / 3).epsilon(1e-12));

  CHECK_THROWS_AS(softmax<double>({}), UsageError);
}

TEST_CASE("softmax shift invariance") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(6);
    Vec<double> z(n);
    for (auto& x : z) x = rng.uniform(-5, 5);
    const double c = rng.uniform(-100, 100);
    Vec<double> shifted = z;
    for (auto& x : shifted) x += c;
    const auto a = softmax(z), b = softmax(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12));
      CHECK(a[i] > 0);
      sum += a[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("cross_entropy") {
  CHECK(cross_entropy<double>({1, 0}, 0) == doctest::Approx(0.0));
  CHECK(cross_entropy<double>({0.5, 0.5}, 1) ==
        doctest::Approx(std::log(2.0)));
  CHECK(cross_entropy<double>({0.25, 0.75}, 0) ==
        doctest::Approx(std::log(4.0)));
  CHECK_THROWS_AS(cross_entropy<double>({0.5, 0.5}, 2), UsageError);
  // Probability floor caps the loss at -ln(1e-12).
  CHECK(cross_entropy<double>({0, 1}, 0) ==
        doctest::Approx(-std::log(1e-12)));
}

TEST_CASE("finite_difference_gradient") {
  // f = ||theta||^2 -> grad 2*theta.
  auto fd = finite_difference_gradient(
      [](const std::vector<double>& t) {
        double s = 0;
        for (double x : t) s += x * x;
        return s;
      },
      {1, 2}, 1e-5);
  CHECK(fd[0] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(fd[1] == doctest::Approx(4.0).epsilon(1e-6));

  auto zero = finite_difference_gradient(
      [](const std::vector<double>&) { return 3.5; }, {1, 2, 3}, 1e-5);
  for (double x : zero) CHECK(x == doctest::Approx(0.0));

  CHECK_THROWS_AS(finite_difference_gradient(
                      [](const std::vector<double>&) { return 0.0; }, {1}, 0.0),
                  UsageError);
}

TEST_CASE("finite differences on a quadratic form match M theta") {
  // f = 0.5 theta^T M theta with symmetric M.
  Rng rng(5);
  const std::size_t n = 6;
  Matrix<double> M(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = rng.uniform(-2, 2);
      M(i, j) = v;
      M(j, i) = v;
    }
  std::vector<double> theta(n);
  for (auto& x : theta) x = rng.uniform(-3, 3);

  auto fd = finite_difference_gradient(
      [&](const std::vector<double>& t) {
        double s = 0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) s += 0.5 * t[i] * M(i, j) * t[j];
        return s;
      },
      theta, 1e-5);
  for (std::size_t i = 0; i < n; ++i) {
    double expect = 0;
    for (std::size_t j = 0; j < n; ++j) expect += M(i, j) * theta[j];
    CHECK(fd[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("rng determinism over a long stream") {
  Rng a(123), b(123);
  for (int i = 0; i < 1000000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  Rng c(124);
  CHECK(Rng(123).next_u64() != c.next_u64());
}

TEST_CASE("rng helpers") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng.uniform(-0.25, 0.25);
    CHECK(u >= -0.25);
    CHECK(u < 0.25);
    CHECK(rng.uniform_index(7) < 7);
  }
  CHECK_THROWS_AS(rng.uniform_index(0), UsageError);

  // Shuffle is a permutation and deterministic per seed.
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto w = v;
  Rng s1(77), s2(77);
  s1.shuffle(v);
  s2.shuffle(w);
  CHECK(v == w);
  std::sort(v.begin(), v.end());
  CHECK(v == std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8});
}
