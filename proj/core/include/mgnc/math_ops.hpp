#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "mgnc/errors.hpp"
#include "mgnc/matrix.hpp"

namespace mgnc {

template <class T>
T l2_norm(std::span<const T> v) {
  if (v.empty()) throw UsageError("l2_norm: empty vector");
  T acc = 0;
  for (T x : v) acc += x * x;
  return std::sqrt(acc);
}

template <class T>
T l2_norm(const Vec<T>& v) {
  return l2_norm(std::span<const T>(v));
}

/// Rescale v in place so its l2 norm is at most lambda. A vector already
/// within the bound is left untouched (bit-exact).
template <class T>
void rescale_to_max_norm_inplace(std::span<T> v, T lambda) {
  if (!(lambda > 0)) throw UsageError("rescale_to_max_norm: lambda must be > 0");
  const T n = l2_norm(std::span<const T>(v.data(), v.size()));
  if (n <= lambda) return;
  const T scale = lambda / n;
  for (T& x : v) x *= scale;
}

template <class T>
Vec<T> rescale_to_max_norm(Vec<T> v, T lambda) {
  rescale_to_max_norm_inplace(std::span<T>(v), lambda);
  return v;
}

/// Numerically stable softmax (max subtraction).
template <class T>
Vec<T> softmax(const Vec<T>& z) {
  if (z.empty()) throw UsageError("softmax: empty input");
  const T m = *std::max_element(z.begin(), z.end());
  Vec<T> out(z.size());
  T sum = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - m);
    sum += out[i];
  }
  for (T& x : out) x /= sum;
  return out;
}

/// -ln(probs[label]) with a 1e-12 probability floor.
template <class T>
T cross_entropy(const Vec<T>& probs, std::size_t label) {
  if (label >= probs.size())
    throw UsageError("cross_entropy: label out of range");
  const T p = std::max(probs[label], static_cast<T>(1e-12));
  return -std::log(p);
}

/// Central-difference gradient of a scalar function. Verification oracle;
/// always double precision.
inline std::vector<double> finite_difference_gradient(
    const std::function<double(const std::vector<double>&)>& f,
    std::vector<double> theta, double h) {
  if (!(h > 0)) throw UsageError("finite_difference_gradient: h must be > 0");
  std::vector<double> grad(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + h;
    const double fp = f(theta);
    theta[i] = orig - h;
    const double fm = f(theta);
    theta[i] = orig;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw NumericError("finite_difference_gradient: non-finite f output");
    grad[i] = (fp - fm) / (2 * h);
  }
  return grad;
}

template <class T>
bool all_finite(std::span<const T> v) {
  for (T x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace mgnc
