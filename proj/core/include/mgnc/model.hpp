#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mgnc/datasets.hpp"
#include "mgnc/embeddings.hpp"
#include "mgnc/errors.hpp"
#include "mgnc/math_ops.hpp"
#include "mgnc/matrix.hpp"
#include "mgnc/rng.hpp"

namespace mgnc {

enum class Activation { relu, tanh, identity };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::tanh: return "tanh";
    default: return "identity";
  }
}

enum class ConstraintMode { single_lambda, per_group };
enum class ConstraintTarget { classifier_weights, activations };

/// Max-norm regularization settings. single_lambda bounds whole classifier
/// rows (or the whole feature vector); per_group bounds each embedding
/// group's segment independently.
struct RegularizationSpec {
  ConstraintMode mode = ConstraintMode::single_lambda;
  ConstraintTarget target = ConstraintTarget::classifier_weights;
  std::vector<double> lambdas = {1e9};
  double dropout_p = 0.5;

  void validate(std::size_t n_groups) const {
    for (double l : lambdas)
      if (!(l > 0)) throw UsageError("RegularizationSpec: lambda must be > 0");
    if (mode == ConstraintMode::per_group && lambdas.size() != n_groups)
      throw UsageError("RegularizationSpec: need one lambda per group");
    if (mode == ConstraintMode::single_lambda && lambdas.size() != 1)
      throw UsageError("RegularizationSpec: single mode takes one lambda");
    if (!(dropout_p >= 0 && dropout_p < 1))
      throw UsageError("RegularizationSpec: dropout_p must be in [0,1)");
  }
};

template <class T>
struct Filter {
  Matrix<T> w;  // h x d
  T b = 0;
};

/// All filters applied to one embedding group's sentence matrix.
template <class T>
struct FilterBank {
  std::string group_name;
  std::vector<int> heights;
  std::vector<std::vector<Filter<T>>> filters;  // [height idx][map idx]
};

template <class T>
struct Classifier {
  Matrix<T> w;  // C x k
  Vec<T> b;     // C
  std::vector<std::pair<std::size_t, std::size_t>> group_bounds;  // [lo, hi)
};

template <class T>
struct ModelParams {
  std::vector<EmbeddingGroup<T>> groups;
  std::vector<FilterBank<T>> banks;
  Classifier<T> classifier;
  Activation act = Activation::relu;

  std::size_t feature_dim() const { return classifier.w.cols; }
  std::size_t n_classes() const { return classifier.w.rows; }

  template <class U>
  ModelParams<U> cast() const {
    ModelParams<U> out;
    for (const auto& g : groups) out.groups.push_back(g.template cast<U>());
    for (const auto& bank : banks) {
      FilterBank<U> nb{bank.group_name, bank.heights, {}};
      for (const auto& hf : bank.filters) {
        std::vector<Filter<U>> nhf;
        for (const auto& f : hf)
          nhf.push_back({f.w.template cast<U>(), static_cast<U>(f.b)});
        nb.filters.push_back(std::move(nhf));
      }
      out.banks.push_back(std::move(nb));
    }
    out.classifier.w = classifier.w.template cast<U>();
    out.classifier.b.assign(classifier.b.begin(), classifier.b.end());
    out.classifier.group_bounds = classifier.group_bounds;
    out.act = act;
    return out;
  }
};

/// Filters uniform [-0.01, 0.01], all biases zero, classifier weights zero
/// (first forward pass is class-uniform).
template <class T>
ModelParams<T> init_model(std::vector<EmbeddingGroup<T>> groups,
                          const std::vector<int>& heights, int maps_per_height,
                          int n_classes, Activation act, Rng& rng) {
  if (groups.empty()) throw UsageError("init_model: need at least one group");
  if (heights.empty() || maps_per_height < 1 || n_classes < 2)
    throw UsageError("init_model: bad configuration");
  ModelParams<T> p;
  p.act = act;
  p.groups = std::move(groups);
  std::size_t k = 0;
  for (const auto& g : p.groups) {
    FilterBank<T> bank;
    bank.group_name = g.name;
    bank.heights = heights;
    const std::size_t lo = k;
    for (int h : heights) {
      if (h < 1) throw UsageError("init_model: filter height must be >= 1");
      std::vector<Filter<T>> row;
      for (int f = 0; f < maps_per_height; ++f) {
        Filter<T> flt;
        flt.w = Matrix<T>(static_cast<std::size_t>(h), g.dim);
        for (auto& x : flt.w.data)
          x = static_cast<T>(rng.uniform(-0.01, 0.01));
        flt.b = 0;
        row.push_back(std::move(flt));
        ++k;
      }
      bank.filters.push_back(std::move(row));
    }
    p.banks.push_back(std::move(bank));
    p.classifier.group_bounds.emplace_back(lo, k);
  }
  p.classifier.w = Matrix<T>(static_cast<std::size_t>(n_classes), k);
  p.classifier.b.assign(static_cast<std::size_t>(n_classes), T{0});
  return p;
}

/// Sentence matrix: row t is the embedding of token t; pad rows are zero.
template <class T>
Matrix<T> sentence_matrix(const int* tokens, std::size_t s,
                          const EmbeddingGroup<T>& group) {
  Matrix<T> A(s, group.dim);
  for (std::size_t t = 0; t < s; ++t) {
    const int v = tokens[t];
    if (v < 0 || static_cast<std::size_t>(v) >= group.table.rows)
      throw UsageError("sentence_matrix: token index out of range");
    const T* src = group.table.row(static_cast<std::size_t>(v));
    T* dst = A.row(t);
    for (std::size_t c = 0; c < group.dim; ++c) dst[c] = src[c];
  }
  return A;
}

/// Valid convolution of one h x d filter over the s x d sentence matrix.
/// No activation applied here.
template <class T>
Vec<T> convolve(const Matrix<T>& A, const Matrix<T>& w, T b) {
  if (A.cols != w.cols) throw UsageError("convolve: width mismatch");
  if (A.rows < w.rows)
    throw UsageError("convolve: sentence shorter than filter");
  const std::size_t n = A.rows - w.rows + 1;
  Vec<T> c(n);
  for (std::size_t j = 0; j < n; ++j) {
    T acc = b;
    for (std::size_t r = 0; r < w.rows; ++r) {
      const T* ar = A.row(j + r);
      const T* wr = w.row(r);
      for (std::size_t col = 0; col < w.cols; ++col) acc += ar[col] * wr[col];
    }
    c[j] = acc;
  }
  return c;
}

template <class T>
T activate_one(T x, Activation a) {
  switch (a) {
    case Activation::relu: return x > 0 ? x : T{0};
    case Activation::tanh: return std::tanh(x);
    default: return x;
  }
}

template <class T>
T activate_deriv(T preact, Activation a) {
  switch (a) {
    case Activation::relu: return preact > 0 ? T{1} : T{0};
    case Activation::tanh: {
      const T t = std::tanh(preact);
      return 1 - t * t;
    }
    default: return T{1};
  }
}

template <class T>
Vec<T> activate(Vec<T> c, Activation a) {
  for (auto& x : c) x = activate_one(x, a);
  return c;
}

/// Largest component and the smallest index attaining it.
template <class T>
std::pair<T, std::size_t> max_pool_1(const Vec<T>& c) {
  if (c.empty()) throw UsageError("max_pool_1: empty feature map");
  std::size_t arg = 0;
  for (std::size_t i = 1; i < c.size(); ++i)
    if (c[i] > c[arg]) arg = i;
  return {c[arg], arg};
}

enum class Mode { train, test };

/// Everything the backward pass needs, cached per example.
template <class T>
struct Trace {
  std::vector<int> tokens;          // padded indices, length s
  std::vector<Matrix<T>> sent;      // per group
  std::vector<Vec<T>> preact;       // per flat filter, pre-activation maps
  std::vector<std::size_t> argmax;  // per flat filter
  Vec<T> o;                         // pooled features, pre-dropout
  std::vector<std::uint8_t> mask;   // dropout mask; empty = none
  Vec<T> o_masked;                  // post-dropout (train) / scaled (test)
  // Activation-constraint bookkeeping; empty when the constraint is off.
  std::vector<std::pair<std::size_t, std::size_t>> cseg;
  std::vector<T> cnorm;    // pre-rescale segment norms
  std::vector<T> clambda;  // segment bounds
  Vec<T> o_used;           // classifier input
  Vec<T> logits, probs;
};

template <class T>
struct ForwardOptions {
  T dropout_p = 0;
  Mode mode = Mode::test;
  /// Applied to o_l (per_group) or o (single) before the classifier; only
  /// meaningful in train mode with target == activations.
  const RegularizationSpec* activation_constraint = nullptr;
  /// Fixed per-example dropout masks (gradient checking); overrides rng.
  const std::vector<std::vector<std::uint8_t>>* fixed_masks = nullptr;
};

template <class T>
std::vector<Trace<T>> forward(const ModelParams<T>& params, const Batch& batch,
                              const ForwardOptions<T>& opt, Rng* rng) {
  const std::size_t k = params.feature_dim();
  std::vector<Trace<T>> traces;
  traces.reserve(batch.size);
  for (std::size_t ex = 0; ex < batch.size; ++ex) {
    Trace<T> tr;
    tr.tokens.assign(batch.idx.begin() + ex * batch.s,
                     batch.idx.begin() + (ex + 1) * batch.s);
    tr.o.reserve(k);
    for (std::size_t g = 0; g < params.groups.size(); ++g) {
      tr.sent.push_back(
          sentence_matrix(tr.tokens.data(), batch.s, params.groups[g]));
      const auto& A = tr.sent.back();
      const auto& bank = params.banks[g];
      for (const auto& row : bank.filters) {
        for (const auto& f : row) {
          Vec<T> c = convolve(A, f.w, f.b);
          Vec<T> a = activate(c, params.act);
          auto [val, arg] = max_pool_1(a);
          tr.preact.push_back(std::move(c));
          tr.argmax.push_back(arg);
          tr.o.push_back(val);
        }
      }
    }

    // Dropout (train) / compensating scale (test).
    tr.o_masked = tr.o;
    if (opt.mode == Mode::train) {
      if (opt.fixed_masks != nullptr) {
        tr.mask = (*opt.fixed_masks)[ex];
        if (tr.mask.size() != k)
          throw UsageError("forward: fixed mask size mismatch");
        for (std::size_t i = 0; i < k; ++i)
          if (!tr.mask[i]) tr.o_masked[i] = 0;
      } else if (opt.dropout_p > 0) {
        if (rng == nullptr)
          throw UsageError("forward: train-mode dropout needs an rng");
        tr.mask.resize(k);
        for (std::size_t i = 0; i < k; ++i) {
          tr.mask[i] = rng->bernoulli(1.0 - opt.dropout_p) ? 1 : 0;
          if (!tr.mask[i]) tr.o_masked[i] = 0;
        }
      }
    } else if (opt.dropout_p > 0) {
      const T scale = T{1} - opt.dropout_p;
      for (auto& x : tr.o_masked) x *= scale;
    }

    // Optional max-norm rescaling of the feature vector (train only).
    tr.o_used = tr.o_masked;
    if (opt.mode == Mode::train && opt.activation_constraint != nullptr &&
        opt.activation_constraint->target == ConstraintTarget::activations) {
      const auto& spec = *opt.activation_constraint;
      if (spec.mode == ConstraintMode::per_group) {
        tr.cseg = params.classifier.group_bounds;
      } else {
        tr.cseg = {{std::size_t{0}, k}};
      }
      for (std::size_t si = 0; si < tr.cseg.size(); ++si) {
        const auto [lo, hi] = tr.cseg[si];
        const T lambda = static_cast<T>(
            spec.mode == ConstraintMode::per_group ? spec.lambdas[si]
                                                   : spec.lambdas[0]);
        const T n = l2_norm(
            std::span<const T>(tr.o_masked.data() + lo, hi - lo));
        tr.cnorm.push_back(n);
        tr.clambda.push_back(lambda);
        if (n > lambda) {
          const T scale = lambda / n;
          for (std::size_t i = lo; i < hi; ++i) tr.o_used[i] *= scale;
        }
      }
    }

    // Classifier.
    const auto& W = params.classifier.w;
    tr.logits.resize(params.n_classes());
    for (std::size_t c = 0; c < W.rows; ++c) {
      T acc = params.classifier.b[c];
      const T* wr = W.row(c);
      for (std::size_t i = 0; i < k; ++i) acc += wr[i] * tr.o_used[i];
      tr.logits[c] = acc;
    }
    tr.probs = softmax(tr.logits);
    traces.push_back(std::move(tr));
  }
  return traces;
}

/// Gradients mirroring the parameter layout; also used for the optimizer's
/// accumulators.
template <class T>
struct Gradients {
  std::vector<Matrix<T>> emb;                           // per group
  std::vector<std::vector<std::vector<Matrix<T>>>> fw;  // [g][h idx][map]
  std::vector<std::vector<std::vector<T>>> fb;
  Matrix<T> cw;
  Vec<T> cb;
};

template <class T>
Gradients<T> zero_gradients(const ModelParams<T>& p) {
  Gradients<T> g;
  for (const auto& grp : p.groups)
    g.emb.emplace_back(grp.table.rows, grp.table.cols);
  for (const auto& bank : p.banks) {
    std::vector<std::vector<Matrix<T>>> gw;
    std::vector<std::vector<T>> gb;
    for (const auto& row : bank.filters) {
      std::vector<Matrix<T>> rw;
      std::vector<T> rb;
      for (const auto& f : row) {
        rw.emplace_back(f.w.rows, f.w.cols);
        rb.push_back(T{0});
      }
      gw.push_back(std::move(rw));
      gb.push_back(std::move(rb));
    }
    g.fw.push_back(std::move(gw));
    g.fb.push_back(std::move(gb));
  }
  g.cw = Matrix<T>(p.classifier.w.rows, p.classifier.w.cols);
  g.cb.assign(p.classifier.b.size(), T{0});
  return g;
}

/// Accumulate scale * dLoss/dParams for one example into `out`; returns the
/// example's cross-entropy loss. The trace must come from a train-mode
/// forward pass.
template <class T>
T backward(const Trace<T>& tr, const ModelParams<T>& params, int label,
           T scale, Gradients<T>& out) {
  const std::size_t k = params.feature_dim();
  const std::size_t C = params.n_classes();
  if (tr.o_used.size() != k || static_cast<std::size_t>(label) >= C)
    throw UsageError("backward: trace/params/label mismatch");
  const T loss = cross_entropy(tr.probs, static_cast<std::size_t>(label));

  // Softmax + cross-entropy.
  Vec<T> dlogits = tr.probs;
  dlogits[static_cast<std::size_t>(label)] -= 1;

  // Classifier.
  const auto& W = params.classifier.w;
  Vec<T> dou(k, T{0});
  for (std::size_t c = 0; c < C; ++c) {
    const T dc = dlogits[c];
    out.cb[c] += scale * dc;
    T* gw = out.cw.row(c);
    const T* wr = W.row(c);
    for (std::size_t i = 0; i < k; ++i) {
      gw[i] += scale * dc * tr.o_used[i];
      dou[i] += wr[i] * dc;
    }
  }

  // Back through the feature-vector rescaling, if it was applied.
  Vec<T>& dom = dou;  // becomes gradient w.r.t. o_masked
  for (std::size_t si = 0; si < tr.cseg.size(); ++si) {
    const auto [lo, hi] = tr.cseg[si];
    const T n = tr.cnorm[si];
    const T lambda = tr.clambda[si];
    if (!(n > lambda)) continue;  // rescale was a no-op
    // o' = lambda * o / ||o||; J = (lambda/n) (I - oo^T/n^2).
    T dot = 0;
    for (std::size_t i = lo; i < hi; ++i) dot += dou[i] * tr.o_masked[i];
    dot /= n * n;
    const T s = lambda / n;
    for (std::size_t i = lo; i < hi; ++i)
      dom[i] = s * (dou[i] - dot * tr.o_masked[i]);
  }

  // Dropout mask.
  if (!tr.mask.empty())
    for (std::size_t i = 0; i < k; ++i)
      if (!tr.mask[i]) dom[i] = 0;

  // Filters and embeddings; gradient flows only through each feature map's
  // argmax window.
  std::size_t flat = 0;
  for (std::size_t g = 0; g < params.groups.size(); ++g) {
    const auto& bank = params.banks[g];
    const auto& A = tr.sent[g];
    const bool update_emb = params.groups[g].trainable;
    Matrix<T>* demb = update_emb ? &out.emb[g] : nullptr;
    for (std::size_t hi_idx = 0; hi_idx < bank.filters.size(); ++hi_idx) {
      const auto& row = bank.filters[hi_idx];
      for (std::size_t f = 0; f < row.size(); ++f, ++flat) {
        const T d_o = dom[flat];
        if (d_o == T{0}) continue;
        const std::size_t t = tr.argmax[flat];
        const T g_pre =
            d_o * activate_deriv(tr.preact[flat][t], params.act);
        if (g_pre == T{0}) continue;
        const auto& w = row[f].w;
        out.fb[g][hi_idx][f] += scale * g_pre;
        Matrix<T>& gw = out.fw[g][hi_idx][f];
        for (std::size_t r = 0; r < w.rows; ++r) {
          const T* ar = A.row(t + r);
          T* gwr = gw.row(r);
          for (std::size_t col = 0; col < w.cols; ++col)
            gwr[col] += scale * g_pre * ar[col];
        }
        if (demb != nullptr) {
          for (std::size_t r = 0; r < w.rows; ++r) {
            const int tok = tr.tokens[t + r];
            if (tok == Vocabulary::kPadIndex) continue;  // PAD stays frozen
            const T* wr = w.row(r);
            T* er = demb->row(static_cast<std::size_t>(tok));
            for (std::size_t col = 0; col < w.cols; ++col)
              er[col] += scale * g_pre * wr[col];
          }
        }
      }
    }
  }
  return loss;
}

/// Predicted class = argmax probability (first index on ties).
template <class T>
int predict(const Trace<T>& tr) {
  std::size_t arg = 0;
  for (std::size_t i = 1; i < tr.probs.size(); ++i)
    if (tr.probs[i] > tr.probs[arg]) arg = i;
  return static_cast<int>(arg);
}

}  // namespace mgnc
