#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "mgnc/datasets.hpp"
#include "mgnc/errors.hpp"
#include "mgnc/metrics.hpp"
#include "mgnc/model.hpp"

namespace mgnc {

struct TrainConfig {
  std::vector<int> heights = {3, 4, 5};
  int maps_per_height = 100;
  std::size_t batch_size = 50;
  int epochs = 25;
  Activation act = Activation::relu;
  std::uint64_t seed = 1;
  int precision = 64;  // 64 default; 32 opt-in
  std::optional<int> patience;  // dev-based early stopping

  std::size_t h_max() const {
    std::size_t m = 1;
    for (int h : heights) m = std::max(m, static_cast<std::size_t>(h));
    return m;
  }

  void validate() const {
    if (heights.empty() || maps_per_height < 1 || batch_size < 1 ||
        epochs < 1)
      throw UsageError("TrainConfig: counts must be positive");
    if (precision != 32 && precision != 64)
      throw UsageError("TrainConfig: precision must be 32 or 64");
  }
};

/// Accumulators for one AdaDelta-managed tensor collection. Reuses the
/// gradient layout for E[g^2] and E[dx^2].
template <class T>
struct AdaDeltaState {
  Gradients<T> eg2, edx2;
  T rho = static_cast<T>(0.95);
  T eps = static_cast<T>(1e-6);
};

template <class T>
AdaDeltaState<T> make_adadelta_state(const ModelParams<T>& p, T rho = 0.95,
                                     T eps = 1e-6) {
  return AdaDeltaState<T>{zero_gradients(p), zero_gradients(p), rho, eps};
}

/// One AdaDelta update over a flat tensor:
///   E[g2] <- rho E[g2] + (1-rho) g^2
///   dx    = -sqrt(E[dx2]+eps)/sqrt(E[g2]+eps) * g
///   E[dx2]<- rho E[dx2] + (1-rho) dx^2
///   p     <- p + dx
template <class T>
void adadelta_update(std::span<T> param, std::span<const T> grad,
                     std::span<T> eg2, std::span<T> edx2, T rho, T eps) {
  if (param.size() != grad.size() || param.size() != eg2.size() ||
      param.size() != edx2.size())
    throw UsageError("adadelta_update: shape mismatch");
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    eg2[i] = rho * eg2[i] + (1 - rho) * g * g;
    const T dx = -std::sqrt(edx2[i] + eps) / std::sqrt(eg2[i] + eps) * g;
    edx2[i] = rho * edx2[i] + (1 - rho) * dx * dx;
    param[i] += dx;
  }
}

/// Update every trainable tensor of the model in place. The PAD embedding
/// row is pinned to zero.
template <class T>
void adadelta_step(ModelParams<T>& p, const Gradients<T>& g,
                   AdaDeltaState<T>& st) {
  auto upd = [&](std::vector<T>& param, const std::vector<T>& grad,
                 std::vector<T>& eg2, std::vector<T>& edx2) {
    adadelta_update<T>(param, std::span<const T>(grad), eg2, edx2, st.rho,
                       st.eps);
  };
  for (std::size_t gi = 0; gi < p.groups.size(); ++gi) {
    if (!p.groups[gi].trainable) continue;
    upd(p.groups[gi].table.data, g.emb[gi].data, st.eg2.emb[gi].data,
        st.edx2.emb[gi].data);
    T* pad = p.groups[gi].table.row(Vocabulary::kPadIndex);
    for (std::size_t c = 0; c < p.groups[gi].dim; ++c) pad[c] = 0;
  }
  for (std::size_t gi = 0; gi < p.banks.size(); ++gi) {
    auto& bank = p.banks[gi];
    for (std::size_t hi = 0; hi < bank.filters.size(); ++hi) {
      for (std::size_t f = 0; f < bank.filters[hi].size(); ++f) {
        upd(bank.filters[hi][f].w.data, g.fw[gi][hi][f].data,
            st.eg2.fw[gi][hi][f].data, st.edx2.fw[gi][hi][f].data);
        adadelta_update<T>(std::span<T>(&bank.filters[hi][f].b, 1),
                           std::span<const T>(&g.fb[gi][hi][f], 1),
                           std::span<T>(&st.eg2.fb[gi][hi][f], 1),
                           std::span<T>(&st.edx2.fb[gi][hi][f], 1), st.rho,
                           st.eps);
      }
    }
  }
  upd(p.classifier.w.data, g.cw.data, st.eg2.cw.data, st.edx2.cw.data);
  upd(p.classifier.b, g.cb, st.eg2.cb, st.edx2.cb);
}

/// Rescale classifier rows back inside the max-norm bound(s): whole row for
/// single_lambda, each group segment independently for per_group.
template <class T>
void apply_norm_constraints(Classifier<T>& clf,
                            const RegularizationSpec& spec) {
  if (spec.target != ConstraintTarget::classifier_weights)
    throw UsageError("apply_norm_constraints: target must be classifier_weights");
  if (spec.mode == ConstraintMode::per_group &&
      spec.lambdas.size() != clf.group_bounds.size())
    throw UsageError("apply_norm_constraints: lambda/group count mismatch");
  for (std::size_t r = 0; r < clf.w.rows; ++r) {
    T* row = clf.w.row(r);
    if (spec.mode == ConstraintMode::single_lambda) {
      rescale_to_max_norm_inplace(std::span<T>(row, clf.w.cols),
                                  static_cast<T>(spec.lambdas[0]));
    } else {
      for (std::size_t s = 0; s < clf.group_bounds.size(); ++s) {
        const auto [lo, hi] = clf.group_bounds[s];
        rescale_to_max_norm_inplace(std::span<T>(row + lo, hi - lo),
                                    static_cast<T>(spec.lambdas[s]));
      }
    }
  }
}

struct HistoryRow {
  int epoch = 0;
  double train_loss = 0;
  double dev_metric = 0;
};
using History = std::vector<HistoryRow>;

/// Test-mode metric over a set of examples.
template <class T>
double evaluate_metric(const ModelParams<T>& params,
                       const std::vector<EncodedExample>& examples,
                       T dropout_p, Metric metric, std::size_t h_max) {
  if (examples.empty()) throw UsageError("evaluate_metric: empty input");
  std::vector<int> preds, labels;
  std::vector<double> scores;
  const std::size_t chunk = 256;
  for (std::size_t start = 0; start < examples.size(); start += chunk) {
    std::vector<EncodedExample> slice(
        examples.begin() + start,
        examples.begin() + std::min(examples.size(), start + chunk));
    const Batch b = make_batch(slice, h_max);
    ForwardOptions<T> opt;
    opt.dropout_p = dropout_p;
    opt.mode = Mode::test;
    const auto traces = forward(params, b, opt, nullptr);
    for (std::size_t i = 0; i < traces.size(); ++i) {
      preds.push_back(predict(traces[i]));
      labels.push_back(b.labels[i]);
      if (metric == Metric::auc) {
        if (traces[i].probs.size() != 2)
          throw UsageError("evaluate_metric: auc requires binary labels");
        scores.push_back(static_cast<double>(traces[i].probs[1]));
      }
    }
  }
  return metric == Metric::accuracy ? accuracy(preds, labels)
                                    : auc(scores, labels);
}

template <class T>
struct TrainResult {
  ModelParams<T> params;  // best-dev epoch (or final, without a dev set)
  History history;
  int best_epoch = 0;
};

/// Called after every mini-batch parameter update with the current
/// parameters and the batch's traces (used by invariant checks).
template <class T>
using BatchHook =
    std::function<void(const ModelParams<T>&, const std::vector<Trace<T>>&)>;

template <class T>
TrainResult<T> train(ModelParams<T> params,
                     const std::vector<EncodedExample>& train_examples,
                     const std::vector<EncodedExample>& dev_examples,
                     const TrainConfig& cfg, const RegularizationSpec& spec,
                     Metric metric, Rng& rng,
                     const BatchHook<T>& after_batch = nullptr) {
  cfg.validate();
  spec.validate(params.groups.size());
  if (train_examples.empty()) throw UsageError("train: empty training split");

  const std::size_t h_max = cfg.h_max();
  auto state = make_adadelta_state<T>(params);
  TrainResult<T> result;
  double best_dev = -std::numeric_limits<double>::infinity();
  int since_best = 0;

  ForwardOptions<T> opt;
  opt.dropout_p = static_cast<T>(spec.dropout_p);
  opt.mode = Mode::train;
  if (spec.target == ConstraintTarget::activations)
    opt.activation_constraint = &spec;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto batches = batch_iter(train_examples, cfg.batch_size, h_max, rng);
    double loss_sum = 0;
    for (const auto& batch : batches) {
      auto traces = forward(params, batch, opt, &rng);
      auto grads = zero_gradients(params);
      const T scale = T{1} / static_cast<T>(batch.size);
      for (std::size_t i = 0; i < traces.size(); ++i)
        loss_sum += static_cast<double>(
            backward(traces[i], params, batch.labels[i], scale, grads));
      adadelta_step(params, grads, state);
      if (spec.target == ConstraintTarget::classifier_weights)
        apply_norm_constraints(params.classifier, spec);
      if (after_batch) after_batch(params, traces);
    }
    const double train_loss =
        loss_sum / static_cast<double>(train_examples.size());
    if (!std::isfinite(train_loss))
      throw NumericError("train: non-finite loss at epoch " +
                         std::to_string(epoch));

    double dev_metric = std::numeric_limits<double>::quiet_NaN();
    if (!dev_examples.empty()) {
      dev_metric = evaluate_metric(params, dev_examples,
                                   static_cast<T>(spec.dropout_p), metric,
                                   h_max);
      if (dev_metric > best_dev) {
        best_dev = dev_metric;
        result.params = params;
        result.best_epoch = epoch;
        since_best = 0;
      } else {
        ++since_best;
      }
    }
    result.history.push_back({epoch, train_loss, dev_metric});
    if (cfg.patience && !dev_examples.empty() && since_best >= *cfg.patience)
      break;
  }
  if (dev_examples.empty()) {
    result.params = std::move(params);
    result.best_epoch = result.history.back().epoch;
  }
  return result;
}

}  // namespace mgnc
