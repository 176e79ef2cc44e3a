#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "mgnc/math_ops.hpp"
#include "mgnc/model.hpp"
#include "mgnc/training.hpp"

namespace mgnc {

/// Analytic-backward vs central-finite-difference comparison on a tiny
/// random multi-group model. Always 64-bit.
struct GradCheckReport {
  struct Entry {
    std::string tensor;
    double max_rel_err = 0;
    std::size_t worst_index = 0;
  };
  std::vector<Entry> entries;
  double max_rel_err = 0;

  bool pass(double tol = 1e-4) const { return max_rel_err < tol; }
};

namespace gradcheck_detail {

/// Enumerate every trainable tensor in a fixed order shared between params
/// and gradients. The PAD embedding row is pinned at zero, so it is not a
/// free parameter and is excluded here.
template <class Fn>
void for_each_tensor(ModelParams<double>& p, Gradients<double>& g, Fn&& fn) {
  for (std::size_t gi = 0; gi < p.groups.size(); ++gi)
    if (p.groups[gi].trainable) {
      const std::size_t dim = p.groups[gi].dim;
      std::vector<double> pt(p.groups[gi].table.data.begin() + dim,
                             p.groups[gi].table.data.end());
      std::vector<double> gt(g.emb[gi].data.begin() + dim,
                             g.emb[gi].data.end());
      fn("embeddings[" + p.groups[gi].name + "]", pt, gt);
      std::copy(pt.begin(), pt.end(),
                p.groups[gi].table.data.begin() + dim);
    }
  for (std::size_t gi = 0; gi < p.banks.size(); ++gi)
    for (std::size_t hi = 0; hi < p.banks[gi].filters.size(); ++hi)
      for (std::size_t f = 0; f < p.banks[gi].filters[hi].size(); ++f) {
        const std::string tag = "[" + p.banks[gi].group_name + "][h" +
                                std::to_string(p.banks[gi].heights[hi]) +
                                "][" + std::to_string(f) + "]";
        fn("filter_w" + tag, p.banks[gi].filters[hi][f].w.data,
           g.fw[gi][hi][f].data);
        std::vector<double> pb{p.banks[gi].filters[hi][f].b};
        std::vector<double> gb{g.fb[gi][hi][f]};
        fn("filter_b" + tag, pb, gb);
        p.banks[gi].filters[hi][f].b = pb[0];
      }
  fn("classifier_w", p.classifier.w.data, g.cw.data);
  fn("classifier_b", p.classifier.b, g.cb);
}

inline std::vector<double> flatten(ModelParams<double> p) {
  std::vector<double> theta;
  auto g = zero_gradients(p);
  for_each_tensor(p, g,
                  [&](const std::string&, std::vector<double>& t,
                      std::vector<double>&) {
                    theta.insert(theta.end(), t.begin(), t.end());
                  });
  return theta;
}

inline void scatter(ModelParams<double>& p, const std::vector<double>& theta) {
  auto g = zero_gradients(p);
  std::size_t off = 0;
  for_each_tensor(p, g,
                  [&](const std::string&, std::vector<double>& t,
                      std::vector<double>&) {
                    std::copy(theta.begin() + off,
                              theta.begin() + off + t.size(), t.begin());
                    off += t.size();
                  });
}

}  // namespace gradcheck_detail

struct GradCheckSetup {
  ModelParams<double> params;
  Batch batch;
  std::vector<std::vector<std::uint8_t>> masks;
  RegularizationSpec spec;
};

/// The tiny model exercised by the check: 2 groups of widths 4 and 5,
/// heights {2,3}, 3 maps per height, vocab 20, padded length 7, 3 classes,
/// a 2-example batch, dropout 0.5 with fixed masks.
inline GradCheckSetup make_gradcheck_setup(ConstraintTarget target,
                                           std::uint64_t seed) {
  Rng rng(seed);
  constexpr std::size_t vocab_size = 20, s = 7;
  std::vector<EmbeddingGroup<double>> groups;
  for (std::size_t g = 0; g < 2; ++g) {
    EmbeddingGroup<double> grp;
    grp.name = "g" + std::to_string(g + 1);
    grp.dim = g == 0 ? 4 : 5;
    grp.table = Matrix<double>(vocab_size, grp.dim);
    for (std::size_t r = 1; r < vocab_size; ++r)
      for (std::size_t c = 0; c < grp.dim; ++c)
        grp.table(r, c) = rng.uniform(-0.5, 0.5);
    grp.trainable = true;
    groups.push_back(std::move(grp));
  }

  GradCheckSetup setup;
  setup.params = init_model<double>(std::move(groups), {2, 3}, 3, 3,
                                    Activation::relu, rng);
  // Larger filter weights keep feature values comfortably away from the
  // relu kink and argmax ties.
  for (auto& bank : setup.params.banks)
    for (auto& row : bank.filters)
      for (auto& f : row) {
        for (auto& x : f.w.data) x = rng.uniform(-0.4, 0.4);
        f.b = rng.uniform(-0.1, 0.1);
      }
  for (auto& x : setup.params.classifier.w.data) x = rng.uniform(-0.3, 0.3);
  for (auto& x : setup.params.classifier.b) x = rng.uniform(-0.1, 0.1);

  setup.batch.size = 2;
  setup.batch.s = s;
  setup.batch.lengths = {7, 5};
  setup.batch.labels = {1, 2};
  for (std::size_t ex = 0; ex < 2; ++ex)
    for (std::size_t t = 0; t < s; ++t)
      setup.batch.idx.push_back(
          t < static_cast<std::size_t>(setup.batch.lengths[ex])
              ? static_cast<int>(1 + rng.uniform_index(vocab_size - 1))
              : Vocabulary::kPadIndex);

  const std::size_t k = setup.params.feature_dim();
  for (std::size_t ex = 0; ex < 2; ++ex) {
    std::vector<std::uint8_t> mask(k);
    for (auto& m : mask) m = rng.bernoulli(0.5) ? 1 : 0;
    setup.masks.push_back(std::move(mask));
  }

  setup.spec.mode = ConstraintMode::per_group;
  setup.spec.target = target;
  setup.spec.dropout_p = 0.5;
  if (target == ConstraintTarget::activations) {
    // Pick bounds below the current feature norms so the rescaling branch
    // is active at the operating point.
    ForwardOptions<double> opt;
    opt.dropout_p = 0.5;
    opt.mode = Mode::train;
    opt.fixed_masks = &setup.masks;
    const auto traces = forward(setup.params, setup.batch, opt, nullptr);
    setup.spec.lambdas.clear();
    for (const auto& [lo, hi] : setup.params.classifier.group_bounds) {
      double n = 1e9;
      for (const auto& tr : traces)
        n = std::min(n, l2_norm(std::span<const double>(
                            tr.o_masked.data() + lo, hi - lo)));
      setup.spec.lambdas.push_back(0.6 * n);
    }
  } else {
    setup.spec.lambdas = {1.0, 1.0};
  }
  return setup;
}

inline GradCheckReport gradient_check(ConstraintTarget target,
                                      std::uint64_t seed = 7,
                                      double h = 1e-5) {
  auto setup = make_gradcheck_setup(target, seed);

  ForwardOptions<double> opt;
  opt.dropout_p = setup.spec.dropout_p;
  opt.mode = Mode::train;
  opt.fixed_masks = &setup.masks;
  if (target == ConstraintTarget::activations)
    opt.activation_constraint = &setup.spec;

  auto mean_loss = [&](const ModelParams<double>& p) {
    const auto traces = forward(p, setup.batch, opt, nullptr);
    double loss = 0;
    for (std::size_t i = 0; i < traces.size(); ++i)
      loss += cross_entropy(traces[i].probs,
                            static_cast<std::size_t>(setup.batch.labels[i]));
    return loss / static_cast<double>(traces.size());
  };

  // Analytic gradients.
  auto traces = forward(setup.params, setup.batch, opt, nullptr);
  auto grads = zero_gradients(setup.params);
  for (std::size_t i = 0; i < traces.size(); ++i)
    backward(traces[i], setup.params, setup.batch.labels[i],
             1.0 / static_cast<double>(traces.size()), grads);

  // Finite differences over the full flattened parameter vector.
  const auto theta0 = gradcheck_detail::flatten(setup.params);
  ModelParams<double> scratch = setup.params;
  const auto fd = finite_difference_gradient(
      [&](const std::vector<double>& theta) {
        gradcheck_detail::scatter(scratch, theta);
        return mean_loss(scratch);
      },
      theta0, h);

  GradCheckReport report;
  std::size_t off = 0;
  gradcheck_detail::for_each_tensor(
      setup.params, grads,
      [&](const std::string& name, std::vector<double>& t,
          std::vector<double>& g) {
        GradCheckReport::Entry e;
        e.tensor = name;
        for (std::size_t i = 0; i < t.size(); ++i) {
          const double a = g[i], f = fd[off + i];
          // Floor keeps fd roundoff on near-zero components from reading
          // as a large relative error.
          const double denom = std::max({std::abs(a), std::abs(f), 1e-6});
          const double rel = std::abs(a - f) / denom;
          if (rel > e.max_rel_err) {
            e.max_rel_err = rel;
            e.worst_index = i;
          }
        }
        off += t.size();
        report.max_rel_err = std::max(report.max_rel_err, e.max_rel_err);
        report.entries.push_back(std::move(e));
      });
  return report;
}

}  // namespace mgnc
