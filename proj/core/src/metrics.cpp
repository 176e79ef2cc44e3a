#include "mgnc/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "mgnc/errors.hpp"

namespace mgnc {

double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels) {
  if (predictions.size() != labels.size() || predictions.empty())
    throw UsageError("accuracy: length mismatch or empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size() || scores.empty())
    throw UsageError("auc: length mismatch or empty input");
  std::size_t n_pos = 0, n_neg = 0;
  for (int l : labels) {
    if (l == 1) ++n_pos;
    else if (l == 0) ++n_neg;
    else throw UsageError("auc: labels must be binary");
  }
  if (n_pos == 0 || n_neg == 0)
    throw UsageError("auc: both classes must be present");

  // Rank-sum with average ranks for ties.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  double rank_sum_pos = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    // 1-based ranks i+1 .. j averaged over the tie block.
    const double avg_rank = (static_cast<double>(i + 1 + j)) / 2.0;
    for (std::size_t t = i; t < j; ++t)
      if (labels[order[t]] == 1) rank_sum_pos += avg_rank;
    i = j;
  }
  const double u = rank_sum_pos -
                   static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1) / 2.0;
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw UsageError("summarize: empty input");
  Summary s;
  s.n = values.size();
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) /
           static_cast<double>(values.size());
  return s;
}

std::string format_summary(const Summary& s) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.2f (%.2f,%.2f)", s.mean * 100.0,
                s.min * 100.0, s.max * 100.0);
  return buf;
}

}  // namespace mgnc
