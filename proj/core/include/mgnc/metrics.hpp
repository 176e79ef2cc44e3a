#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace mgnc {

/// Fraction of matching entries.
double accuracy(const std::vector<int>& predictions,
                const std::vector<int>& labels);

/// Mann-Whitney AUC: (#correctly ordered positive/negative pairs + half the
/// ties) / (pos * neg). Requires both classes present.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

enum class Metric { accuracy, auc };

inline const char* to_string(Metric m) {
  return m == Metric::accuracy ? "accuracy" : "auc";
}

/// Statistics over repetition seeds.
struct Summary {
  double mean = 0, min = 0, max = 0;
  std::size_t n = 0;
};

Summary summarize(const std::vector<double>& values);

/// "95.52 (94.60,96.60)" style formatting; values are scaled by 100.
std::string format_summary(const Summary& s);

}  // namespace mgnc
