#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace mgnc {

/// Token <-> index bijection. Index 0 is reserved for the padding token,
/// which tokenization never produces.
class Vocabulary {
 public:
  static constexpr int kPadIndex = 0;
  static constexpr const char* kPadToken = "<pad>";

  Vocabulary();

  /// Insert a token if absent; returns its index either way.
  int add(const std::string& token);

  /// Index of a token, or -1 if absent.
  int lookup(const std::string& token) const;

  const std::string& at(std::size_t index) const { return tokens_.at(index); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Vocabulary over all distinct tokens, insertion order = first occurrence.
  static Vocabulary build(
      const std::vector<std::vector<std::string>>& corpora);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace mgnc
