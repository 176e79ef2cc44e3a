#include "mgnc/vocab.hpp"

#include "mgnc/errors.hpp"

namespace mgnc {

Vocabulary::Vocabulary() {
  tokens_.push_back(kPadToken);
  index_[kPadToken] = kPadIndex;
}

int Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  const int id = static_cast<int>(tokens_.size());
  tokens_.push_back(token);
  index_.emplace(token, id);
  return id;
}

int Vocabulary::lookup(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

Vocabulary Vocabulary::build(
    const std::vector<std::vector<std::string>>& corpora) {
  bool any = false;
  for (const auto& seq : corpora)
    if (!seq.empty()) any = true;
  if (!any) throw UsageError("Vocabulary::build: empty corpus");
  Vocabulary v;
  for (const auto& seq : corpora)
    for (const auto& tok : seq) v.add(tok);
  return v;
}

}  // namespace mgnc
