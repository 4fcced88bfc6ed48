#pragma once

#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpbias/backend.hpp"

namespace lpbias {

// Pretrained word vectors in the whitespace-separated text interchange
// format ("word v1 v2 ... vD" per line, optional "count dim" header).
class StaticVectorBackend final : public Backend {
 public:
  StaticVectorBackend(std::string name, std::unordered_map<std::string, std::vector<float>> table,
                      std::size_t dimension);

  // When `keep` is given, only those words are retained (lookups for the
  // other words then report OOV); useful for multi-gigabyte files.
  static StaticVectorBackend load(const std::string& path,
                                  const std::optional<std::set<std::string>>& keep = std::nullopt);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) const override;
  bool in_vocabulary(std::string_view token) const override;
  EmbeddingVector static_vector(std::string_view word) const override;

 private:
  std::unordered_map<std::string, std::vector<float>> table_;
  BackendDescriptor descriptor_;
};

}  // namespace lpbias
