#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpbias/backend.hpp"

namespace lpbias {

// Table-driven backend for offline runs. Sentence keys are the space-joined
// token sequence of a query, e.g. "[MASK] is a programmer".
struct MockConfig {
  std::string name = "mock";
  // Explicit vocabulary; when empty it is derived from every token mentioned
  // anywhere in the tables.
  std::vector<std::string> vocabulary;
  // Simulated subword splitting: word -> pieces ("##" marks continuation).
  std::map<std::string, std::vector<std::string>> wordpieces;
  std::map<std::string, std::map<std::size_t, std::map<std::string, double>>> predictions;
  std::map<std::string, std::map<std::size_t, std::vector<double>>> embeddings;
  // Context-free fallback for contextual_embedding().
  std::map<std::string, std::vector<double>> token_vectors;
  std::map<std::string, std::vector<double>> static_vectors;
  bool thread_safe = true;
};

MockConfig parse_mock_config(const std::string& json_text, const std::string& source = "<memory>");
std::string serialize_mock_config(const MockConfig& config);

class MockBackend final : public Backend {
 public:
  explicit MockBackend(MockConfig config);
  static MockBackend load(const std::string& path);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  bool thread_safe() const override { return config_.thread_safe; }
  std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) const override;
  bool in_vocabulary(std::string_view token) const override;
  DistributionMap predict_mask(const MaskedQuery& query) const override;
  EmbeddingVector contextual_embedding(const MaskedQuery& query,
                                       std::size_t position) const override;
  EmbeddingVector static_vector(std::string_view word) const override;

  const MockConfig& config() const { return config_; }

 private:
  void check_tokens(const MaskedQuery& query) const;

  MockConfig config_;
  std::set<std::string, std::less<>> vocabulary_;
  std::unordered_map<std::string, DistributionMap> tables_;
  BackendDescriptor descriptor_;
};

}  // namespace lpbias
