#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lpbias/backend.hpp"
#include "lpbias/bias_core.hpp"
#include "lpbias/stats/permutation.hpp"
#include "lpbias/stimuli.hpp"

namespace lpbias {

// Words with their embeddings. Construction rejects empty sets, mixed
// dimensions and vectors with norm below 1e-12.
class EmbeddedWordSet {
 public:
  EmbeddedWordSet(std::string label, std::vector<std::pair<std::string, EmbeddingVector>> entries);

  const std::string& label() const { return label_; }
  const std::vector<std::pair<std::string, EmbeddingVector>>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return entries_.front().second.values.size(); }

 private:
  std::string label_;
  std::vector<std::pair<std::string, EmbeddingVector>> entries_;
};

double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

// mean cos(t, a) over A minus mean cos(t, b) over B.
double weat_association(const EmbeddingVector& t, const EmbeddedWordSet& a, const EmbeddedWordSet& b);

// S = mean_X s(x) - mean_Y s(y); d = S / population sd of s over X ∪ Y;
// p from re-splits of X ∪ Y into equal halves. Requires |X| = |Y|.
BiasTestResult weat_test(const EmbeddedWordSet& x, const EmbeddedWordSet& y,
                         const EmbeddedWordSet& a, const EmbeddedWordSet& b,
                         const stats::PermutationConfig& config);

// Contextual embedding of `word` placed in `role`, with the other role masked.
EmbeddingVector extract_masked_embedding(const Backend& backend, const Template& t, SlotRole role,
                                         const std::string& word, Number number = Number::any);

struct WeatInputs {
  EmbeddedWordSet x, y, a, b;
  nlohmann::json metadata;
};

// Static-vector sets for a category's baseline word lists. Words missing
// from the vectors, or from `vocabulary_filter` when given, are dropped and
// X/Y are balanced with `seed`.
WeatInputs build_static_inputs(const WeatCategory& category, const Backend& vectors,
                               const Backend* vocabulary_filter, std::uint64_t seed);

// Contextual sets: each word is embedded once per agreement-valid template
// and the per-template vectors are averaged.
WeatInputs build_contextual_inputs(const WeatCategory& category, const Backend& backend,
                                   std::uint64_t seed, std::size_t jobs = 1);

}  // namespace lpbias
