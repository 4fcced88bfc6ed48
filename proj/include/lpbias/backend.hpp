#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lpbias {

enum class BackendKind { masked_lm, static_vectors, mock };

std::string_view to_string(BackendKind kind);

struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::mock;
  std::size_t vocabulary_size = 0;
  std::size_t embedding_dimension = 0;
};

enum class SlotRole { target, attribute };

std::string_view to_string(SlotRole role);

struct MaskSlot {
  std::size_t position = 0;
  SlotRole role = SlotRole::target;
  bool operator==(const MaskSlot&) const = default;
};

// A rendered probe sentence. Construct through make() so the invariants are
// checked: every slot position holds the mask token, roles are distinct and
// positions are in range.
class MaskedQuery {
 public:
  MaskedQuery() = default;
  static MaskedQuery make(std::vector<std::string> tokens, std::vector<MaskSlot> slots,
                          std::string template_id, std::string_view mask_token);

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<MaskSlot>& slots() const { return slots_; }
  const std::string& template_id() const { return template_id_; }

  // Position of the slot carrying `role`; throws ValidationError if absent.
  std::size_t slot_position(SlotRole role) const;
  bool has_role(SlotRole role) const;

  // Tokens joined by single spaces; the key used by mock tables.
  std::string text() const;

  bool operator==(const MaskedQuery&) const = default;

 private:
  std::vector<std::string> tokens_;
  std::vector<MaskSlot> slots_;
  std::string template_id_;
};

struct TokenDistribution {
  std::size_t slot_position = 0;
  std::unordered_map<std::string, double> probabilities;

  // Probability of `token`; 0 when the token carries no mass.
  double probability(const std::string& token) const;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t source_token_position = 0;
};

// A token with its byte range in the text handed to tokenize_with_offsets().
struct TokenSpan {
  std::string token;
  std::size_t begin = 0;
  std::size_t end = 0;
};

using DistributionMap = std::map<std::size_t, TokenDistribution>;

// Source of model evidence. Implementations are read-only after construction;
// thread_safe() reports whether concurrent calls are allowed.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual const BackendDescriptor& descriptor() const = 0;
  virtual std::string_view mask_token() const { return "[MASK]"; }
  virtual bool thread_safe() const { return true; }

  // Text is lowercased before tokenization.
  virtual std::vector<std::string> tokenize(std::string_view text) const;
  virtual std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) const = 0;
  virtual bool in_vocabulary(std::string_view token) const = 0;

  virtual DistributionMap predict_mask(const MaskedQuery& query) const;
  virtual double token_probability(const MaskedQuery& query, SlotRole role,
                                   const std::string& candidate) const;
  virtual EmbeddingVector contextual_embedding(const MaskedQuery& query,
                                               std::size_t position) const;
  // Batched form; the default loops over contextual_embedding().
  virtual std::vector<EmbeddingVector> contextual_embeddings(
      const MaskedQuery& query, std::span<const std::size_t> positions) const;
  virtual EmbeddingVector static_vector(std::string_view word) const;
};

// Free-function spellings of the backend operations.
DistributionMap predict_mask(const Backend& backend, const MaskedQuery& query);
double token_probability(const Backend& backend, const MaskedQuery& query, SlotRole role,
                         const std::string& candidate);

// Builds a backend from "kind:path-or-address":
//   mock:<config.json>   vectors:<file.txt>   http:<host>:<port>
std::unique_ptr<Backend> make_backend(std::string_view spec);

// Checks the distribution contract: entries in [0,1] summing to 1 within 1e-4.
void validate_distribution(const TokenDistribution& dist);

}  // namespace lpbias
