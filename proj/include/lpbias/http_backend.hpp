#pragma once

#include <set>
#include <string>

#include "lpbias/backend.hpp"

namespace lpbias {

// Client for an out-of-process masked language model speaking JSON over HTTP.
//
//   GET  /info      -> {"name", "embedding_dimension", "mask_token"}
//   GET  /vocab     -> {"tokens": [...]}
//   POST /tokenize  {"text"} -> {"tokens": [...], "offsets": [[begin, end], ...]}
//                   (byte offsets into the UTF-8 text that was sent)
//   POST /predict   {"tokens", "positions", "candidates"?}
//                   -> {"distributions": [{"position", "probabilities": {token: p}}]}
//                   (full distribution when "candidates" is absent)
//   POST /embed     {"tokens", "positions"} -> {"vectors": [[...], ...]}
//
// Token sequences never include the model's sentence delimiters; the server
// adds them. A 4xx reply carries {"error", "unknown_token"?} and maps to a
// validation error; connection failures and 5xx replies are TransportError.
class HttpBackend final : public Backend {
 public:
  static HttpBackend connect(const std::string& address);

  const BackendDescriptor& descriptor() const override { return descriptor_; }
  std::string_view mask_token() const override { return mask_token_; }
  std::vector<TokenSpan> tokenize_with_offsets(std::string_view text) const override;
  bool in_vocabulary(std::string_view token) const override;
  DistributionMap predict_mask(const MaskedQuery& query) const override;
  double token_probability(const MaskedQuery& query, SlotRole role,
                           const std::string& candidate) const override;
  EmbeddingVector contextual_embedding(const MaskedQuery& query,
                                       std::size_t position) const override;
  std::vector<EmbeddingVector> contextual_embeddings(
      const MaskedQuery& query, std::span<const std::size_t> positions) const override;

 private:
  HttpBackend(std::string host, int port) : host_(std::move(host)), port_(port) {}
  std::string get(const std::string& path) const;
  std::string post(const std::string& path, const std::string& body) const;
  DistributionMap request_predictions(const MaskedQuery& query,
                                      const std::vector<std::string>* candidates) const;

  std::string host_;
  int port_ = 0;
  std::string mask_token_ = "[MASK]";
  std::set<std::string, std::less<>> vocabulary_;
  BackendDescriptor descriptor_;
};

}  // namespace lpbias
