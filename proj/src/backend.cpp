#include "lpbias/backend.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpbias/error.hpp"
#include "lpbias/http_backend.hpp"
#include "lpbias/mock_backend.hpp"
#include "lpbias/static_vectors.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::masked_lm: return "masked-lm";
    case BackendKind::static_vectors: return "static-vectors";
    case BackendKind::mock: return "mock";
  }
  return "unknown";
}

std::string_view to_string(SlotRole role) {
  return role == SlotRole::target ? "target" : "attribute";
}

MaskedQuery MaskedQuery::make(std::vector<std::string> tokens, std::vector<MaskSlot> slots,
                              std::string template_id, std::string_view mask_token) {
  if (slots.size() > 2) throw ValidationError("a query carries at most two mask slots");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& slot = slots[i];
    if (slot.position >= tokens.size())
      throw ValidationError("mask slot position " + std::to_string(slot.position) +
                            " outside sequence of length " + std::to_string(tokens.size()));
    if (tokens[slot.position] != mask_token)
      throw ValidationError("mask slot at position " + std::to_string(slot.position) +
                            " does not hold the mask token");
    for (std::size_t j = 0; j < i; ++j) {
      if (slots[j].role == slot.role) throw ValidationError("duplicate mask slot role");
      if (slots[j].position == slot.position) throw ValidationError("duplicate mask slot position");
    }
  }
  MaskedQuery q;
  q.tokens_ = std::move(tokens);
  q.slots_ = std::move(slots);
  q.template_id_ = std::move(template_id);
  return q;
}

std::size_t MaskedQuery::slot_position(SlotRole role) const {
  for (const auto& s : slots_)
    if (s.role == role) return s.position;
  throw ValidationError("query has no " + std::string(to_string(role)) + " slot");
}

bool MaskedQuery::has_role(SlotRole role) const {
  return std::any_of(slots_.begin(), slots_.end(), [&](const MaskSlot& s) { return s.role == role; });
}

std::string MaskedQuery::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens_[i];
  }
  return out;
}

double TokenDistribution::probability(const std::string& token) const {
  auto it = probabilities.find(token);
  return it == probabilities.end() ? 0.0 : it->second;
}

void validate_distribution(const TokenDistribution& dist) {
  double total = 0.0;
  for (const auto& [token, p] : dist.probabilities) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ValidationError("probability for '" + token + "' outside [0,1]");
    total += p;
  }
  if (std::fabs(total - 1.0) > 1e-4) {
    std::ostringstream os;
    os << "distribution at position " << dist.slot_position << " sums to " << total;
    throw ValidationError(os.str());
  }
}

std::vector<std::string> Backend::tokenize(std::string_view text) const {
  std::vector<std::string> out;
  for (auto& span : tokenize_with_offsets(text)) out.push_back(std::move(span.token));
  return out;
}

DistributionMap Backend::predict_mask(const MaskedQuery&) const {
  throw UnsupportedOperationError(std::string(to_string(descriptor().kind)) +
                                  " backend does not serve masked predictions");
}

double Backend::token_probability(const MaskedQuery& query, SlotRole role,
                                  const std::string& candidate) const {
  auto position = query.slot_position(role);
  if (!in_vocabulary(candidate)) throw OovError(candidate);
  auto dists = predict_mask(query);
  auto it = dists.find(position);
  if (it == dists.end()) throw ValidationError("backend returned no distribution for slot");
  return it->second.probability(candidate);
}

EmbeddingVector Backend::contextual_embedding(const MaskedQuery&, std::size_t) const {
  throw UnsupportedOperationError(std::string(to_string(descriptor().kind)) +
                                  " backend does not serve contextual embeddings");
}

std::vector<EmbeddingVector> Backend::contextual_embeddings(
    const MaskedQuery& query, std::span<const std::size_t> positions) const {
  std::vector<EmbeddingVector> out;
  out.reserve(positions.size());
  for (auto p : positions) out.push_back(contextual_embedding(query, p));
  return out;
}

EmbeddingVector Backend::static_vector(std::string_view) const {
  throw UnsupportedOperationError(std::string(to_string(descriptor().kind)) +
                                  " backend does not serve static vectors");
}

DistributionMap predict_mask(const Backend& backend, const MaskedQuery& query) {
  return backend.predict_mask(query);
}

double token_probability(const Backend& backend, const MaskedQuery& query, SlotRole role,
                         const std::string& candidate) {
  return backend.token_probability(query, role, candidate);
}

std::unique_ptr<Backend> make_backend(std::string_view spec) {
  auto colon = spec.find(':');
  if (colon == std::string_view::npos)
    throw ValidationError("backend spec must look like kind:path-or-address, got '" +
                          std::string(spec) + "'");
  auto kind = spec.substr(0, colon);
  auto rest = std::string(spec.substr(colon + 1));
  if (kind == "mock") return std::make_unique<MockBackend>(MockBackend::load(rest));
  if (kind == "vectors" || kind == "static")
    return std::make_unique<StaticVectorBackend>(StaticVectorBackend::load(rest));
  if (kind == "http") return std::make_unique<HttpBackend>(HttpBackend::connect(rest));
  throw ValidationError("unknown backend kind '" + std::string(kind) + "'");
}

}  // namespace lpbias
