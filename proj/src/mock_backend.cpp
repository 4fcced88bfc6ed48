#include "lpbias/mock_backend.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

using nlohmann::json;

namespace {

std::size_t parse_position(const std::string& key, const std::string& source) {
  std::size_t used = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(key, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != key.size() || key.empty())
    throw SchemaError(source + ": slot position key '" + key + "' is not an integer");
  return v;
}

std::vector<double> as_vector(const json& j, const std::string& source) {
  if (!j.is_array()) throw SchemaError(source + ": embedding must be an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) {
    if (!x.is_number()) throw SchemaError(source + ": embedding entries must be numeric");
    v.push_back(x.get<double>());
    if (!std::isfinite(v.back())) throw ValidationError(source + ": non-finite embedding entry");
  }
  return v;
}

std::map<std::string, std::vector<double>> as_vector_table(const json& j, const std::string& source) {
  std::map<std::string, std::vector<double>> out;
  for (const auto& [k, v] : j.items()) out[k] = as_vector(v, source);
  return out;
}

}  // namespace

MockConfig parse_mock_config(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, text::line_of_offset(json_text, e.byte), e.what());
  }
  if (!j.is_object()) throw SchemaError(source + ": mock config must be a JSON object");
  MockConfig c;
  c.name = j.value("name", std::string("mock"));
  c.thread_safe = j.value("thread_safe", true);
  if (j.contains("vocabulary")) c.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
  if (j.contains("wordpieces"))
    c.wordpieces = j["wordpieces"].get<std::map<std::string, std::vector<std::string>>>();
  if (j.contains("predictions")) {
    for (const auto& [sentence, slots] : j["predictions"].items()) {
      auto& row = c.predictions[sentence];
      for (const auto& [pos, dist] : slots.items()) {
        auto& d = row[parse_position(pos, source)];
        for (const auto& [tok, p] : dist.items()) {
          if (!p.is_number()) throw SchemaError(source + ": probability must be numeric");
          d[tok] = p.get<double>();
        }
      }
    }
  }
  if (j.contains("embeddings")) {
    for (const auto& [sentence, slots] : j["embeddings"].items())
      for (const auto& [pos, vec] : slots.items())
        c.embeddings[sentence][parse_position(pos, source)] = as_vector(vec, source);
  }
  if (j.contains("token_vectors")) c.token_vectors = as_vector_table(j["token_vectors"], source);
  if (j.contains("static_vectors")) c.static_vectors = as_vector_table(j["static_vectors"], source);
  return c;
}

std::string serialize_mock_config(const MockConfig& c) {
  json j;
  j["name"] = c.name;
  j["thread_safe"] = c.thread_safe;
  if (!c.vocabulary.empty()) j["vocabulary"] = c.vocabulary;
  if (!c.wordpieces.empty()) j["wordpieces"] = c.wordpieces;
  json preds = json::object();
  for (const auto& [sentence, slots] : c.predictions)
    for (const auto& [pos, dist] : slots) preds[sentence][std::to_string(pos)] = dist;
  j["predictions"] = preds;
  if (!c.embeddings.empty()) {
    json emb = json::object();
    for (const auto& [sentence, slots] : c.embeddings)
      for (const auto& [pos, vec] : slots) emb[sentence][std::to_string(pos)] = vec;
    j["embeddings"] = emb;
  }
  if (!c.token_vectors.empty()) j["token_vectors"] = c.token_vectors;
  if (!c.static_vectors.empty()) j["static_vectors"] = c.static_vectors;
  return j.dump(1);
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {
  auto add_sentence_tokens = [&](const std::string& sentence) {
    for (auto& piece : text::split(sentence, ' '))
      if (!piece.empty() && piece != mask_token()) vocabulary_.insert(piece);
  };
  if (!config_.vocabulary.empty()) {
    vocabulary_.insert(config_.vocabulary.begin(), config_.vocabulary.end());
  } else {
    for (const auto& [sentence, slots] : config_.predictions) {
      add_sentence_tokens(sentence);
      for (const auto& [pos, dist] : slots)
        for (const auto& [tok, p] : dist) vocabulary_.insert(tok);
    }
    for (const auto& [sentence, slots] : config_.embeddings) add_sentence_tokens(sentence);
    for (const auto& [tok, v] : config_.token_vectors)
      if (tok != mask_token()) vocabulary_.insert(tok);
    for (const auto& [word, pieces] : config_.wordpieces)
      vocabulary_.insert(pieces.begin(), pieces.end());
    for (const auto& [word, v] : config_.static_vectors) vocabulary_.insert(word);
  }

  for (const auto& [sentence, slots] : config_.predictions) {
    auto& row = tables_[sentence];
    for (const auto& [pos, probs] : slots) {
      TokenDistribution d;
      d.slot_position = pos;
      d.probabilities.insert(probs.begin(), probs.end());
      try {
        validate_distribution(d);
      } catch (const ValidationError& e) {
        throw ValidationError("mock sentence '" + sentence + "': " + e.what());
      }
      row.emplace(pos, std::move(d));
    }
  }

  std::size_t dim = 0;
  auto check_dim = [&](const std::vector<double>& v) {
    if (v.empty()) throw ValidationError("mock embedding is empty");
    if (dim == 0) dim = v.size();
    if (v.size() != dim) throw ValidationError("mock embeddings have inconsistent dimensions");
  };
  for (const auto& [s, slots] : config_.embeddings)
    for (const auto& [p, v] : slots) check_dim(v);
  for (const auto& [t, v] : config_.token_vectors) check_dim(v);
  for (const auto& [w, v] : config_.static_vectors) check_dim(v);

  descriptor_.name = config_.name;
  descriptor_.kind = BackendKind::mock;
  descriptor_.vocabulary_size = vocabulary_.size();
  descriptor_.embedding_dimension = dim;
  if (descriptor_.vocabulary_size == 0) throw ValidationError("mock backend has an empty vocabulary");
}

MockBackend MockBackend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mock backend config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return MockBackend(parse_mock_config(ss.str(), path));
}

std::vector<TokenSpan> MockBackend::tokenize_with_offsets(std::string_view input) const {
  std::vector<TokenSpan> out;
  for (auto& span : text::basic_tokenize(text::lowercase(input))) {
    auto it = config_.wordpieces.find(span.token);
    if (it == config_.wordpieces.end()) {
      out.push_back(std::move(span));
      continue;
    }
    std::size_t cursor = span.begin;
    for (std::size_t i = 0; i < it->second.size(); ++i) {
      const auto& piece = it->second[i];
      std::size_t len = piece.rfind("##", 0) == 0 ? piece.size() - 2 : piece.size();
      std::size_t end = i + 1 == it->second.size() ? span.end : std::min(span.end, cursor + len);
      out.push_back({piece, cursor, end});
      cursor = end;
    }
  }
  return out;
}

bool MockBackend::in_vocabulary(std::string_view token) const {
  return vocabulary_.find(token) != vocabulary_.end();
}

void MockBackend::check_tokens(const MaskedQuery& query) const {
  for (const auto& tok : query.tokens())
    if (tok != mask_token() && !in_vocabulary(tok)) throw OovError(tok);
}

DistributionMap MockBackend::predict_mask(const MaskedQuery& query) const {
  check_tokens(query);
  DistributionMap out;
  if (query.slots().empty()) return out;
  auto key = query.text();
  auto row = tables_.find(key);
  if (row == tables_.end()) throw ValidationError("mock has no predictions for '" + key + "'");
  for (const auto& slot : query.slots()) {
    auto it = row->second.find(slot.position);
    if (it == row->second.end())
      throw ValidationError("mock has no distribution for slot " + std::to_string(slot.position) +
                            " of '" + key + "'");
    out.emplace(slot.position, it->second);
  }
  return out;
}

EmbeddingVector MockBackend::contextual_embedding(const MaskedQuery& query,
                                                  std::size_t position) const {
  if (position >= query.tokens().size())
    throw ValidationError("embedding position " + std::to_string(position) + " out of range");
  check_tokens(query);
  auto key = query.text();
  if (auto row = config_.embeddings.find(key); row != config_.embeddings.end()) {
    if (auto it = row->second.find(position); it != row->second.end()) return {it->second, position};
  }
  const auto& tok = query.tokens()[position];
  if (auto it = config_.token_vectors.find(tok); it != config_.token_vectors.end())
    return {it->second, position};
  throw ValidationError("mock has no embedding for position " + std::to_string(position) +
                        " of '" + key + "'");
}

EmbeddingVector MockBackend::static_vector(std::string_view word) const {
  auto it = config_.static_vectors.find(std::string(word));
  if (it == config_.static_vectors.end()) {
    if (config_.static_vectors.empty())
      throw UnsupportedOperationError("mock backend has no static vector table");
    throw OovError(std::string(word));
  }
  return {it->second, 0};
}

}  // namespace lpbias
