#include "lpbias/http_backend.hpp"

#include <cmath>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

using nlohmann::json;

namespace {

constexpr time_t kTimeoutSeconds = 300;
constexpr time_t kConnectSeconds = 10;

[[noreturn]] void raise_reply(const std::string& path, int status, const std::string& body) {
  if (status >= 400 && status < 500) {
    try {
      auto j = json::parse(body);
      if (j.contains("unknown_token")) throw OovError(j["unknown_token"].get<std::string>());
      throw ValidationError("backend rejected " + path + ": " + j.value("error", body));
    } catch (const json::exception&) {
      throw ValidationError("backend rejected " + path + ": " + body);
    }
  }
  throw TransportError("backend " + path + " failed with HTTP status " + std::to_string(status));
}

json parse_reply(const std::string& path, const std::string& body) {
  try {
    return json::parse(body);
  } catch (const json::exception& e) {
    throw TransportError("malformed reply from backend " + path + ": " + e.what());
  }
}

}  // namespace

HttpBackend HttpBackend::connect(const std::string& address) {
  auto colon = address.rfind(':');
  if (colon == std::string::npos || colon == 0)
    throw ValidationError("http backend address must be host:port, got '" + address + "'");
  int port = 0;
  try {
    port = std::stoi(address.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("bad port in http backend address '" + address + "'");
  }
  HttpBackend b(address.substr(0, colon), port);
  try {
    auto info = parse_reply("/info", b.get("/info"));
    auto vocab = parse_reply("/vocab", b.get("/vocab"));
    b.mask_token_ = info.value("mask_token", std::string("[MASK]"));
    for (const auto& t : vocab.at("tokens")) b.vocabulary_.insert(t.get<std::string>());
    b.descriptor_ = {info.value("name", std::string("http:") + address), BackendKind::masked_lm,
                     b.vocabulary_.size(), info.value("embedding_dimension", std::size_t{0})};
  } catch (const json::exception& e) {
    throw TransportError("unexpected backend handshake reply: " + std::string(e.what()));
  }
  if (b.vocabulary_.empty()) throw TransportError("backend reported an empty vocabulary");
  return b;
}

std::string HttpBackend::get(const std::string& path) const {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(kConnectSeconds, 0);
  cli.set_read_timeout(kTimeoutSeconds, 0);
  auto res = cli.Get(path);
  if (!res) throw TransportError("cannot reach backend at " + host_ + ":" + std::to_string(port_) +
                                 path + " (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200) raise_reply(path, res->status, res->body);
  return res->body;
}

std::string HttpBackend::post(const std::string& path, const std::string& body) const {
  httplib::Client cli(host_, port_);
  cli.set_connection_timeout(kConnectSeconds, 0);
  cli.set_read_timeout(kTimeoutSeconds, 0);
  auto res = cli.Post(path, body, "application/json");
  if (!res) throw TransportError("cannot reach backend at " + host_ + ":" + std::to_string(port_) +
                                 path + " (" + httplib::to_string(res.error()) + ")");
  if (res->status != 200) raise_reply(path, res->status, res->body);
  return res->body;
}

std::vector<TokenSpan> HttpBackend::tokenize_with_offsets(std::string_view input) const {
  auto lowered = text::lowercase(input);
  auto reply = parse_reply("/tokenize", post("/tokenize", json{{"text", lowered}}.dump()));
  std::vector<TokenSpan> out;
  try {
    const auto& tokens = reply.at("tokens");
    const auto& offsets = reply.at("offsets");
    if (tokens.size() != offsets.size()) throw TransportError("tokenize reply length mismatch");
    for (std::size_t i = 0; i < tokens.size(); ++i)
      out.push_back({tokens[i].get<std::string>(), offsets[i].at(0).get<std::size_t>(),
                     offsets[i].at(1).get<std::size_t>()});
  } catch (const json::exception& e) {
    throw TransportError("malformed tokenize reply: " + std::string(e.what()));
  }
  return out;
}

bool HttpBackend::in_vocabulary(std::string_view token) const {
  return vocabulary_.find(token) != vocabulary_.end();
}

DistributionMap HttpBackend::request_predictions(const MaskedQuery& query,
                                                 const std::vector<std::string>* candidates) const {
  for (const auto& tok : query.tokens())
    if (tok != mask_token_ && !in_vocabulary(tok)) throw OovError(tok);
  DistributionMap out;
  if (query.slots().empty()) return out;
  json req{{"tokens", query.tokens()}};
  std::vector<std::size_t> positions;
  for (const auto& s : query.slots()) positions.push_back(s.position);
  req["positions"] = positions;
  if (candidates) req["candidates"] = *candidates;
  auto reply = parse_reply("/predict", post("/predict", req.dump()));
  try {
    for (const auto& d : reply.at("distributions")) {
      TokenDistribution dist;
      dist.slot_position = d.at("position").get<std::size_t>();
      for (const auto& [tok, p] : d.at("probabilities").items())
        dist.probabilities.emplace(tok, p.get<double>());
      if (!candidates) validate_distribution(dist);
      out.emplace(dist.slot_position, std::move(dist));
    }
  } catch (const json::exception& e) {
    throw TransportError("malformed predict reply: " + std::string(e.what()));
  }
  for (auto p : positions)
    if (!out.count(p)) throw TransportError("backend omitted slot " + std::to_string(p));
  return out;
}

DistributionMap HttpBackend::predict_mask(const MaskedQuery& query) const {
  return request_predictions(query, nullptr);
}

double HttpBackend::token_probability(const MaskedQuery& query, SlotRole role,
                                      const std::string& candidate) const {
  auto position = query.slot_position(role);
  if (!in_vocabulary(candidate)) throw OovError(candidate);
  std::vector<std::string> candidates{candidate};
  auto dists = request_predictions(query, &candidates);
  double p = dists.at(position).probability(candidate);
  if (!(p >= 0.0 && p <= 1.0)) throw TransportError("backend returned probability outside [0,1]");
  return p;
}

EmbeddingVector HttpBackend::contextual_embedding(const MaskedQuery& query,
                                                  std::size_t position) const {
  std::size_t positions[] = {position};
  return contextual_embeddings(query, positions).front();
}

std::vector<EmbeddingVector> HttpBackend::contextual_embeddings(
    const MaskedQuery& query, std::span<const std::size_t> positions) const {
  for (auto p : positions)
    if (p >= query.tokens().size())
      throw ValidationError("embedding position " + std::to_string(p) + " out of range");
  json req{{"tokens", query.tokens()},
           {"positions", std::vector<std::size_t>(positions.begin(), positions.end())}};
  auto reply = parse_reply("/embed", post("/embed", req.dump()));
  std::vector<EmbeddingVector> out;
  try {
    const auto& vectors = reply.at("vectors");
    if (vectors.size() != positions.size()) throw TransportError("embed reply length mismatch");
    for (std::size_t i = 0; i < positions.size(); ++i) {
      EmbeddingVector v{vectors[i].get<std::vector<double>>(), positions[i]};
      if (descriptor_.embedding_dimension && v.values.size() != descriptor_.embedding_dimension)
        throw TransportError("embedding has unexpected dimension");
      for (double x : v.values)
        if (!std::isfinite(x)) throw TransportError("backend returned non-finite embedding");
      out.push_back(std::move(v));
    }
  } catch (const json::exception& e) {
    throw TransportError("malformed embed reply: " + std::string(e.what()));
  }
  return out;
}

}  // namespace lpbias
