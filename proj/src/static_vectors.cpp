#include "lpbias/static_vectors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

namespace {

std::vector<std::string_view> fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  // from_chars for float is available in libstdc++ 11.
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

bool is_count(std::string_view s) {
  return !s.empty() && s.find_first_not_of("0123456789") == std::string_view::npos;
}

}  // namespace

StaticVectorBackend::StaticVectorBackend(std::string name,
                                         std::unordered_map<std::string, std::vector<float>> table,
                                         std::size_t dimension)
    : table_(std::move(table)) {
  if (table_.empty()) throw ValidationError("static vector table is empty");
  for (const auto& [w, v] : table_)
    if (v.size() != dimension) throw ValidationError("vector for '" + w + "' has wrong dimension");
  descriptor_ = {std::move(name), BackendKind::static_vectors, table_.size(), dimension};
}

StaticVectorBackend StaticVectorBackend::load(const std::string& path,
                                              const std::optional<std::set<std::string>>& keep) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open vector file: " + path);
  std::unordered_map<std::string, std::vector<float>> table;
  std::size_t dim = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto f = fields(line);
    if (f.empty()) continue;
    if (lineno == 1 && f.size() == 2 && is_count(f[0]) && is_count(f[1])) continue;
    if (f.size() < 2) throw ParseError(path, lineno, "expected a word followed by components");
    if (dim == 0) dim = f.size() - 1;
    if (f.size() - 1 != dim)
      throw ParseError(path, lineno,
                       "expected " + std::to_string(dim) + " components, found " +
                           std::to_string(f.size() - 1));
    std::string word(f[0]);
    if (keep && !keep->count(word)) continue;
    if (table.count(word)) continue;  // first occurrence wins
    std::vector<float> v(dim);
    for (std::size_t i = 0; i < dim; ++i)
      if (!parse_float(f[i + 1], v[i])) throw ParseError(path, lineno, "bad component value");
    table.emplace(std::move(word), std::move(v));
  }
  if (table.empty()) throw ValidationError("no vectors loaded from " + path);
  return StaticVectorBackend(path, std::move(table), dim);
}

std::vector<TokenSpan> StaticVectorBackend::tokenize_with_offsets(std::string_view input) const {
  return text::basic_tokenize(text::lowercase(input));
}

bool StaticVectorBackend::in_vocabulary(std::string_view token) const {
  return table_.find(std::string(token)) != table_.end();
}

EmbeddingVector StaticVectorBackend::static_vector(std::string_view word) const {
  auto it = table_.find(std::string(word));
  if (it == table_.end()) throw OovError(std::string(word));
  return {std::vector<double>(it->second.begin(), it->second.end()), 0};
}

}  // namespace lpbias
