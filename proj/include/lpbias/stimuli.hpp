#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpbias/backend.hpp"
#include "lpbias/stats/random.hpp"

namespace lpbias {

enum class Number { singular, plural, any };

std::string_view to_string(Number n);
Number parse_number(std::string_view s);

// True unless both numbers are definite and differ.
bool agrees(Number a, Number b);

struct Template {
  std::string id;
  std::string text;  // contains "[TARGET]" once and "[ATTRIBUTE]" at most once
  Number number = Number::any;

  bool has_attribute() const;
};

// Throws ValidationError when placeholder counts are wrong.
void validate_template(const Template& t);

struct TargetWord {
  std::string token;
  Number number = Number::any;
  bool operator==(const TargetWord&) const = default;
};

struct TargetSet {
  std::string label;
  std::vector<TargetWord> words;
};

struct AttributeSet {
  std::string label;
  std::vector<std::string> words;
};

// One bias test: target sets X/Y, attribute sets A/B and the probe templates.
// The optional baseline block holds the word lists and templates used by the
// cosine WEAT baseline when they differ from the probe ones.
struct WeatCategory {
  std::string name;
  TargetSet x, y;
  AttributeSet a, b;
  std::vector<Template> templates;

  std::optional<TargetSet> baseline_x, baseline_y;
  std::vector<Template> baseline_templates;

  const TargetSet& weat_x() const { return baseline_x ? *baseline_x : x; }
  const TargetSet& weat_y() const { return baseline_y ? *baseline_y : y; }
  const std::vector<Template>& weat_templates() const {
    return baseline_templates.empty() ? templates : baseline_templates;
  }
};

WeatCategory parse_category(const std::string& json_text, const std::string& source = "<memory>");
WeatCategory load_category(const std::string& path);

// What goes into a placeholder: a word or the mask token. `number` is the
// grammatical number of the target the slot stands for.
struct Fill {
  std::optional<std::string> word;
  Number number = Number::any;

  static Fill mask(Number n = Number::any) { return {std::nullopt, n}; }
  static Fill with(std::string w, Number n = Number::any) { return {std::move(w), n}; }
  bool masked() const { return !word.has_value(); }
};

// Substitutes both placeholders, lowercases, tokenizes with the backend and
// records mask slots by role.
MaskedQuery render(const Backend& backend, const Template& t, const Fill& target,
                   const Fill& attribute);

// True when the lowercased word is one vocabulary token.
bool is_single_token(const Backend& backend, std::string_view word);

// Throws MultiTokenError or OovError unless is_single_token() holds.
void require_single_token(const Backend& backend, std::string_view word);

std::vector<std::string> filter_oov(std::span<const std::string> words, const Backend& backend);
TargetSet filter_oov(const TargetSet& set, const Backend& backend);

// Uniform-random subset of `n` elements of `words`, order preserved.
template <typename T>
std::vector<T> random_subset(const std::vector<T>& words, std::size_t n, std::uint64_t seed) {
  if (n >= words.size()) return words;
  std::vector<std::size_t> idx(words.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  stats::Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  std::vector<T> out;
  out.reserve(n);
  for (auto i : idx) out.push_back(words[i]);
  return out;
}

// Equalizes sizes by dropping random words from the larger set.
std::pair<TargetSet, TargetSet> balance_sets(const TargetSet& x, const TargetSet& y,
                                             std::uint64_t seed);
std::pair<AttributeSet, AttributeSet> balance_sets(const AttributeSet& a, const AttributeSet& b,
                                                   std::uint64_t seed);

}  // namespace lpbias
