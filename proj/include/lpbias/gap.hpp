#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lpbias/backend.hpp"

namespace lpbias {

enum class Gender { male, female };
enum class GprLabel { a = 0, b = 1, neither = 2 };

std::string_view to_string(Gender g);
std::string_view to_string(GprLabel l);

struct Mention {
  std::string surface;
  std::size_t offset = 0;       // code point offset, as published
  std::size_t byte_offset = 0;  // into the UTF-8 text
  bool coreferent = false;
};

struct GapInstance {
  std::string id;
  std::string text;
  Mention pronoun;
  Mention a;
  Mention b;
  Gender gender = Gender::male;

  GprLabel label() const {
    return a.coreferent ? GprLabel::a : (b.coreferent ? GprLabel::b : GprLabel::neither);
  }
};

struct GapDiagnostic {
  std::size_t row = 0;  // 1-based line number in the file
  std::string message;
};

struct GapCounts {
  std::size_t male = 0;
  std::size_t female = 0;
  std::size_t male_neither = 0;
  std::size_t female_neither = 0;
};

struct GapDataset {
  std::vector<GapInstance> instances;
  std::vector<GapDiagnostic> skipped;
  GapCounts counts;
};

// Gender of a third-person pronoun surface form; throws ValidationError for
// anything else.
Gender pronoun_gender(std::string_view surface);

// Parses the published GAP TSV layout (ID, Text, Pronoun, Pronoun-offset, A,
// A-offset, A-coref, B, B-offset, B-coref, URL). Malformed rows are skipped
// and reported; a missing column is a SchemaError.
GapDataset parse_gap(const std::string& tsv, const std::string& source = "<memory>");
GapDataset load_gap(const std::string& path);

GapCounts count_labels(const std::vector<GapInstance>& instances);

// Indices of the tokens covering [begin, end). Throws AlignmentError when the
// span does not start and end on token boundaries or the covered text does
// not match the tokens.
std::vector<std::size_t> align_span(const std::vector<TokenSpan>& tokens, std::string_view text,
                                    std::size_t begin, std::size_t end, const std::string& what);

// [mean(P tokens), mean(A tokens), mean(B tokens)] from final-layer vectors
// of the unmasked text; length 3 x embedding dimension.
std::vector<double> extract_span_features(const Backend& backend, const GapInstance& instance);

}  // namespace lpbias
