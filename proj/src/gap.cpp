#include "lpbias/gap.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

namespace {

const char* const kColumns[] = {"ID",       "Text", "Pronoun",  "Pronoun-offset", "A",
                                "A-offset", "A-coref", "B", "B-offset", "B-coref"};

bool parse_bool(std::string_view s, bool& out) {
  auto l = text::lowercase(text::trim(s));
  if (l == "true" || l == "1") {
    out = true;
    return true;
  }
  if (l == "false" || l == "0") {
    out = false;
    return true;
  }
  return false;
}

bool parse_offset(std::string_view s, std::size_t& out) {
  auto t = text::trim(s);
  if (t.empty() || t.find_first_not_of("0123456789") != std::string_view::npos) return false;
  out = std::stoul(std::string(t));
  return true;
}

bool is_ascii(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::male ? "male" : "female"; }

std::string_view to_string(GprLabel l) {
  switch (l) {
    case GprLabel::a: return "A";
    case GprLabel::b: return "B";
    case GprLabel::neither: return "NEITHER";
  }
  return "?";
}

Gender pronoun_gender(std::string_view surface) {
  auto s = text::lowercase(text::trim(surface));
  if (s == "he" || s == "him" || s == "his" || s == "himself") return Gender::male;
  if (s == "she" || s == "her" || s == "hers" || s == "herself") return Gender::female;
  throw ValidationError("not a gendered pronoun: '" + s + "'");
}

GapCounts count_labels(const std::vector<GapInstance>& instances) {
  GapCounts c;
  for (const auto& i : instances) {
    bool neither = i.label() == GprLabel::neither;
    if (i.gender == Gender::male) {
      ++c.male;
      c.male_neither += neither;
    } else {
      ++c.female;
      c.female_neither += neither;
    }
  }
  return c;
}

GapDataset parse_gap(const std::string& tsv, const std::string& source) {
  GapDataset out;
  std::istringstream in(tsv);
  std::string line;
  std::size_t row = 0;
  std::map<std::string, std::size_t> col;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (text::trim(line).empty()) continue;
      auto names = text::split(line, '\t');
      for (std::size_t i = 0; i < names.size(); ++i) col[std::string(text::trim(names[i]))] = i;
      for (const char* name : kColumns)
        if (!col.count(name)) throw SchemaError(source + ": GAP header lacks column '" + name + "'");
      header_seen = true;
      continue;
    }
    if (text::trim(line).empty()) continue;
    auto f = text::split(line, '\t');
    auto field = [&](const char* name) -> const std::string& { return f[col.at(name)]; };
    auto skip = [&](std::string msg) { out.skipped.push_back({row, std::move(msg)}); };
    std::size_t needed = 0;
    for (const char* name : kColumns) needed = std::max(needed, col.at(name) + 1);
    if (f.size() < needed) {
      skip("expected at least " + std::to_string(needed) + " fields, found " + std::to_string(f.size()));
      continue;
    }

    GapInstance inst;
    inst.id = field("ID");
    inst.text = field("Text");
    bool ok = true;
    auto mention = [&](const char* surface, const char* offset, const char* coref, Mention& m) {
      m.surface = field(surface);
      if (!parse_offset(field(offset), m.offset)) {
        skip(std::string("bad ") + offset + " '" + field(offset) + "'");
        return false;
      }
      if (coref && !parse_bool(field(coref), m.coreferent)) {
        skip(std::string("bad ") + coref + " '" + field(coref) + "'");
        return false;
      }
      m.byte_offset = text::utf8_byte_offset(inst.text, m.offset);
      if (m.byte_offset == std::string::npos ||
          inst.text.compare(m.byte_offset, m.surface.size(), m.surface) != 0) {
        skip(std::string(surface) + " '" + m.surface + "' not found at offset " +
             std::to_string(m.offset));
        return false;
      }
      return true;
    };
    ok = mention("Pronoun", "Pronoun-offset", nullptr, inst.pronoun) &&
         mention("A", "A-offset", "A-coref", inst.a) && mention("B", "B-offset", "B-coref", inst.b);
    if (!ok) continue;
    if (inst.a.coreferent && inst.b.coreferent) {
      skip("both A and B marked coreferent");
      continue;
    }
    try {
      inst.gender = pronoun_gender(inst.pronoun.surface);
    } catch (const ValidationError& e) {
      skip(e.what());
      continue;
    }
    out.instances.push_back(std::move(inst));
  }
  out.counts = count_labels(out.instances);
  return out;
}

GapDataset load_gap(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open GAP file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_gap(ss.str(), path);
}

std::vector<std::size_t> align_span(const std::vector<TokenSpan>& tokens, std::string_view text,
                                    std::size_t begin, std::size_t end, const std::string& what) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < tokens.size(); ++i)
    if (tokens[i].begin < end && tokens[i].end > begin) idx.push_back(i);
  if (idx.empty()) throw AlignmentError(what + ": no tokens cover the span");
  if (tokens[idx.front()].begin != begin || tokens[idx.back()].end != end)
    throw AlignmentError(what + ": span boundaries fall inside a token");
  auto lowered = text::lowercase(text);
  for (auto i : idx) {
    const auto& t = tokens[i];
    std::string_view piece = t.token;
    if (piece.rfind("##", 0) == 0) piece.remove_prefix(2);
    auto slice = std::string_view(lowered).substr(t.begin, t.end - t.begin);
    // Specials such as [UNK] and accent-stripped pieces carry no comparable text.
    if (t.token == "[UNK]" || !is_ascii(slice)) continue;
    if (piece != slice)
      throw AlignmentError(what + ": token '" + t.token + "' does not match text '" +
                           std::string(slice) + "'");
  }
  return idx;
}

std::vector<double> extract_span_features(const Backend& backend, const GapInstance& instance) {
  auto tokens = backend.tokenize_with_offsets(instance.text);
  std::vector<std::string> words;
  words.reserve(tokens.size());
  for (const auto& t : tokens) words.push_back(t.token);
  auto query = MaskedQuery::make(std::move(words), {}, "gap:" + instance.id, backend.mask_token());

  const Mention* spans[] = {&instance.pronoun, &instance.a, &instance.b};
  const char* names[] = {"pronoun", "A", "B"};
  std::vector<std::vector<std::size_t>> groups;
  std::vector<std::size_t> positions;
  for (int s = 0; s < 3; ++s) {
    const auto& m = *spans[s];
    groups.push_back(align_span(tokens, instance.text, m.byte_offset, m.byte_offset + m.surface.size(),
                                instance.id + " " + names[s] + " '" + m.surface + "'"));
    positions.insert(positions.end(), groups.back().begin(), groups.back().end());
  }
  auto vectors = backend.contextual_embeddings(query, positions);
  const auto dim = vectors.front().values.size();
  std::vector<double> features(3 * dim, 0.0);
  std::size_t cursor = 0;
  for (std::size_t s = 0; s < 3; ++s) {
    for (std::size_t k = 0; k < groups[s].size(); ++k, ++cursor) {
      if (vectors[cursor].values.size() != dim) throw ValidationError("embedding dimension changed");
      for (std::size_t d = 0; d < dim; ++d) features[s * dim + d] += vectors[cursor].values[d];
    }
    for (std::size_t d = 0; d < dim; ++d) features[s * dim + d] /= static_cast<double>(groups[s].size());
  }
  return features;
}

}  // namespace lpbias
