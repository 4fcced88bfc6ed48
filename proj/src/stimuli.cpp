#include "lpbias/stimuli.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

using nlohmann::json;

namespace {

constexpr std::string_view kTarget = "[TARGET]";
constexpr std::string_view kAttribute = "[ATTRIBUTE]";

std::size_t count_occurrences(std::string_view s, std::string_view needle) {
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + 1)) ++n;
  return n;
}

TargetSet parse_target_set(const json& j, const std::string& source, const std::string& which) {
  TargetSet set;
  set.label = j.value("label", which);
  if (!j.contains("words") || !j["words"].is_array())
    throw SchemaError(source + ": target set " + which + " needs a 'words' array");
  for (const auto& w : j["words"]) {
    if (w.is_string()) {
      set.words.push_back({w.get<std::string>(), Number::any});
    } else {
      set.words.push_back({w.at("token").get<std::string>(),
                           parse_number(w.value("number", std::string("any")))});
    }
  }
  if (set.words.empty()) throw ValidationError(source + ": target set " + which + " is empty");
  std::set<std::string> seen;
  for (const auto& w : set.words)
    if (!seen.insert(w.token).second)
      throw ValidationError(source + ": duplicate target '" + w.token + "' in " + which);
  return set;
}

AttributeSet parse_attribute_set(const json& j, const std::string& source, const std::string& which) {
  AttributeSet set;
  set.label = j.value("label", which);
  if (!j.contains("words") || !j["words"].is_array())
    throw SchemaError(source + ": attribute set " + which + " needs a 'words' array");
  set.words = j["words"].get<std::vector<std::string>>();
  if (set.words.empty()) throw ValidationError(source + ": attribute set " + which + " is empty");
  std::set<std::string> seen;
  for (const auto& w : set.words)
    if (!seen.insert(w).second)
      throw ValidationError(source + ": duplicate attribute '" + w + "' in " + which);
  return set;
}

// Template ids default to the template text so that keyed reductions do not
// depend on the position of a template in the file.
std::vector<Template> parse_templates(const json& j, const std::string& source) {
  std::vector<Template> out;
  if (!j.is_array()) throw SchemaError(source + ": templates must be an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    Template t;
    t.text = j[i].at("text").get<std::string>();
    t.number = parse_number(j[i].value("number", std::string("any")));
    t.id = j[i].value("id", t.text);
    validate_template(t);
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

std::string_view to_string(Number n) {
  switch (n) {
    case Number::singular: return "singular";
    case Number::plural: return "plural";
    case Number::any: return "any";
  }
  return "any";
}

Number parse_number(std::string_view s) {
  if (s == "singular" || s == "sg") return Number::singular;
  if (s == "plural" || s == "pl") return Number::plural;
  if (s == "any" || s.empty()) return Number::any;
  throw SchemaError("unknown grammatical number '" + std::string(s) + "'");
}

bool agrees(Number a, Number b) { return a == Number::any || b == Number::any || a == b; }

bool Template::has_attribute() const { return text.find(kAttribute) != std::string::npos; }

void validate_template(const Template& t) {
  if (count_occurrences(t.text, kTarget) != 1)
    throw ValidationError("template '" + t.text + "' must contain exactly one [TARGET]");
  if (count_occurrences(t.text, kAttribute) > 1)
    throw ValidationError("template '" + t.text + "' contains more than one [ATTRIBUTE]");
}

WeatCategory parse_category(const std::string& json_text, const std::string& source) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(source, text::line_of_offset(json_text, e.byte), e.what());
  }
  try {
    WeatCategory c;
    c.name = j.at("name").get<std::string>();
    c.templates = parse_templates(j.at("templates"), source);
    if (c.templates.empty()) throw ValidationError(source + ": no templates");
    c.x = parse_target_set(j.at("targets").at("X"), source, "X");
    c.y = parse_target_set(j.at("targets").at("Y"), source, "Y");
    c.a = parse_attribute_set(j.at("attributes").at("A"), source, "A");
    c.b = parse_attribute_set(j.at("attributes").at("B"), source, "B");
    if (j.contains("weat")) {
      const auto& w = j["weat"];
      if (w.contains("templates")) c.baseline_templates = parse_templates(w["templates"], source);
      if (w.contains("targets")) {
        c.baseline_x = parse_target_set(w["targets"].at("X"), source, "weat.X");
        c.baseline_y = parse_target_set(w["targets"].at("Y"), source, "weat.Y");
      }
    }
    return c;
  } catch (const json::exception& e) {
    throw SchemaError(source + ": " + e.what());
  }
}

WeatCategory load_category(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open category file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_category(ss.str(), path);
}

bool is_single_token(const Backend& backend, std::string_view word) {
  return backend.in_vocabulary(text::lowercase(word));
}

void require_single_token(const Backend& backend, std::string_view word) {
  auto lw = text::lowercase(word);
  if (backend.in_vocabulary(lw)) return;
  auto pieces = backend.tokenize(lw);
  if (pieces.size() > 1) throw MultiTokenError(lw, std::move(pieces));
  throw OovError(lw);
}

MaskedQuery render(const Backend& backend, const Template& t, const Fill& target,
                   const Fill& attribute) {
  validate_template(t);
  if (!agrees(t.number, target.number))
    throw AgreementError("template '" + t.text + "' is " + std::string(to_string(t.number)) +
                         " but target is " + std::string(to_string(target.number)));

  std::vector<std::string> tokens;
  std::vector<MaskSlot> slots;
  auto emit_fill = [&](const Fill& fill, SlotRole role) {
    if (fill.masked()) {
      slots.push_back({tokens.size(), role});
      tokens.emplace_back(backend.mask_token());
      return;
    }
    require_single_token(backend, *fill.word);
    tokens.push_back(text::lowercase(*fill.word));
  };

  std::string_view rest = t.text;
  while (!rest.empty()) {
    auto pt = rest.find(kTarget);
    auto pa = rest.find(kAttribute);
    auto next = std::min(pt, pa);
    auto literal = rest.substr(0, next == std::string_view::npos ? rest.size() : next);
    if (!text::trim(literal).empty())
      for (auto& tok : backend.tokenize(literal)) tokens.push_back(std::move(tok));
    if (next == std::string_view::npos) break;
    if (next == pt) {
      emit_fill(target, SlotRole::target);
      rest = rest.substr(pt + kTarget.size());
    } else {
      emit_fill(attribute, SlotRole::attribute);
      rest = rest.substr(pa + kAttribute.size());
    }
  }
  return MaskedQuery::make(std::move(tokens), std::move(slots), t.id, backend.mask_token());
}

std::vector<std::string> filter_oov(std::span<const std::string> words, const Backend& backend) {
  std::vector<std::string> out;
  for (const auto& w : words)
    if (is_single_token(backend, w)) out.push_back(w);
  return out;
}

TargetSet filter_oov(const TargetSet& set, const Backend& backend) {
  TargetSet out{set.label, {}};
  for (const auto& w : set.words)
    if (is_single_token(backend, w.token)) out.words.push_back(w);
  return out;
}

std::pair<TargetSet, TargetSet> balance_sets(const TargetSet& x, const TargetSet& y,
                                             std::uint64_t seed) {
  auto n = std::min(x.words.size(), y.words.size());
  return {TargetSet{x.label, random_subset(x.words, n, seed)},
          TargetSet{y.label, random_subset(y.words, n, seed)}};
}

std::pair<AttributeSet, AttributeSet> balance_sets(const AttributeSet& a, const AttributeSet& b,
                                                   std::uint64_t seed) {
  auto n = std::min(a.words.size(), b.words.size());
  return {AttributeSet{a.label, random_subset(a.words, n, seed)},
          AttributeSet{b.label, random_subset(b.words, n, seed)}};
}

}  // namespace lpbias
