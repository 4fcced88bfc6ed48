#include "lpbias/weat.hpp"

#include <algorithm>
#include <cmath>

#include "lpbias/error.hpp"
#include "lpbias/parallel.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

namespace {

double norm(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> association_values(const EmbeddedWordSet& targets, const EmbeddedWordSet& a,
                                       const EmbeddedWordSet& b) {
  std::vector<double> out;
  for (const auto& [w, v] : targets.entries()) out.push_back(weat_association(v, a, b));
  return out;
}

std::vector<std::string> words_of(const TargetSet& s) {
  std::vector<std::string> out;
  for (const auto& w : s.words) out.push_back(w.token);
  return out;
}

}  // namespace

EmbeddedWordSet::EmbeddedWordSet(std::string label,
                                 std::vector<std::pair<std::string, EmbeddingVector>> entries)
    : label_(std::move(label)), entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("embedded word set '" + label_ + "' is empty");
  const auto dim = entries_.front().second.values.size();
  for (const auto& [w, v] : entries_) {
    if (v.values.size() != dim)
      throw ValidationError("embedded word set '" + label_ + "' mixes dimensions");
    for (double x : v.values)
      if (!std::isfinite(x)) throw ValidationError("non-finite embedding for '" + w + "'");
    if (norm(v.values) < 1e-12) throw UndefinedCosineError("zero vector for '" + w + "'");
  }
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.values.size() != b.values.size()) throw ValidationError("cosine of vectors of unequal length");
  double na = norm(a.values), nb = norm(b.values);
  if (na < 1e-12 || nb < 1e-12) throw UndefinedCosineError("cosine with a zero vector");
  double dot = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) dot += a.values[i] * b.values[i];
  return dot / (na * nb);
}

double weat_association(const EmbeddingVector& t, const EmbeddedWordSet& a, const EmbeddedWordSet& b) {
  auto mean_cos = [&](const EmbeddedWordSet& s) {
    double total = 0.0;
    for (const auto& [w, v] : s.entries()) total += cosine(t, v);
    return total / static_cast<double>(s.size());
  };
  return mean_cos(a) - mean_cos(b);
}

BiasTestResult weat_test(const EmbeddedWordSet& x, const EmbeddedWordSet& y,
                         const EmbeddedWordSet& a, const EmbeddedWordSet& b,
                         const stats::PermutationConfig& config) {
  if (x.size() != y.size())
    throw ValidationError("WEAT needs |X| = |Y|, got " + std::to_string(x.size()) + " and " +
                          std::to_string(y.size()));
  BiasTestResult r;
  r.kind = "weat";
  r.seed = config.seed;
  auto sx = association_values(x, a, b);
  auto sy = association_values(y, a, b);
  for (std::size_t i = 0; i < sx.size(); ++i) r.items.push_back({x.entries()[i].first, "X", sx[i]});
  for (std::size_t i = 0; i < sy.size(); ++i) r.items.push_back({y.entries()[i].first, "Y", sy[i]});
  r.statistic = stats::mean_difference(sx, sy);
  r.effect_size = effect_size(sx, sy);
  auto perm = stats::permutation_pvalue(sx, sy, stats::mean_difference, config);
  r.p_value = perm.p_value;
  r.exact = perm.exact;
  r.n_permutations_used = perm.n_used;
  r.metadata["sd"] = "population";
  r.metadata["sizes"] = {{"X", x.size()}, {"Y", y.size()}, {"A", a.size()}, {"B", b.size()}};
  return r;
}

EmbeddingVector extract_masked_embedding(const Backend& backend, const Template& t, SlotRole role,
                                         const std::string& word, Number number) {
  MaskedQuery q = role == SlotRole::target
                      ? render(backend, t, Fill::with(word, number), Fill::mask())
                      : render(backend, t, Fill::mask(), Fill::with(word));
  // Rendering with both roles masked gives the placeholder's token position;
  // substituting a single-token word does not shift it.
  auto position = render(backend, t, Fill::mask(number), Fill::mask()).slot_position(role);
  auto lw = text::lowercase(word);
  if (position >= q.tokens().size() || q.tokens()[position] != lw)
    throw AlignmentError("could not locate '" + lw + "' in rendered template '" + t.text + "'");
  auto v = backend.contextual_embedding(q, position);
  if (backend.descriptor().embedding_dimension &&
      v.values.size() != backend.descriptor().embedding_dimension)
    throw ValidationError("embedding length differs from the backend dimension");
  return v;
}

WeatInputs build_static_inputs(const WeatCategory& category, const Backend& vectors,
                               const Backend* vocabulary_filter, std::uint64_t seed) {
  auto keep = [&](const std::string& w) {
    return is_single_token(vectors, w) && (!vocabulary_filter || is_single_token(*vocabulary_filter, w));
  };
  nlohmann::json meta;
  std::vector<std::string> dropped;
  auto filter_targets = [&](const TargetSet& s) {
    TargetSet out{s.label, {}};
    for (const auto& w : s.words) (keep(w.token) ? out.words.push_back(w) : dropped.push_back(w.token));
    return out;
  };
  auto filter_attrs = [&](const AttributeSet& s) {
    AttributeSet out{s.label, {}};
    for (const auto& w : s.words) (keep(w) ? out.words.push_back(w) : dropped.push_back(w));
    return out;
  };
  auto fx = filter_targets(category.weat_x());
  auto fy = filter_targets(category.weat_y());
  auto fa = filter_attrs(category.a);
  auto fb = filter_attrs(category.b);
  if (fx.words.empty() || fy.words.empty())
    throw ValidationError(category.name + ": a target set is empty after vocabulary filtering");
  auto [bx, by] = balance_sets(fx, fy, seed);
  meta["dropped_oov"] = dropped;
  meta["balanced_size"] = bx.words.size();

  auto embed = [&](const std::string& label, const std::vector<std::string>& words) {
    std::vector<std::pair<std::string, EmbeddingVector>> entries;
    for (const auto& w : words) entries.emplace_back(w, vectors.static_vector(text::lowercase(w)));
    return EmbeddedWordSet(label, std::move(entries));
  };
  return {embed(bx.label, words_of(bx)), embed(by.label, words_of(by)), embed(fa.label, fa.words),
          embed(fb.label, fb.words), meta};
}

WeatInputs build_contextual_inputs(const WeatCategory& category, const Backend& backend,
                                   std::uint64_t seed, std::size_t jobs) {
  const auto& templates = category.weat_templates();
  auto fx = filter_oov(category.weat_x(), backend);
  auto fy = filter_oov(category.weat_y(), backend);
  AttributeSet fa{category.a.label, filter_oov(category.a.words, backend)};
  AttributeSet fb{category.b.label, filter_oov(category.b.words, backend)};
  if (fx.words.empty() || fy.words.empty() || fa.words.empty() || fb.words.empty())
    throw ValidationError(category.name + ": a word set is empty after vocabulary filtering");
  auto [bx, by] = balance_sets(fx, fy, seed);

  struct Job {
    std::string word;
    Number number;
    SlotRole role;
  };
  std::vector<Job> jobs_list;
  for (const auto& w : bx.words) jobs_list.push_back({w.token, w.number, SlotRole::target});
  for (const auto& w : by.words) jobs_list.push_back({w.token, w.number, SlotRole::target});
  for (const auto& w : fa.words) jobs_list.push_back({w, Number::any, SlotRole::attribute});
  for (const auto& w : fb.words) jobs_list.push_back({w, Number::any, SlotRole::attribute});

  std::vector<EmbeddingVector> averaged(jobs_list.size());
  std::vector<std::size_t> used(jobs_list.size());
  parallel_for(jobs_list.size(), backend.thread_safe() ? jobs : 1, [&](std::size_t i) {
    const auto& job = jobs_list[i];
    std::vector<double> sum;
    std::size_t n = 0;
    for (const auto& t : templates) {
      if (job.role == SlotRole::target && !agrees(t.number, job.number)) continue;
      if (job.role == SlotRole::attribute && !t.has_attribute()) continue;
      auto v = extract_masked_embedding(backend, t, job.role, job.word, job.number);
      if (sum.empty()) sum.assign(v.values.size(), 0.0);
      for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += v.values[k];
      ++n;
    }
    if (n == 0)
      throw EmptyMeasurementError("no agreement-valid template to embed '" + job.word + "'");
    for (double& x : sum) x /= static_cast<double>(n);
    averaged[i] = {std::move(sum), 0};
    used[i] = n;
  });

  std::size_t cursor = 0;
  auto take = [&](const std::string& label, std::size_t count) {
    std::vector<std::pair<std::string, EmbeddingVector>> entries;
    for (std::size_t i = 0; i < count; ++i, ++cursor)
      entries.emplace_back(jobs_list[cursor].word, averaged[cursor]);
    return EmbeddedWordSet(label, std::move(entries));
  };
  auto ex = take(bx.label, bx.words.size());
  auto ey = take(by.label, by.words.size());
  auto ea = take(fa.label, fa.words.size());
  auto eb = take(fb.label, fb.words.size());
  nlohmann::json meta;
  meta["aggregation"] = "mean over templates";
  meta["balanced_size"] = bx.words.size();
  meta["templates_per_word"] = used;
  return {std::move(ex), std::move(ey), std::move(ea), std::move(eb), meta};
}

}  // namespace lpbias
