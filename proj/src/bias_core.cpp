#include "lpbias/bias_core.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "lpbias/error.hpp"
#include "lpbias/parallel.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

namespace {

double positive_probability(double p, const std::string& what, const MaskedQuery& q) {
  if (!(p > 0.0) || p > 1.0)
    throw ValidationError(what + " probability " + std::to_string(p) + " not in (0,1] for '" +
                          q.text() + "'");
  return p;
}

AssociationRecord record_from(const Backend& backend, const Template& t, const TargetWord& target,
                              const std::string& attribute, const MaskedQuery& prior_query) {
  auto token = text::lowercase(target.token);
  auto tgt_query = render(backend, t, Fill::mask(target.number),
                          Fill::with(attribute, Number::any));
  AssociationRecord r;
  r.template_id = t.id;
  r.target = token;
  r.attribute = text::lowercase(attribute);
  r.p_tgt = positive_probability(backend.token_probability(tgt_query, SlotRole::target, token),
                                 "target", tgt_query);
  r.p_prior = positive_probability(
      backend.token_probability(prior_query, SlotRole::target, token), "prior", prior_query);
  r.score = std::log(r.p_tgt) - std::log(r.p_prior);
  return r;
}

std::vector<double> item_values(const std::vector<ItemScore>& items, const std::string& group) {
  std::vector<double> out;
  for (const auto& i : items)
    if (i.group == group) out.push_back(i.value);
  return out;
}

}  // namespace

AssociationRecord increased_log_probability(const Backend& backend, const Template& t,
                                            const TargetWord& target,
                                            const std::string& attribute) {
  require_single_token(backend, target.token);
  auto prior_query = render(backend, t, Fill::mask(target.number), Fill::mask());
  return record_from(backend, t, target, attribute, prior_query);
}

BiasScoreDetail log_prob_bias_detail(const Backend& backend, const Template& t,
                                     const TargetWord& first, const TargetWord& second,
                                     const std::string& attribute) {
  if (!agrees(t.number, first.number) || !agrees(t.number, second.number))
    throw AgreementError("targets '" + first.token + "'/'" + second.token +
                         "' do not agree with template '" + t.text + "'");
  require_single_token(backend, first.token);
  require_single_token(backend, second.token);
  // Both priors come from the same both-masked sentence.
  auto prior_query = render(backend, t, Fill::mask(first.number), Fill::mask());
  BiasScoreDetail d;
  d.first = record_from(backend, t, first, attribute, prior_query);
  d.second = record_from(backend, t, second, attribute, prior_query);
  d.score = d.first.score - d.second.score;
  return d;
}

double log_prob_bias_score(const Backend& backend, const Template& t, const TargetWord& first,
                           const TargetWord& second, const std::string& attribute) {
  return log_prob_bias_detail(backend, t, first, second, attribute).score;
}

std::vector<TargetPair> pair_targets(const TargetSet& x, const TargetSet& y) {
  std::vector<TargetPair> out;
  for (auto number : {Number::singular, Number::plural, Number::any}) {
    std::vector<const TargetWord*> xs, ys;
    for (const auto& w : x.words)
      if (w.number == number) xs.push_back(&w);
    for (const auto& w : y.words)
      if (w.number == number) ys.push_back(&w);
    for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) out.push_back({*xs[i], *ys[i]});
  }
  return out;
}

AttributeMeasurement measure_attribute(const Backend& backend, const std::vector<Template>& templates,
                                       const std::vector<TargetPair>& pairs,
                                       const std::string& attribute) {
  // Keyed so the reduction order is independent of template/pair order.
  std::map<std::tuple<std::string, std::string, std::string>, BiasScoreDetail> scored;
  for (const auto& t : templates) {
    for (const auto& pair : pairs) {
      if (!agrees(t.number, pair.x.number) || !agrees(t.number, pair.y.number)) continue;
      scored.emplace(std::make_tuple(t.id, pair.x.token, pair.y.token),
                     log_prob_bias_detail(backend, t, pair.x, pair.y, attribute));
    }
  }
  if (scored.empty())
    throw EmptyMeasurementError("no agreement-valid (template, target pair) for attribute '" +
                                attribute + "'");
  AttributeMeasurement m;
  m.attribute = attribute;
  m.combinations = scored.size();
  double total = 0.0;
  for (auto& [key, d] : scored) {
    total += d.score;
    m.records.push_back(std::move(d.first));
    m.records.push_back(std::move(d.second));
  }
  m.mean_bias = total / static_cast<double>(m.combinations);
  return m;
}

double attribute_mean_bias(const Backend& backend, const WeatCategory& category,
                           const std::string& attribute) {
  auto in = [&](const AttributeSet& s) {
    return std::find(s.words.begin(), s.words.end(), attribute) != s.words.end();
  };
  if (!in(category.a) && !in(category.b))
    throw ValidationError("attribute '" + attribute + "' is not in category " + category.name);
  return measure_attribute(backend, category.templates, pair_targets(category.x, category.y),
                           attribute)
      .mean_bias;
}

double effect_size(std::span<const double> a, std::span<const double> b) {
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  double sd = stats::population_sd(pooled);
  if (sd == 0.0) return 0.0;
  return stats::mean_difference(a, b) / sd;
}

BiasTestResult run_category_test(const Backend& backend, const WeatCategory& category,
                                 const stats::PermutationConfig& config, std::size_t jobs) {
  stats::validate(config);
  BiasTestResult result;
  result.kind = "log-prob";
  result.category = category.name;
  result.seed = config.seed;

  auto x = filter_oov(category.x, backend);
  auto y = filter_oov(category.y, backend);
  auto pairs = pair_targets(x, y);
  if (pairs.empty()) throw ValidationError(category.name + ": no target pairs survive filtering");

  AttributeSet a{category.a.label, filter_oov(category.a.words, backend)};
  AttributeSet b{category.b.label, filter_oov(category.b.words, backend)};
  auto dropped = [&](const std::vector<std::string>& before, const std::vector<std::string>& after) {
    std::vector<std::string> out;
    for (const auto& w : before)
      if (std::find(after.begin(), after.end(), w) == after.end()) out.push_back(w);
    return out;
  };
  nlohmann::json coverage;
  coverage["dropped_oov_A"] = dropped(category.a.words, a.words);
  coverage["dropped_oov_B"] = dropped(category.b.words, b.words);
  std::vector<std::string> dropped_targets;
  for (const auto& w : category.x.words)
    if (std::find(x.words.begin(), x.words.end(), w) == x.words.end()) dropped_targets.push_back(w.token);
  for (const auto& w : category.y.words)
    if (std::find(y.words.begin(), y.words.end(), w) == y.words.end()) dropped_targets.push_back(w.token);
  coverage["dropped_oov_targets"] = dropped_targets;
  if (a.words.empty() || b.words.empty())
    throw ValidationError(category.name + ": an attribute set is empty after vocabulary filtering");

  if (a.words.size() != b.words.size()) {
    auto [ba, bb] = balance_sets(a, b, config.seed);
    coverage["rebalanced"] = true;
    coverage["dropped_balance"] = dropped(a.words.size() > b.words.size() ? a.words : b.words,
                                          a.words.size() > b.words.size() ? ba.words : bb.words);
    a = std::move(ba);
    b = std::move(bb);
  } else {
    coverage["rebalanced"] = false;
  }

  std::vector<std::pair<std::string, std::string>> work;
  for (const auto& w : a.words) work.emplace_back(w, "A");
  for (const auto& w : b.words) work.emplace_back(w, "B");
  std::vector<AttributeMeasurement> measured(work.size());
  parallel_for(work.size(), backend.thread_safe() ? jobs : 1, [&](std::size_t i) {
    measured[i] = measure_attribute(backend, category.templates, pairs, work[i].first);
  });

  nlohmann::json combos = nlohmann::json::object();
  for (std::size_t i = 0; i < work.size(); ++i) {
    result.items.push_back({work[i].first, work[i].second, measured[i].mean_bias});
    combos[work[i].first] = measured[i].combinations;
    for (auto& r : measured[i].records) result.records.push_back(std::move(r));
  }

  auto av = item_values(result.items, "A");
  auto bv = item_values(result.items, "B");
  result.statistic = stats::mean_difference(av, bv);
  result.effect_size = effect_size(av, bv);
  auto perm = stats::permutation_pvalue(av, bv, stats::mean_difference, config);
  result.p_value = perm.p_value;
  result.exact = perm.exact;
  result.n_permutations_used = perm.n_used;

  nlohmann::json pair_json = nlohmann::json::array();
  for (const auto& p : pairs) pair_json.push_back({p.x.token, p.y.token});
  result.metadata["coverage"] = coverage;
  result.metadata["target_pairs"] = pair_json;
  result.metadata["combinations_per_attribute"] = combos;
  result.metadata["log_base"] = "e";
  result.metadata["sd"] = "population";
  result.metadata["permutation"] = {{"exact_threshold", config.exact_threshold},
                                    {"monte_carlo_samples", config.monte_carlo_samples},
                                    {"inequality", "strict"}};
  return result;
}

}  // namespace lpbias
