#include "lpbias/audit.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "lpbias/bias_core.hpp"
#include "lpbias/error.hpp"
#include "lpbias/parallel.hpp"
#include "lpbias/text.hpp"
#include "lpbias/topics.hpp"

namespace lpbias {

// ---------------------------------------------------------------------------

NeitherGapReport neither_gap_analysis(std::span<const double> neither_probability,
                                      std::span<const Gender> genders,
                                      std::span<const bool> gold_neither,
                                      const stats::PermutationConfig& config) {
  if (neither_probability.size() != genders.size() || gold_neither.size() != genders.size())
    throw ValidationError("neither-gap inputs differ in length");
  std::vector<double> female, male;
  std::size_t gold_f = 0, gold_m = 0;
  for (std::size_t i = 0; i < genders.size(); ++i) {
    if (genders[i] == Gender::female) {
      female.push_back(neither_probability[i]);
      gold_f += gold_neither[i];
    } else {
      male.push_back(neither_probability[i]);
      gold_m += gold_neither[i];
    }
  }
  if (female.empty() || male.empty())
    throw ValidationError("neither-gap analysis needs both male and female pronouns");
  NeitherGapReport r;
  r.n_male = male.size();
  r.n_female = female.size();
  r.prior_male = static_cast<double>(gold_m) / static_cast<double>(male.size());
  r.prior_female = static_cast<double>(gold_f) / static_cast<double>(female.size());
  r.mean_male = stats::mean(male);
  r.mean_female = stats::mean(female);
  auto perm = stats::permutation_pvalue(female, male, stats::mean_difference, config);
  r.statistic = perm.observed;
  r.p_value = perm.p_value;
  r.exact = perm.exact;
  r.n_permutations_used = perm.n_used;
  return r;
}

NeitherGapReport neither_gap_analysis(const ProbabilisticClassifier& classifier,
                                      std::span<const GprExample> examples,
                                      const stats::PermutationConfig& config) {
  std::vector<double> probs;
  std::vector<Gender> genders;
  std::vector<bool> gold;
  for (const auto& e : examples) {
    probs.push_back(classifier.predict(e.features)[2]);
    genders.push_back(e.instance.gender);
    gold.push_back(e.instance.label() == GprLabel::neither);
  }
  std::unique_ptr<bool[]> gold_flags(new bool[gold.size()]);
  for (std::size_t i = 0; i < gold.size(); ++i) gold_flags[i] = gold[i];
  return neither_gap_analysis(probs, genders, std::span<const bool>(gold_flags.get(), gold.size()),
                              config);
}

// ---------------------------------------------------------------------------

std::vector<TopicBias> topic_bias_scores(const Backend& backend, const stats::TopicModel& model,
                                         const TopicBiasOptions& options) {
  stats::validate(model);
  std::vector<TopicBias> out(model.k());
  parallel_for(model.k(), backend.thread_safe() ? options.jobs : 1, [&](std::size_t k) {
    auto& topic = out[k];
    for (auto idx : stats::top_term_indices(model, k, options.top_n)) {
      const auto& term = model.vocabulary[idx];
      if (!is_single_token(backend, term)) {
        topic.dropped.push_back(term);
        continue;
      }
      double score =
          log_prob_bias_score(backend, options.probe, options.male, options.female, term);
      topic.terms.emplace_back(term, score);
      topic.bias += model.h(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(idx)) * score;
    }
  });
  return out;
}

double sample_bias(std::span<const double> weights, std::span<const TopicBias> topics) {
  if (weights.size() != topics.size()) throw ValidationError("topic weight row has wrong length");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) total += weights[k] * topics[k].bias;
  return total;
}

TopicBiasReport topic_bias_correlation(const Backend& backend, std::span<const GapInstance> instances,
                                       const stats::TopicModel& model,
                                       std::span<const double> neither_probability,
                                       const TopicBiasOptions& options) {
  if (static_cast<std::size_t>(model.w.rows()) != instances.size())
    throw ValidationError("topic model rows do not match the instances");
  if (neither_probability.size() != instances.size())
    throw ValidationError("one NEITHER probability per instance is required");
  TopicBiasReport report;
  report.topics = topic_bias_scores(backend, model, options);

  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    std::vector<double> row(model.k());
    for (std::size_t k = 0; k < row.size(); ++k)
      row[k] = model.w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
    if (options.normalize_document_weights) {
      double s = std::accumulate(row.begin(), row.end(), 0.0);
      if (s > 0.0)
        for (double& v : row) v /= s;
    }
    double bias = sample_bias(row, report.topics);
    report.sample_bias.emplace_back(instances[i].id, bias);
    if (!options.female_only || instances[i].gender == Gender::female) {
      xs.push_back(bias);
      ys.push_back(neither_probability[i]);
    }
  }
  report.n_correlated = xs.size();
  try {
    report.spearman = stats::spearman(xs, ys);
  } catch (const ValidationError& e) {
    report.spearman_note = e.what();
  }
  return report;
}

TopicBiasReport topic_bias_correlation(const Backend& backend, std::span<const GprExample> examples,
                                       const stats::TopicModel& model,
                                       const ProbabilisticClassifier& classifier,
                                       const TopicBiasOptions& options) {
  std::vector<GapInstance> instances;
  std::vector<double> probs;
  for (const auto& e : examples) {
    instances.push_back(e.instance);
    probs.push_back(classifier.predict(e.features)[2]);
  }
  return topic_bias_correlation(backend, instances, model, probs, options);
}

// ---------------------------------------------------------------------------

Template employment_template(EmploymentTemplate kind) {
  if (kind == EmploymentTemplate::is)
    return {"[TARGET] is [ATTRIBUTE]", "[TARGET] is [ATTRIBUTE]", Number::singular};
  return {"[TARGET] can do [ATTRIBUTE]", "[TARGET] can do [ATTRIBUTE]", Number::singular};
}

EmploymentTemplate parse_employment_template(std::string_view s) {
  if (s == "is") return EmploymentTemplate::is;
  if (s == "can-do" || s == "can_do") return EmploymentTemplate::can_do;
  throw ValidationError("unknown employment template '" + std::string(s) + "' (is, can-do)");
}

EmploymentReport employment_audit(const Backend& backend, std::span<const std::string> attributes,
                                  EmploymentTemplate kind, std::size_t jobs) {
  EmploymentReport r;
  auto t = employment_template(kind);
  r.template_text = t.text;
  r.n_input = attributes.size();
  std::vector<std::string> kept;
  for (const auto& a : attributes) {
    if (is_single_token(backend, a)) {
      kept.push_back(a);
    } else if (backend.tokenize(text::lowercase(a)).size() > 1) {
      r.dropped_multi_token.push_back(a);
    } else {
      r.dropped_oov.push_back(a);
    }
  }
  if (kept.empty()) throw ValidationError("no single-token attributes to audit");
  const TargetWord he{"he", Number::singular}, she{"she", Number::singular};
  std::vector<double> scores(kept.size());
  parallel_for(kept.size(), backend.thread_safe() ? jobs : 1, [&](std::size_t i) {
    scores[i] = log_prob_bias_score(backend, t, he, she, kept[i]);
  });
  std::size_t male = 0;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    r.scores.emplace_back(kept[i], scores[i]);
    male += scores[i] > 0.0;
  }
  r.percentage_male = 100.0 * static_cast<double>(male) / static_cast<double>(kept.size());
  return r;
}

std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < content.size(); ++i) {
    char c = content[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && field.empty()) {
      quoted = true;
      any = true;
    } else if (c == delimiter) {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      row.clear();
      field.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

bool parse_amount(std::string_view s, double& out) {
  std::string cleaned;
  for (char c : s)
    if (c != '$' && c != ',' && c != ' ') cleaned.push_back(c);
  if (cleaned.empty()) return false;
  auto [ptr, ec] = std::from_chars(cleaned.data(), cleaned.data() + cleaned.size(), out);
  return ec == std::errc() && ptr == cleaned.data() + cleaned.size();
}

std::vector<std::string> dedupe(std::vector<std::string> values, std::size_t limit) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto& v : values) {
    if (v.empty() || !seen.insert(v).second) continue;
    out.push_back(std::move(v));
    if (limit && out.size() == limit) break;
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_attribute_list(const std::string& content,
                                              const AttributeListOptions& options,
                                              const std::string& source) {
  if (options.format == AttributeListOptions::Format::lines) {
    std::vector<std::string> values;
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) values.emplace_back(text::trim(line));
    return dedupe(std::move(values), options.limit);
  }
  auto rows = parse_delimited(content, options.delimiter);
  if (rows.empty()) return {};
  const auto& header = rows.front();
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (text::trim(header[i]) == name) return i;
    throw SchemaError(source + ": missing column '" + name + "'");
  };
  if (options.column.empty()) throw SchemaError(source + ": no value column given");
  auto vcol = find(options.column);
  std::optional<std::size_t> scol;
  if (!options.sort_column.empty()) scol = find(options.sort_column);

  struct Row {
    std::string value;
    double key = 0.0;
  };
  std::vector<Row> parsed;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& f = rows[r];
    if (vcol >= f.size()) continue;
    Row row{std::string(text::trim(f[vcol])), 0.0};
    if (scol && (*scol >= f.size() || !parse_amount(f[*scol], row.key))) continue;
    parsed.push_back(std::move(row));
  }
  if (scol) {
    std::stable_sort(parsed.begin(), parsed.end(), [&](const Row& a, const Row& b) {
      return options.descending ? a.key > b.key : a.key < b.key;
    });
  }
  std::vector<std::string> values;
  for (auto& r : parsed) values.push_back(std::move(r.value));
  return dedupe(std::move(values), options.limit);
}

std::vector<std::string> load_attribute_list(const std::string& path,
                                             const AttributeListOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open attribute list: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_attribute_list(ss.str(), options, path);
}

// ---------------------------------------------------------------------------

GprPipelineResult run_gpr_pipeline(const Backend& backend, const std::vector<GapInstance>& instances,
                                   const GprPipelineOptions& options) {
  GprPipelineResult out;
  std::vector<std::optional<std::vector<double>>> feats(instances.size());
  std::vector<std::string> failures(instances.size());
  parallel_for(instances.size(), backend.thread_safe() ? options.jobs : 1, [&](std::size_t i) {
    try {
      feats[i] = extract_span_features(backend, instances[i]);
    } catch (const AlignmentError& e) {
      failures[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < instances.size(); ++i) {
    if (feats[i]) {
      out.examples.push_back({instances[i], std::move(*feats[i])});
    } else {
      out.alignment_failures.push_back(failures[i]);
    }
  }
  if (out.examples.empty()) throw ValidationError("no GAP instances survived span alignment");

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& e : out.examples) {
    x.push_back(e.features);
    y.push_back(static_cast<int>(e.instance.label()));
  }
  auto trained = train_gpr(x, y, options.model);
  out.history = trained.history;
  for (const auto& e : out.examples) out.probabilities.push_back(trained.classifier.predict(e.features));
  out.neither = neither_gap_analysis(trained.classifier, out.examples, options.permutation);

  if (options.run_topics) {
    std::vector<std::string> docs;
    for (const auto& e : out.examples) docs.push_back(e.instance.text);
    auto dtm = tfidf_matrix(docs, options.stopwords, TfidfOptions{options.min_df, 2});
    if (dtm.vocabulary.empty()) throw ValidationError("no terms survive document-frequency filtering");
    auto nmf_opts = options.nmf;
    nmf_opts.k = std::min<std::size_t>(
        nmf_opts.k, static_cast<std::size_t>(std::min(dtm.matrix.rows(), dtm.matrix.cols())));
    auto fit = stats::nmf(dtm.matrix, nmf_opts);
    stats::TopicModel model{std::move(fit.w), std::move(fit.h), std::move(dtm.vocabulary)};
    auto opts = options.topic_bias;
    opts.jobs = options.jobs;
    out.topic_bias = topic_bias_correlation(backend, out.examples, model, trained.classifier, opts);
    out.topics = std::move(model);
  }
  return out;
}

}  // namespace lpbias
