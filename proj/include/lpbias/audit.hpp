#pragma once

#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpbias/backend.hpp"
#include "lpbias/gap.hpp"
#include "lpbias/gpr_model.hpp"
#include "lpbias/stats/nmf.hpp"
#include "lpbias/stats/permutation.hpp"
#include "lpbias/stats/spearman.hpp"
#include "lpbias/stimuli.hpp"

namespace lpbias {

// ---------------------------------------------------------------------------
// Pronoun resolution: NEITHER-probability gap between pronoun genders.

struct NeitherGapReport {
  std::size_t n_male = 0;
  std::size_t n_female = 0;
  double prior_male = 0.0;  // share of gold NEITHER labels
  double prior_female = 0.0;
  double mean_male = 0.0;  // mean predicted NEITHER probability
  double mean_female = 0.0;
  double statistic = 0.0;  // mean_female - mean_male
  double p_value = 1.0;    // one-sided, female > male, gender labels shuffled
  bool exact = true;
  std::uint64_t n_permutations_used = 0;
};

NeitherGapReport neither_gap_analysis(std::span<const double> neither_probability,
                                      std::span<const Gender> genders,
                                      std::span<const bool> gold_neither,
                                      const stats::PermutationConfig& config);

struct GprExample {
  GapInstance instance;
  std::vector<double> features;
};

NeitherGapReport neither_gap_analysis(const ProbabilisticClassifier& classifier,
                                      std::span<const GprExample> examples,
                                      const stats::PermutationConfig& config);

// ---------------------------------------------------------------------------
// Topic bias scores and their correlation with the NEITHER probability.

struct TopicBiasOptions {
  std::size_t top_n = 15;
  Template probe{"[TARGET] are interested in [ATTRIBUTE]", "[TARGET] are interested in [ATTRIBUTE]",
                 Number::plural};
  TargetWord male{"men", Number::plural};
  TargetWord female{"women", Number::plural};
  bool normalize_document_weights = true;  // rows of W scaled to sum to 1
  bool female_only = true;                 // correlate over female-pronoun samples
  std::size_t jobs = 1;
};

struct TopicBias {
  double bias = 0.0;
  std::vector<std::pair<std::string, double>> terms;  // scored term, its log prob bias score
  std::vector<std::string> dropped;                   // OOV or multi-token terms
};

struct TopicBiasReport {
  std::vector<TopicBias> topics;
  std::vector<std::pair<std::string, double>> sample_bias;  // instance id, bias
  std::optional<stats::Correlation> spearman;  // nullopt when undefined
  std::string spearman_note;
  std::size_t n_correlated = 0;
};

// Sum over the top terms of (topic-term weight x male-vs-female score).
std::vector<TopicBias> topic_bias_scores(const Backend& backend, const stats::TopicModel& model,
                                         const TopicBiasOptions& options);

// Topic-weighted sum of topic biases; linear in `weights`.
double sample_bias(std::span<const double> weights, std::span<const TopicBias> topics);

// `neither_probability[i]` belongs to instances[i]; the topic model's W rows
// are the same documents in the same order.
TopicBiasReport topic_bias_correlation(const Backend& backend, std::span<const GapInstance> instances,
                                       const stats::TopicModel& model,
                                       std::span<const double> neither_probability,
                                       const TopicBiasOptions& options = {});

TopicBiasReport topic_bias_correlation(const Backend& backend, std::span<const GprExample> examples,
                                       const stats::TopicModel& model,
                                       const ProbabilisticClassifier& classifier,
                                       const TopicBiasOptions& options = {});

// ---------------------------------------------------------------------------
// Employment attribute audits.

enum class EmploymentTemplate { is, can_do };

Template employment_template(EmploymentTemplate kind);
EmploymentTemplate parse_employment_template(std::string_view s);

struct EmploymentReport {
  std::string template_text;
  double percentage_male = 0.0;
  std::vector<std::pair<std::string, double>> scores;  // he-vs-she log prob bias score
  std::vector<std::string> dropped_multi_token;
  std::vector<std::string> dropped_oov;
  std::size_t n_input = 0;
};

EmploymentReport employment_audit(const Backend& backend, std::span<const std::string> attributes,
                                  EmploymentTemplate kind, std::size_t jobs = 1);

struct AttributeListOptions {
  enum class Format { lines, delimited } format = Format::lines;
  char delimiter = ',';
  std::string column;       // value column for delimited input
  std::string sort_column;  // optional numeric sort key
  bool descending = true;
  std::size_t limit = 0;    // 0 = no limit; applied to distinct values
};

std::vector<std::string> parse_attribute_list(const std::string& content,
                                              const AttributeListOptions& options,
                                              const std::string& source = "<memory>");
std::vector<std::string> load_attribute_list(const std::string& path,
                                             const AttributeListOptions& options);

// RFC 4180 style record splitting (quoted fields, doubled quotes, embedded
// newlines).
std::vector<std::vector<std::string>> parse_delimited(const std::string& content, char delimiter);

// ---------------------------------------------------------------------------
// End-to-end pronoun resolution audit.

struct GprPipelineOptions {
  GprModelConfig model;
  stats::PermutationConfig permutation;
  stats::NmfOptions nmf;
  TopicBiasOptions topic_bias;
  std::set<std::string> stopwords;
  std::size_t min_df = 2;
  bool run_topics = true;
  std::size_t jobs = 1;
};

struct GprPipelineResult {
  std::vector<GprExample> examples;
  std::vector<std::string> alignment_failures;
  std::vector<ClassProbabilities> probabilities;
  TrainingHistory history;
  NeitherGapReport neither;
  std::optional<stats::TopicModel> topics;
  std::optional<TopicBiasReport> topic_bias;
};

GprPipelineResult run_gpr_pipeline(const Backend& backend, const std::vector<GapInstance>& instances,
                                   const GprPipelineOptions& options);

}  // namespace lpbias
