#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpbias/backend.hpp"
#include "lpbias/stats/permutation.hpp"
#include "lpbias/stimuli.hpp"

namespace lpbias {

// One increased-log-probability measurement. score = ln p_tgt - ln p_prior,
// where p_tgt is read with the attribute visible and p_prior with both the
// target and the attribute masked.
struct AssociationRecord {
  std::string template_id;
  std::string target;
  std::string attribute;
  double p_tgt = 0.0;
  double p_prior = 0.0;
  double score = 0.0;
};

struct ItemScore {
  std::string item;
  std::string group;  // "A"/"B" for attributes, "X"/"Y" for WEAT targets
  double value = 0.0;
};

// Summary of a two-group bias test. `items` holds the per-attribute (or, for
// WEAT, per-target) scores that were permuted.
struct BiasTestResult {
  std::string kind;  // "log-prob" or "weat"
  std::string category;
  std::vector<ItemScore> items;
  double statistic = 0.0;
  double effect_size = 0.0;
  double p_value = 1.0;
  std::uint64_t n_permutations_used = 0;
  bool exact = true;
  std::uint64_t seed = 0;
  std::vector<AssociationRecord> records;
  nlohmann::json metadata = nlohmann::json::object();
};

AssociationRecord increased_log_probability(const Backend& backend, const Template& t,
                                            const TargetWord& target,
                                            const std::string& attribute);

struct BiasScoreDetail {
  double score = 0.0;
  AssociationRecord first;
  AssociationRecord second;
};

BiasScoreDetail log_prob_bias_detail(const Backend& backend, const Template& t,
                                     const TargetWord& first, const TargetWord& second,
                                     const std::string& attribute);

// increased_log_probability(first) - increased_log_probability(second).
double log_prob_bias_score(const Backend& backend, const Template& t, const TargetWord& first,
                           const TargetWord& second, const std::string& attribute);

struct TargetPair {
  TargetWord x;
  TargetWord y;
};

// Pairs X with Y words of the same grammatical number, in file order.
std::vector<TargetPair> pair_targets(const TargetSet& x, const TargetSet& y);

struct AttributeMeasurement {
  std::string attribute;
  double mean_bias = 0.0;
  std::size_t combinations = 0;
  std::vector<AssociationRecord> records;  // two per combination (x then y)
};

// Mean log probability bias score over every agreement-valid
// (template, target pair). Throws EmptyMeasurementError when none exist.
AttributeMeasurement measure_attribute(const Backend& backend, const std::vector<Template>& templates,
                                       const std::vector<TargetPair>& pairs,
                                       const std::string& attribute);

double attribute_mean_bias(const Backend& backend, const WeatCategory& category,
                           const std::string& attribute);

// statistic / population sd of the pooled values; 0 when the sd is 0.
double effect_size(std::span<const double> a, std::span<const double> b);

BiasTestResult run_category_test(const Backend& backend, const WeatCategory& category,
                                 const stats::PermutationConfig& config, std::size_t jobs = 1);

}  // namespace lpbias
