#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lpbias/audit.hpp"
#include "lpbias/backend.hpp"
#include "lpbias/bias_core.hpp"
#include "lpbias/stats/permutation.hpp"

namespace lpbias {

inline constexpr const char* kVersion = "0.3.1";

nlohmann::json to_json(const BackendDescriptor& d);
nlohmann::json to_json(const stats::PermutationConfig& c);
nlohmann::json to_json(const BiasTestResult& r);
nlohmann::json to_json(const NeitherGapReport& r);
nlohmann::json to_json(const TopicBiasReport& r);
nlohmann::json to_json(const EmploymentReport& r);
nlohmann::json to_json(const GprPipelineResult& r, const GprModelConfig& model);

// Header: category,statistic,effect-size,p-value,exact,n-permutations,seed
void write_summary_csv(std::ostream& os, const std::vector<BiasTestResult>& results);

// Fixed-width table for the terminal.
std::string format_summary_table(const std::vector<BiasTestResult>& results);
std::string format_employment_table(const std::vector<EmploymentReport>& reports);
std::string format_gpr_table(const NeitherGapReport& r, const TopicBiasReport* topics);

// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::string& path);

struct RunManifest {
  std::string command;
  std::vector<std::string> arguments;
  BackendDescriptor backend;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::uint64_t seed = 0;
  stats::PermutationConfig permutation;
  std::string version = kVersion;
  std::string timestamp;  // UTC, ISO 8601

  void add_input(const std::string& path) { input_digests[path] = sha256_file(path); }
  void validate() const;
};

nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
std::string utc_timestamp();

// Writes `j` with two-space indent and a trailing newline.
void write_json_file(const std::string& path, const nlohmann::json& j);

}  // namespace lpbias
