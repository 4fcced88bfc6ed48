#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace lpbias::stats {

struct NmfOptions {
  std::size_t k = 20;
  std::size_t max_iterations = 200;
  double tolerance = 1e-4;  // stop when relative improvement falls below this
  std::uint64_t seed = 1;
};

struct NmfResult {
  Eigen::MatrixXd w;                // rows x k
  Eigen::MatrixXd h;                // k x cols
  std::vector<double> error_trace;  // Frobenius norm ||V - WH||, initial value first
  std::size_t iterations = 0;
};

// Lee-Seung multiplicative updates for the Frobenius objective, started from
// seeded uniform (0,1) factors.
NmfResult nmf(const Eigen::MatrixXd& v, const NmfOptions& options);
NmfResult nmf(const Eigen::SparseMatrix<double>& v, const NmfOptions& options);

double reconstruction_error(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w,
                            const Eigen::MatrixXd& h);

struct TopicModel {
  Eigen::MatrixXd w;  // document-topic weights
  Eigen::MatrixXd h;  // topic-term weights
  std::vector<std::string> vocabulary;

  std::size_t k() const { return static_cast<std::size_t>(h.rows()); }
};

// Checks nonnegativity and dimension consistency.
void validate(const TopicModel& model);

// The n terms with the largest weight in topic row `topic`, descending; ties
// keep vocabulary order. n is truncated to the vocabulary size.
std::vector<std::string> top_terms(const TopicModel& model, std::size_t topic, std::size_t n);
std::vector<std::size_t> top_term_indices(const TopicModel& model, std::size_t topic,
                                          std::size_t n);

std::string topic_model_to_json(const TopicModel& model);
TopicModel topic_model_from_json(const std::string& text);

}  // namespace lpbias::stats
