#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "lpbias/stats/nmf.hpp"

namespace lpbias {

struct DocTermMatrix {
  Eigen::SparseMatrix<double> matrix;  // documents x terms
  std::vector<std::string> vocabulary;  // sorted
};

struct TfidfOptions {
  std::size_t min_df = 2;
  std::size_t min_token_length = 2;
};

// Smoothed TF-IDF, tf * (ln((1 + n) / (1 + df)) + 1), with rows scaled to unit
// L2 norm. Tokens are lowercased alphanumeric runs; stopwords and terms seen
// in fewer than min_df documents are removed.
DocTermMatrix tfidf_matrix(std::span<const std::string> documents,
                           const std::set<std::string>& stopwords, const TfidfOptions& options = {});

std::set<std::string> load_stopwords(const std::string& path);

stats::TopicModel fit_topics(std::span<const std::string> documents,
                             const std::set<std::string>& stopwords, const stats::NmfOptions& nmf,
                             const TfidfOptions& tfidf = {});

// "1 & w1,w2,w3" style rows, one per topic, listing the top n terms.
std::string format_topic_table(const stats::TopicModel& model, std::size_t n);

}  // namespace lpbias
