#include "lpbias/topics.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "lpbias/error.hpp"
#include "lpbias/text.hpp"

namespace lpbias {

DocTermMatrix tfidf_matrix(std::span<const std::string> documents,
                           const std::set<std::string>& stopwords, const TfidfOptions& options) {
  std::vector<std::map<std::string, double>> counts(documents.size());
  std::map<std::string, std::size_t> df;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    for (auto& tok : text::word_tokens(documents[d])) {
      if (tok.size() < options.min_token_length || stopwords.count(tok)) continue;
      counts[d][tok] += 1.0;
    }
    for (const auto& [tok, c] : counts[d]) ++df[tok];
  }
  DocTermMatrix out;
  std::map<std::string, std::size_t> index;
  for (const auto& [tok, n] : df) {
    if (n < options.min_df) continue;
    index[tok] = out.vocabulary.size();
    out.vocabulary.push_back(tok);
  }
  const double n_docs = static_cast<double>(documents.size());
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t d = 0; d < documents.size(); ++d) {
    std::vector<std::pair<std::size_t, double>> row;
    double norm2 = 0.0;
    for (const auto& [tok, c] : counts[d]) {
      auto it = index.find(tok);
      if (it == index.end()) continue;
      double idf = std::log((1.0 + n_docs) / (1.0 + static_cast<double>(df[tok]))) + 1.0;
      row.emplace_back(it->second, c * idf);
      norm2 += c * idf * c * idf;
    }
    double norm = std::sqrt(norm2);
    if (norm == 0.0) continue;
    for (const auto& [col, v] : row)
      triplets.emplace_back(static_cast<int>(d), static_cast<int>(col), v / norm);
  }
  out.matrix.resize(static_cast<Eigen::Index>(documents.size()),
                    static_cast<Eigen::Index>(out.vocabulary.size()));
  out.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open stopword list: " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.insert(text::lowercase(t));
  }
  return out;
}

stats::TopicModel fit_topics(std::span<const std::string> documents,
                             const std::set<std::string>& stopwords, const stats::NmfOptions& nmf,
                             const TfidfOptions& tfidf) {
  auto dtm = tfidf_matrix(documents, stopwords, tfidf);
  if (dtm.vocabulary.empty()) throw ValidationError("no terms survive document-frequency filtering");
  auto fit = stats::nmf(dtm.matrix, nmf);
  stats::TopicModel model{std::move(fit.w), std::move(fit.h), std::move(dtm.vocabulary)};
  stats::validate(model);
  return model;
}

std::string format_topic_table(const stats::TopicModel& model, std::size_t n) {
  std::ostringstream os;
  for (std::size_t k = 0; k < model.k(); ++k) {
    os << (k + 1) << " & ";
    auto terms = stats::top_terms(model, k, n);
    for (std::size_t i = 0; i < terms.size(); ++i) os << (i ? "," : "") << terms[i];
    os << "\n";
  }
  return os.str();
}

}  // namespace lpbias
