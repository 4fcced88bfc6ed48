#include "lpbias/stats/nmf.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lpbias/error.hpp"
#include "lpbias/stats/random.hpp"

namespace lpbias::stats {

namespace {

template <typename Matrix>
void check_input(const Matrix& v, const NmfOptions& options) {
  if (options.k == 0) throw ValidationError("nmf needs k >= 1");
  auto min_dim = static_cast<std::size_t>(std::min(v.rows(), v.cols()));
  if (options.k > min_dim)
    throw ValidationError("nmf k = " + std::to_string(options.k) + " exceeds min dimension " +
                          std::to_string(min_dim));
}

double error_of(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w, const Eigen::MatrixXd& h) {
  return (v - w * h).norm();
}

// ||V - WH||^2 = ||V||^2 - 2<V, WH> + <W'W, HH'> without densifying V.
double error_of(const Eigen::SparseMatrix<double>& v, const Eigen::MatrixXd& w,
                const Eigen::MatrixXd& h) {
  double vv = v.squaredNorm();
  double cross = (w.transpose() * (v * h.transpose())).trace();
  double quad = ((w.transpose() * w).cwiseProduct(h * h.transpose())).sum();
  return std::sqrt(std::max(0.0, vv - 2.0 * cross + quad));
}

void multiplicative_step(Eigen::MatrixXd& x, const Eigen::MatrixXd& num, const Eigen::MatrixXd& den) {
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (den(i, j) > 0.0) x(i, j) *= num(i, j) / den(i, j);
}

template <typename Matrix>
NmfResult run(const Matrix& v, const NmfOptions& options) {
  check_input(v, options);
  const auto k = static_cast<Eigen::Index>(options.k);
  Rng rng(options.seed);
  NmfResult r;
  r.w.resize(v.rows(), k);
  r.h.resize(k, v.cols());
  for (Eigen::Index j = 0; j < r.w.cols(); ++j)
    for (Eigen::Index i = 0; i < r.w.rows(); ++i) r.w(i, j) = rng.uniform_open();
  for (Eigen::Index j = 0; j < r.h.cols(); ++j)
    for (Eigen::Index i = 0; i < r.h.rows(); ++i) r.h(i, j) = rng.uniform_open();

  r.error_trace.push_back(error_of(v, r.w, r.h));
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    Eigen::MatrixXd wt_v = (v.transpose() * r.w).transpose();
    Eigen::MatrixXd wt_w_h = (r.w.transpose() * r.w) * r.h;
    multiplicative_step(r.h, wt_v, wt_w_h);

    Eigen::MatrixXd v_ht = v * r.h.transpose();
    Eigen::MatrixXd w_h_ht = r.w * (r.h * r.h.transpose());
    multiplicative_step(r.w, v_ht, w_h_ht);

    double prev = r.error_trace.back();
    double cur = error_of(v, r.w, r.h);
    r.error_trace.push_back(cur);
    r.iterations = it + 1;
    if (cur == 0.0) break;
    if (options.tolerance > 0.0 && prev > 0.0 && (prev - cur) / prev < options.tolerance) break;
  }
  return r;
}

}  // namespace

NmfResult nmf(const Eigen::MatrixXd& v, const NmfOptions& options) {
  if ((v.array() < 0.0).any()) throw ValidationError("nmf input has a negative entry");
  if (!v.allFinite()) throw ValidationError("nmf input has a non-finite entry");
  return run(v, options);
}

NmfResult nmf(const Eigen::SparseMatrix<double>& v, const NmfOptions& options) {
  for (Eigen::Index c = 0; c < v.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(v, c); it; ++it)
      if (!(it.value() >= 0.0) || !std::isfinite(it.value()))
        throw ValidationError("nmf input has a negative or non-finite entry");
  return run(v, options);
}

double reconstruction_error(const Eigen::MatrixXd& v, const Eigen::MatrixXd& w,
                            const Eigen::MatrixXd& h) {
  return error_of(v, w, h);
}

void validate(const TopicModel& model) {
  if (model.w.cols() != model.h.rows())
    throw ValidationError("topic model W columns must equal H rows");
  if (static_cast<std::size_t>(model.h.cols()) != model.vocabulary.size())
    throw ValidationError("topic model H columns must equal vocabulary size");
  if ((model.w.array() < 0.0).any() || (model.h.array() < 0.0).any())
    throw ValidationError("topic model has negative weights");
}

std::vector<std::size_t> top_term_indices(const TopicModel& model, std::size_t topic,
                                          std::size_t n) {
  if (topic >= model.k())
    throw ValidationError("topic index " + std::to_string(topic) + " out of range");
  std::vector<std::size_t> idx(static_cast<std::size_t>(model.h.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  const auto row = static_cast<Eigen::Index>(topic);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return model.h(row, static_cast<Eigen::Index>(a)) > model.h(row, static_cast<Eigen::Index>(b));
  });
  idx.resize(std::min(n, idx.size()));
  return idx;
}

std::vector<std::string> top_terms(const TopicModel& model, std::size_t topic, std::size_t n) {
  std::vector<std::string> out;
  for (auto i : top_term_indices(model, topic, n)) out.push_back(model.vocabulary.at(i));
  return out;
}

std::string topic_model_to_json(const TopicModel& model) {
  nlohmann::json j;
  j["vocabulary"] = model.vocabulary;
  j["k"] = model.k();
  auto rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json out = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(i, c);
      out.push_back(row);
    }
    return out;
  };
  j["H"] = rows(model.h);
  j["W"] = rows(model.w);
  return j.dump();
}

TopicModel topic_model_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  TopicModel m;
  m.vocabulary = j.at("vocabulary").get<std::vector<std::string>>();
  auto read = [](const nlohmann::json& rows, Eigen::Index cols) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      auto row = rows[i].get<std::vector<double>>();
      if (static_cast<Eigen::Index>(row.size()) != cols)
        throw ValidationError("topic model row has wrong length");
      for (Eigen::Index c = 0; c < cols; ++c) out(static_cast<Eigen::Index>(i), c) = row[c];
    }
    return out;
  };
  m.h = read(j.at("H"), static_cast<Eigen::Index>(m.vocabulary.size()));
  m.w = read(j.at("W"), m.h.rows());
  validate(m);
  return m;
}

}  // namespace lpbias::stats
