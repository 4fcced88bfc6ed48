#include "lpbias/gpr_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "lpbias/error.hpp"
#include "lpbias/stats/random.hpp"

namespace lpbias {

namespace {

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& z) {
  Eigen::MatrixXd p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    double m = z.row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < z.cols(); ++c) s += (p(i, c) = std::exp(z(i, c) - m));
    p.row(i) /= s;
  }
  return p;
}

double log_loss(const Eigen::MatrixXd& p, const std::vector<int>& labels,
                const std::vector<std::size_t>& rows) {
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r)
    total -= std::log(std::max(p(static_cast<Eigen::Index>(r), labels[rows[r]]), 1e-15));
  return total / static_cast<double>(rows.size());
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

struct Adam {
  Eigen::MatrixXd m, v;
  void init(Eigen::Index rows, Eigen::Index cols) {
    m = Eigen::MatrixXd::Zero(rows, cols);
    v = Eigen::MatrixXd::Zero(rows, cols);
  }
  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double lr, std::size_t t) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
    m = beta1 * m + (1.0 - beta1) * grad;
    v = beta2 * v + (1.0 - beta2) * grad.cwiseProduct(grad);
    double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
};

}  // namespace

void validate(const GprModelConfig& c) {
  if (c.hidden_units == 0) throw ValidationError("hidden-units must be positive");
  if (!(c.dropout_rate >= 0.0 && c.dropout_rate < 1.0)) throw ValidationError("dropout must be in [0,1)");
  if (!(c.l2_weight >= 0.0)) throw ValidationError("l2-weight must be >= 0");
  if (!(c.learning_rate > 0.0)) throw ValidationError("learning rate must be positive");
  if (c.batch_size == 0 || c.epochs == 0) throw ValidationError("batch size and epochs must be positive");
  if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0))
    throw ValidationError("validation fraction must be in [0,1)");
  if (c.optimizer != "adam" && c.optimizer != "sgd")
    throw ValidationError("optimizer must be adam or sgd");
}

GprModelConfig gpr_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("model config must be a JSON object");
  GprModelConfig c;
  try {
  c.hidden_units = j.value("hidden_units", c.hidden_units);
  c.dropout_rate = j.value("dropout_rate", c.dropout_rate);
  c.l2_weight = j.value("l2_weight", c.l2_weight);
  c.optimizer = j.value("optimizer", c.optimizer);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
  c.patience = j.value("patience", c.patience);
  c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const GprModelConfig& c) {
  return {{"hidden_units", c.hidden_units}, {"dropout_rate", c.dropout_rate},
          {"l2_weight", c.l2_weight},       {"optimizer", c.optimizer},
          {"learning_rate", c.learning_rate}, {"epochs", c.epochs},
          {"batch_size", c.batch_size},     {"validation_fraction", c.validation_fraction},
          {"patience", c.patience},         {"seed", c.seed}};
}

MlpClassifier::MlpClassifier(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2,
                             Eigen::VectorXd b2)
    : w1_(std::move(w1)), b1_(std::move(b1)), w2_(std::move(w2)), b2_(std::move(b2)) {}

Eigen::MatrixXd MlpClassifier::predict_batch(const Eigen::MatrixXd& x) const {
  if (x.cols() != w1_.rows()) throw ValidationError("feature dimension does not match the classifier");
  Eigen::MatrixXd h = ((x * w1_).rowwise() + b1_.transpose()).cwiseMax(0.0);
  return softmax_rows((h * w2_).rowwise() + b2_.transpose());
}

ClassProbabilities MlpClassifier::predict(std::span<const double> features) const {
  Eigen::MatrixXd x(1, static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i) x(0, static_cast<Eigen::Index>(i)) = features[i];
  auto p = predict_batch(x);
  return {p(0, 0), p(0, 1), p(0, 2)};
}

TrainedGpr train_gpr(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                     const GprModelConfig& config) {
  validate(config);
  if (features.empty()) throw ValidationError("no training examples");
  if (features.size() != labels.size()) throw ValidationError("features and labels differ in length");
  std::set<int> classes;
  for (int l : labels) {
    if (l < 0 || l > 2) throw ValidationError("labels must be 0 (A), 1 (B) or 2 (NEITHER)");
    classes.insert(l);
  }
  if (classes.size() < 2)
    throw ValidationError("training set contains a single class; refusing to fit a degenerate model");

  const auto n = static_cast<Eigen::Index>(features.size());
  const auto d = static_cast<Eigen::Index>(features.front().size());
  const auto hdim = static_cast<Eigen::Index>(config.hidden_units);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = features[static_cast<std::size_t>(i)];
    if (static_cast<Eigen::Index>(row.size()) != d) throw ValidationError("ragged feature matrix");
    for (Eigen::Index j = 0; j < d; ++j) {
      if (!std::isfinite(row[static_cast<std::size_t>(j)])) throw ValidationError("non-finite feature");
      x(i, j) = row[static_cast<std::size_t>(j)];
    }
  }

  stats::Rng rng(config.seed);
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  auto n_val = static_cast<std::size_t>(std::floor(config.validation_fraction * static_cast<double>(n)));
  if (n - static_cast<Eigen::Index>(n_val) < 1) n_val = 0;
  std::vector<std::size_t> val_rows(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  Eigen::MatrixXd x_val = gather(x, val_rows);

  // Glorot-uniform kernels, zero biases.
  auto glorot = [&](Eigen::Index fan_in, Eigen::Index fan_out) {
    double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Eigen::MatrixXd w(fan_in, fan_out);
    for (Eigen::Index j = 0; j < fan_out; ++j)
      for (Eigen::Index i = 0; i < fan_in; ++i) w(i, j) = (2.0 * rng.uniform() - 1.0) * limit;
    return w;
  };
  Eigen::MatrixXd w1 = glorot(d, hdim);
  Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(1, hdim);
  Eigen::MatrixXd w2 = glorot(hdim, 3);
  Eigen::MatrixXd b2 = Eigen::MatrixXd::Zero(1, 3);
  Adam ow1, ob1, ow2, ob2;
  ow1.init(d, hdim);
  ob1.init(1, hdim);
  ow2.init(hdim, 3);
  ob2.init(1, 3);

  const double keep = 1.0 - config.dropout_rate;
  TrainedGpr out;
  out.history.validation_size = n_val;
  double best_val = std::numeric_limits<double>::infinity();
  MlpClassifier best;
  std::size_t since_best = 0;
  std::size_t step = 0;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    auto epoch_rows = train_rows;
    rng.shuffle(epoch_rows);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < epoch_rows.size(); start += config.batch_size) {
      std::vector<std::size_t> rows(epoch_rows.begin() + static_cast<std::ptrdiff_t>(start),
                                    epoch_rows.begin() + static_cast<std::ptrdiff_t>(
                                        std::min(epoch_rows.size(), start + config.batch_size)));
      const auto bsz = static_cast<Eigen::Index>(rows.size());
      Eigen::MatrixXd xb = gather(x, rows);
      Eigen::MatrixXd y = Eigen::MatrixXd::Zero(bsz, 3);
      for (Eigen::Index i = 0; i < bsz; ++i) y(i, labels[rows[static_cast<std::size_t>(i)]]) = 1.0;

      Eigen::MatrixXd z1 = (xb * w1).rowwise() + b1.row(0);
      Eigen::MatrixXd a1 = z1.cwiseMax(0.0);
      Eigen::MatrixXd mask(bsz, hdim);
      for (Eigen::Index j = 0; j < hdim; ++j)
        for (Eigen::Index i = 0; i < bsz; ++i) mask(i, j) = rng.uniform() < keep ? 1.0 / keep : 0.0;
      Eigen::MatrixXd a1d = a1.cwiseProduct(mask);
      Eigen::MatrixXd p = softmax_rows((a1d * w2).rowwise() + b2.row(0));

      double ce = 0.0;
      for (Eigen::Index i = 0; i < bsz; ++i)
        ce -= std::log(std::max(p(i, labels[rows[static_cast<std::size_t>(i)]]), 1e-15));
      ce /= static_cast<double>(bsz);
      loss_sum += ce + config.l2_weight * w2.squaredNorm();
      ++batches;

      Eigen::MatrixXd dz2 = (p - y) / static_cast<double>(bsz);
      Eigen::MatrixXd dw2 = a1d.transpose() * dz2 + 2.0 * config.l2_weight * w2;
      Eigen::MatrixXd db2 = dz2.colwise().sum();
      Eigen::MatrixXd da1 = (dz2 * w2.transpose()).cwiseProduct(mask);
      Eigen::MatrixXd dz1 = da1.cwiseProduct((z1.array() > 0.0).cast<double>().matrix());
      Eigen::MatrixXd dw1 = xb.transpose() * dz1;
      Eigen::MatrixXd db1 = dz1.colwise().sum();

      ++step;
      if (config.optimizer == "adam") {
        ow1.step(w1, dw1, config.learning_rate, step);
        ob1.step(b1, db1, config.learning_rate, step);
        ow2.step(w2, dw2, config.learning_rate, step);
        ob2.step(b2, db2, config.learning_rate, step);
      } else {
        w1 -= config.learning_rate * dw1;
        b1 -= config.learning_rate * db1;
        w2 -= config.learning_rate * dw2;
        b2 -= config.learning_rate * db2;
      }
    }
    out.history.train_loss.push_back(loss_sum / static_cast<double>(batches));

    MlpClassifier current(w1, b1.row(0).transpose(), w2, b2.row(0).transpose());
    if (n_val == 0) {
      best = current;
      out.history.best_epoch = epoch;
      continue;
    }
    double val = log_loss(current.predict_batch(x_val), labels, val_rows);
    out.history.validation_loss.push_back(val);
    if (val < best_val) {
      best_val = val;
      best = current;
      out.history.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  out.classifier = std::move(best);
  return out;
}

}  // namespace lpbias
