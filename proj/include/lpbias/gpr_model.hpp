#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace lpbias {

struct GprModelConfig {
  std::size_t hidden_units = 31;
  double dropout_rate = 0.6;
  double l2_weight = 0.1;  // on the output kernel, added to the batch loss as l2 * ||W||^2
  std::string optimizer = "adam";
  double learning_rate = 1e-3;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double validation_fraction = 0.1;  // held out for early stopping
  std::size_t patience = 5;
  std::uint64_t seed = 1;
};

void validate(const GprModelConfig& config);
GprModelConfig gpr_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const GprModelConfig& config);

using ClassProbabilities = std::array<double, 3>;  // A, B, NEITHER

class ProbabilisticClassifier {
 public:
  virtual ~ProbabilisticClassifier() = default;
  virtual ClassProbabilities predict(std::span<const double> features) const = 0;
};

// One hidden ReLU layer with dropout, softmax over {A, B, NEITHER}.
class MlpClassifier final : public ProbabilisticClassifier {
 public:
  MlpClassifier() = default;
  MlpClassifier(Eigen::MatrixXd w1, Eigen::VectorXd b1, Eigen::MatrixXd w2, Eigen::VectorXd b2);

  ClassProbabilities predict(std::span<const double> features) const override;
  Eigen::MatrixXd predict_batch(const Eigen::MatrixXd& x) const;

  const Eigen::MatrixXd& w1() const { return w1_; }
  const Eigen::VectorXd& b1() const { return b1_; }
  const Eigen::MatrixXd& w2() const { return w2_; }
  const Eigen::VectorXd& b2() const { return b2_; }

 private:
  Eigen::MatrixXd w1_;  // input x hidden
  Eigen::VectorXd b1_;
  Eigen::MatrixXd w2_;  // hidden x 3
  Eigen::VectorXd b2_;
};

struct TrainingHistory {
  std::vector<double> train_loss;       // mean regularized batch loss per epoch
  std::vector<double> validation_loss;  // log-loss on the held-out split, if any
  std::size_t best_epoch = 0;
  std::size_t validation_size = 0;
};

struct TrainedGpr {
  MlpClassifier classifier;
  TrainingHistory history;
};

// labels are 0 (A), 1 (B), 2 (NEITHER). Deterministic given config.seed.
TrainedGpr train_gpr(const std::vector<std::vector<double>>& features, const std::vector<int>& labels,
                     const GprModelConfig& config);

}  // namespace lpbias
