#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "owcrs/dataset.hpp"

namespace owcrs {

struct NetworkSpec {
  int k = 6, g = 2;
  bool conv_front = true;
  int conv_channels = 8;
  int conv_kernel = 3;
  std::vector<int> hidden{64, 64, 64, 64};
  bool demands_only = false;

  int input_channels() const { return demands_only ? 1 : 2; }
  int input_dim() const { return k * input_channels(); }
  int flat_dim() const { return conv_front ? conv_channels * k : input_dim(); }
  int output_dim() const { return k + g + 1; }
  void validate() const;
};

struct NetworkWeights {
  NetworkSpec spec;
  Eigen::MatrixXd conv_w;               // channels x (in_channels*kernel)
  Eigen::VectorXd conv_b;               // channels
  std::vector<Eigen::MatrixXd> w;       // hidden layers then output layer
  std::vector<Eigen::VectorXd> b;
  Normalization norm;
  uint64_t seed = 0;
  int epochs_trained = 0;
  double final_train_loss = 0.0;
  double best_val_loss = 0.0;
};

// gradients share the weight layout
struct NetworkGradients {
  Eigen::MatrixXd conv_w;
  Eigen::VectorXd conv_b;
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;

  static NetworkGradients zeros_like(const NetworkWeights& nw);
  void accumulate(const NetworkGradients& o);
  void scale(double f);
};

struct TrainHistory {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;
  int best_epoch = -1;
};

NetworkWeights init(const NetworkSpec& spec, uint64_t seed);

// forward on normalized features; returns the softplus output
Eigen::VectorXd forward(const NetworkWeights& nw, const Eigen::VectorXd& x);

// per-sample RMSE loss over the label vector, on normalized values
double sample_loss(const NetworkWeights& nw, const Eigen::VectorXd& x,
                   const Eigen::VectorXd& target);

NetworkGradients backprop(const NetworkWeights& nw, const Eigen::VectorXd& x,
                          const Eigen::VectorXd& target, double* loss_out = nullptr);

TrainHistory train(NetworkWeights& nw, const DatasetFile& ds, int epochs,
                   int batch, double lr, uint64_t seed);

struct Prediction {
  PowerAllocation allocation;
  double predicted_total = 0.0;  // the +1 output slot, denormalized
  double consistency_gap = 0.0;  // |predicted_total - projected total|
};

Prediction predict(const NetworkWeights& nw, const Eigen::VectorXd& raw_features,
                   const ConstraintSet& cons, const GroupingPlan& plan);

void save_weights(const NetworkWeights& nw, const std::string& path);
NetworkWeights load_weights(const std::string& path);

}  // namespace owcrs
