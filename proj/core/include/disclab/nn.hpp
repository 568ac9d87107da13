#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace disclab::nn {

enum class Activation { tanh, identity };

/// Feed-forward regressor layout: layer_sizes runs input, hidden..., output.
/// Hidden layers use the configured activation, the output layer is linear.
struct MlpSpec {
  std::vector<int> layer_sizes;
  Activation activation = Activation::tanh;
  double l2_weight = 1e-6;  // applied to weights, not biases
  std::uint64_t seed = 1;
};

struct MlpModel {
  MlpSpec spec;
  std::vector<Eigen::MatrixXd> weights;  // layer l: (out x in)
  std::vector<Eigen::VectorXd> biases;
  Eigen::VectorXd in_mean, in_std;    // input standardization
  Eigen::VectorXd out_mean, out_std;  // target standardization
  std::vector<double> training_log;   // mean minibatch loss per epoch
};

/// Fresh model: seeded uniform init scaled by 1/sqrt(fan_in) for weights,
/// zero biases, identity standardization.
MlpModel mlp_init(const MlpSpec& spec);

/// Minimizes mean squared error plus l2_weight * |W|^2 with mini-batch
/// adaptive-moment gradient descent (moment decays 0.9/0.999, eps 1e-8).
/// Inputs and targets are standardized internally. Deterministic given
/// spec.seed: fixed init and fixed shuffle order. Throws NonFiniteLoss
/// (with the epoch index) if the loss stops being finite.
MlpModel mlp_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                 const MlpSpec& spec, int epochs, int batch, double lr);

/// Standardize -> forward pass -> de-standardize. Rows are processed
/// independently, so batched and row-by-row prediction agree exactly.
Eigen::MatrixXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& query);
Eigen::VectorXd mlp_predict_one(const MlpModel& model, const Eigen::VectorXd& x);

/// Training loss (standardized space, including the l2 term) on a data set.
double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& targets);

/// Compares analytic backpropagation gradients against central finite
/// differences (step 1e-6) over every parameter; returns the worst relative
/// error. Intended for small data sets (N <= 10).
double mlp_gradient_check(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets);

}  // namespace disclab::nn
