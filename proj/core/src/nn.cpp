#include "disclab/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "disclab/errors.hpp"

namespace disclab::nn {
namespace {

void validate_spec(const MlpSpec& spec) {
  if (spec.layer_sizes.size() < 3) {
    throw std::invalid_argument("MlpSpec: need at least one hidden layer");
  }
  for (int s : spec.layer_sizes) {
    if (s < 1) throw std::invalid_argument("MlpSpec: layer sizes must be >= 1");
  }
  if (spec.l2_weight < 0) {
    throw std::invalid_argument("MlpSpec: l2_weight must be >= 0");
  }
}

Eigen::MatrixXd apply_activation(const Eigen::MatrixXd& z, Activation act) {
  return act == Activation::tanh ? z.array().tanh().matrix() : z;
}

// Forward pass on standardized data; activations[l] holds layer l's output
// (activations[0] is the input). Returns the network output.
Eigen::MatrixXd forward(const MlpModel& model, const Eigen::MatrixXd& x_std,
                        std::vector<Eigen::MatrixXd>* activations) {
  const std::size_t layers = model.weights.size();
  Eigen::MatrixXd a = x_std;
  if (activations) {
    activations->clear();
    activations->push_back(a);
  }
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z =
        (a * model.weights[l].transpose()).rowwise() + model.biases[l].transpose();
    a = (l + 1 < layers) ? apply_activation(z, model.spec.activation) : z;
    if (activations) activations->push_back(a);
  }
  return a;
}

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

// Loss on standardized data: sum of squared errors / (batch * n_out) plus
// l2_weight * |W|^2. Gradient by standard backpropagation.
double loss_and_gradients(const MlpModel& model, const Eigen::MatrixXd& x_std,
                          const Eigen::MatrixXd& y_std, Gradients* grads) {
  const std::size_t layers = model.weights.size();
  std::vector<Eigen::MatrixXd> acts;
  const Eigen::MatrixXd pred = forward(model, x_std, &acts);
  const Eigen::MatrixXd err = pred - y_std;
  const double denom = double(x_std.rows()) * double(y_std.cols());
  double loss = err.squaredNorm() / denom;
  for (const auto& w : model.weights) {
    loss += model.spec.l2_weight * w.squaredNorm();
  }
  if (!grads) return loss;

  grads->weights.resize(layers);
  grads->biases.resize(layers);
  Eigen::MatrixXd delta = (2.0 / denom) * err;  // d loss / d z_last
  for (std::size_t l = layers; l-- > 0;) {
    grads->weights[l] = delta.transpose() * acts[l] +
                        2.0 * model.spec.l2_weight * model.weights[l];
    grads->biases[l] = delta.colwise().sum().transpose();
    if (l > 0) {
      Eigen::MatrixXd upstream = delta * model.weights[l];
      if (model.spec.activation == Activation::tanh) {
        upstream.array() *= 1.0 - acts[l].array().square();
      }
      delta = std::move(upstream);
    }
  }
  return loss;
}

void standardization_constants(const Eigen::MatrixXd& data, Eigen::VectorXd& mean,
                               Eigen::VectorXd& sd) {
  const Eigen::Index n = data.rows();
  mean.resize(data.cols());
  sd.resize(data.cols());
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    mean[j] = data.col(j).mean();
    const double var = (data.col(j).array() - mean[j]).square().sum() /
                       double(std::max<Eigen::Index>(n - 1, 1));
    sd[j] = std::sqrt(var);
    if (sd[j] < 1e-12) sd[j] = 1.0;
  }
}

Eigen::MatrixXd standardize(const Eigen::MatrixXd& data,
                            const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& sd) {
  Eigen::MatrixXd out = data;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    out.col(j) = (data.col(j).array() - mean[j]) / sd[j];
  }
  return out;
}

}  // namespace

MlpModel mlp_init(const MlpSpec& spec) {
  validate_spec(spec);
  MlpModel model;
  model.spec = spec;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const std::size_t layers = spec.layer_sizes.size() - 1;
  model.weights.resize(layers);
  model.biases.resize(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    const int fan_in = spec.layer_sizes[l];
    const int fan_out = spec.layer_sizes[l + 1];
    const double scale = 1.0 / std::sqrt(double(fan_in));
    model.weights[l].resize(fan_out, fan_in);
    for (Eigen::Index i = 0; i < fan_out; ++i) {
      for (Eigen::Index j = 0; j < fan_in; ++j) {
        model.weights[l](i, j) = scale * unit(rng);
      }
    }
    model.biases[l] = Eigen::VectorXd::Zero(fan_out);
  }
  const int d = spec.layer_sizes.front();
  const int n_out = spec.layer_sizes.back();
  model.in_mean = Eigen::VectorXd::Zero(d);
  model.in_std = Eigen::VectorXd::Ones(d);
  model.out_mean = Eigen::VectorXd::Zero(n_out);
  model.out_std = Eigen::VectorXd::Ones(n_out);
  return model;
}

MlpModel mlp_fit(const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                 const MlpSpec& spec, int epochs, int batch, double lr) {
  validate_spec(spec);
  const Eigen::Index n = inputs.rows();
  if (targets.rows() != n) throw DimensionMismatch("mlp_fit: row mismatch");
  if (inputs.cols() != spec.layer_sizes.front() ||
      targets.cols() != spec.layer_sizes.back()) {
    throw DimensionMismatch("mlp_fit: data does not match layer_sizes");
  }
  if (epochs < 1 || batch < 1 || batch > n) {
    throw std::invalid_argument("mlp_fit: need N >= batch >= 1 and epochs >= 1");
  }

  MlpModel model = mlp_init(spec);
  standardization_constants(inputs, model.in_mean, model.in_std);
  standardization_constants(targets, model.out_mean, model.out_std);
  const Eigen::MatrixXd x = standardize(inputs, model.in_mean, model.in_std);
  const Eigen::MatrixXd y = standardize(targets, model.out_mean, model.out_std);

  // Adam state.
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  for (const auto& w : model.weights) {
    mw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    vw.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : model.biases) {
    mb.push_back(Eigen::VectorXd::Zero(b.size()));
    vb.push_back(Eigen::VectorXd::Zero(b.size()));
  }

  std::mt19937_64 shuffle_rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index(0));

  long step = 0;
  Gradients grads;
  model.training_log.reserve(epochs);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int batches = 0;
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index count = std::min<Eigen::Index>(batch, n - start);
      Eigen::MatrixXd xb(count, x.cols()), yb(count, y.cols());
      for (Eigen::Index i = 0; i < count; ++i) {
        xb.row(i) = x.row(perm[start + i]);
        yb.row(i) = y.row(perm[start + i]);
      }
      const double loss = loss_and_gradients(model, xb, yb, &grads);
      if (!std::isfinite(loss)) {
        throw NonFiniteLoss("training loss became non-finite", epoch);
      }
      epoch_loss += loss;
      ++batches;
      ++step;
      const double corr1 = 1.0 - std::pow(beta1, double(step));
      const double corr2 = 1.0 - std::pow(beta2, double(step));
      for (std::size_t l = 0; l < model.weights.size(); ++l) {
        mw[l] = beta1 * mw[l] + (1.0 - beta1) * grads.weights[l];
        vw[l] = beta2 * vw[l] +
                (1.0 - beta2) * grads.weights[l].array().square().matrix();
        model.weights[l].array() -=
            lr * (mw[l].array() / corr1) /
            ((vw[l].array() / corr2).sqrt() + eps);
        mb[l] = beta1 * mb[l] + (1.0 - beta1) * grads.biases[l];
        vb[l] = beta2 * vb[l] +
                (1.0 - beta2) * grads.biases[l].array().square().matrix();
        model.biases[l].array() -=
            lr * (mb[l].array() / corr1) /
            ((vb[l].array() / corr2).sqrt() + eps);
      }
    }
    model.training_log.push_back(epoch_loss / double(std::max(batches, 1)));
  }
  return model;
}

Eigen::VectorXd mlp_predict_one(const MlpModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.spec.layer_sizes.front()) {
    throw DimensionMismatch("mlp_predict: query dimension mismatch");
  }
  Eigen::RowVectorXd row =
      ((x - model.in_mean).array() / model.in_std.array()).transpose();
  const Eigen::MatrixXd out = forward(model, row, nullptr);
  return (out.row(0).transpose().array() * model.out_std.array() +
          model.out_mean.array())
      .matrix();
}

Eigen::MatrixXd mlp_predict(const MlpModel& model, const Eigen::MatrixXd& query) {
  if (query.cols() != model.spec.layer_sizes.front()) {
    throw DimensionMismatch("mlp_predict: query dimension mismatch");
  }
  Eigen::MatrixXd out(query.rows(), model.spec.layer_sizes.back());
  for (Eigen::Index i = 0; i < query.rows(); ++i) {
    out.row(i) = mlp_predict_one(model, query.row(i).transpose()).transpose();
  }
  return out;
}

double mlp_loss(const MlpModel& model, const Eigen::MatrixXd& inputs,
                const Eigen::MatrixXd& targets) {
  const Eigen::MatrixXd x = standardize(inputs, model.in_mean, model.in_std);
  const Eigen::MatrixXd y = standardize(targets, model.out_mean, model.out_std);
  return loss_and_gradients(model, x, y, nullptr);
}

double mlp_gradient_check(const MlpModel& model, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets) {
  MlpModel work = model;
  const Eigen::MatrixXd xs = standardize(inputs, work.in_mean, work.in_std);
  const Eigen::MatrixXd ys = standardize(targets, work.out_mean, work.out_std);

  Gradients grads;
  loss_and_gradients(work, xs, ys, &grads);

  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double& param, double analytic) {
    const double saved = param;
    param = saved + h;
    const double lp = loss_and_gradients(work, xs, ys, nullptr);
    param = saved - h;
    const double lm = loss_and_gradients(work, xs, ys, nullptr);
    param = saved;
    const double fd = (lp - lm) / (2.0 * h);
    // Unit-floored relative error: sub-unit gradients are compared on an
    // absolute scale so FD roundoff on near-zero entries cannot dominate.
    const double rel = std::abs(analytic - fd) /
                       std::max({std::abs(analytic), std::abs(fd), 1.0});
    worst = std::max(worst, rel);
  };

  for (std::size_t l = 0; l < work.weights.size(); ++l) {
    for (Eigen::Index i = 0; i < work.weights[l].rows(); ++i) {
      for (Eigen::Index j = 0; j < work.weights[l].cols(); ++j) {
        probe(work.weights[l](i, j), grads.weights[l](i, j));
      }
    }
    for (Eigen::Index i = 0; i < work.biases[l].size(); ++i) {
      probe(work.biases[l][i], grads.biases[l][i]);
    }
  }
  return worst;
}

}  // namespace disclab::nn
