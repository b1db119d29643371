#include "p2ot/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "p2ot/errors.hpp"

namespace p2ot::sim {
namespace {

Matrix softmax_rows(Matrix logits) {
  for (Index i = 0; i < logits.rows(); ++i) {
    const double peak = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - peak).exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

}  // namespace

PredictorState init_predictor(std::size_t dim, std::size_t k, std::size_t hidden_units,
                              double learning_rate, std::uint64_t seed) {
  if (dim < 1 || k < 1) throw_invalid_config("predictor needs positive dimension and class count");
  if (!(learning_rate > 0.0)) throw_invalid_config("learning rate must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto fill = [&](Matrix& m, double stddev) {
    for (Index i = 0; i < m.rows(); ++i) {
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = stddev * gauss(rng);
    }
  };

  PredictorState state;
  state.learning_rate = learning_rate;
  const Index in = hidden_units > 0 ? static_cast<Index>(hidden_units) : static_cast<Index>(dim);
  if (hidden_units > 0) {
    state.hidden_weights.resize(static_cast<Index>(dim), in);
    fill(state.hidden_weights, std::sqrt(2.0 / static_cast<double>(dim)));
    state.hidden_bias = Vector::Zero(in);
  }
  state.weights.resize(in, static_cast<Index>(k));
  fill(state.weights, 1.0 / std::sqrt(static_cast<double>(in)));
  state.bias = Vector::Zero(static_cast<Index>(k));
  return state;
}

Matrix predict(const PredictorState& state, const Matrix& features) {
  if (state.has_hidden()) {
    Matrix hidden = features * state.hidden_weights;
    hidden.rowwise() += state.hidden_bias.transpose();
    hidden = hidden.cwiseMax(0.0);
    Matrix logits = hidden * state.weights;
    logits.rowwise() += state.bias.transpose();
    return softmax_rows(std::move(logits));
  }
  Matrix logits = features * state.weights;
  logits.rowwise() += state.bias.transpose();
  return softmax_rows(std::move(logits));
}

double weighted_cross_entropy(const Matrix& targets, const Matrix& probabilities, double scale,
                              double floor) {
  double loss = 0.0;
  for (Index i = 0; i < targets.rows(); ++i) {
    for (Index j = 0; j < targets.cols(); ++j) {
      loss -= targets(i, j) * std::log(std::max(probabilities(i, j), floor));
    }
  }
  return scale * loss;
}

double gradient_step(PredictorState& state, const Matrix& features, const Matrix& targets,
                     double scale) {
  if (features.rows() != targets.rows() || targets.cols() != state.num_classes()) {
    throw_invalid_input("gradient step: features and targets disagree in shape");
  }
  Matrix input = features;
  Matrix pre_activation;
  if (state.has_hidden()) {
    pre_activation = features * state.hidden_weights;
    pre_activation.rowwise() += state.hidden_bias.transpose();
    input = pre_activation.cwiseMax(0.0);
  }
  Matrix logits = input * state.weights;
  logits.rowwise() += state.bias.transpose();
  const Matrix probs = softmax_rows(logits);
  const double loss = weighted_cross_entropy(targets, probs, scale);

  // d loss / d logits_i = scale · (sum_j Q_ij · P_i - Q_i)
  const Vector mass = targets.rowwise().sum();
  Matrix grad_logits = probs.array().colwise() * mass.array();
  grad_logits -= targets;
  grad_logits *= scale;

  const Matrix grad_weights = input.transpose() * grad_logits;
  const Vector grad_bias = grad_logits.colwise().sum().transpose();
  if (state.has_hidden()) {
    Matrix grad_hidden = grad_logits * state.weights.transpose();
    grad_hidden = grad_hidden.cwiseProduct(
        (pre_activation.array() > 0.0).cast<double>().matrix());
    state.hidden_weights -= state.learning_rate * (features.transpose() * grad_hidden);
    state.hidden_bias -= state.learning_rate * grad_hidden.colwise().sum().transpose();
  }
  state.weights -= state.learning_rate * grad_weights;
  state.bias -= state.learning_rate * grad_bias;

  if (!state.weights.allFinite() || !state.bias.allFinite()) {
    throw Error(ErrorKind::kDivergence, "predictor weights became non-finite");
  }
  return loss;
}

}  // namespace p2ot::sim
