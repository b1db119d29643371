#pragma once

#include <cstddef>
#include <cstdint>

#include "p2ot/types.hpp"

namespace p2ot::sim {

/// Softmax probe on raw features: logits = x W + c, or with a hidden layer
/// logits = relu(x W1 + c1) W + c.
struct PredictorState {
  Matrix weights;  // d×K, or h×K with a hidden layer
  Vector bias;     // K
  Matrix hidden_weights;  // d×h, empty without a hidden layer
  Vector hidden_bias;     // h
  double learning_rate = 0.1;
  std::size_t step = 0;

  bool has_hidden() const { return hidden_weights.size() > 0; }
  Index num_classes() const { return weights.cols(); }
};

PredictorState init_predictor(std::size_t dim, std::size_t k, std::size_t hidden_units,
                              double learning_rate, std::uint64_t seed);

/// Row-wise softmax probabilities, N×K.
Matrix predict(const PredictorState& state, const Matrix& features);

/// One gradient-descent step on scale · <targets, -log P>. Returns the loss
/// before the step. `targets` rows need not be normalized.
double gradient_step(PredictorState& state, const Matrix& features, const Matrix& targets,
                     double scale);

/// scale · <targets, -log max(P, floor)>
double weighted_cross_entropy(const Matrix& targets, const Matrix& probabilities, double scale,
                              double floor = 1e-30);

}  // namespace p2ot::sim
