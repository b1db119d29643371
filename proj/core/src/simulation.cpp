#include "p2ot/simulation.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "p2ot/errors.hpp"
#include "p2ot/kernel.hpp"

namespace p2ot::sim {
namespace {

Matrix gather_rows(const Matrix& source, const std::vector<std::size_t>& ids) {
  Matrix out(static_cast<Index>(ids.size()), source.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) out.row(static_cast<Index>(r)) = source.row(static_cast<Index>(ids[r]));
  return out;
}

Matrix add_noise(const Matrix& x, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, stddev);
  Matrix out = x;
  for (Index i = 0; i < out.rows(); ++i) {
    for (Index j = 0; j < out.cols(); ++j) out(i, j) += gauss(rng);
  }
  return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> labels(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    Index best = 0;
    m.row(i).maxCoeff(&best);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

// Pseudo-labels for the first `batch_rows` rows of `predictions`, rescaled from
// the joint 1/n row normalization to the batch's 1/B.
Matrix pseudo_labels(const Matrix& batch_predictions, const MemoryBuffer* buffer,
                     const SolverConfig& cfg, const TrainOptions& options, std::size_t epoch,
                     std::size_t batch_index) {
  const Index batch_rows = batch_predictions.rows();
  const Index extra = buffer ? static_cast<Index>(buffer->size()) : 0;
  Matrix joint(batch_rows + extra, batch_predictions.cols());
  joint.topRows(batch_rows) = batch_predictions;
  if (buffer) {
    Index r = batch_rows;
    for (const auto& entry : buffer->entries()) joint.row(r++) = entry.prediction.transpose();
  }
  try {
    const CostMatrix cost = cost_from_predictions(PredictionMatrix(std::move(joint)), cfg.prediction_floor);
    const SolveResult solved = solve(options.formulation, cost, cfg, options.sla_upper);
    const double rescale = static_cast<double>(cost.rows()) / static_cast<double>(batch_rows);
    return solved.plan.values.topRows(batch_rows) * rescale;
  } catch (const DivergenceError& e) {
    throw DivergenceError(e.iteration(), "epoch " + std::to_string(epoch) + ", batch " +
                                             std::to_string(batch_index) + ": " + e.what());
  }
}

}  // namespace

void MemoryBuffer::push(std::size_t sample_id, Vector prediction) {
  if (capacity_ == 0) return;
  if (entries_.size() == capacity_) entries_.pop_front();
  entries_.push_back({sample_id, std::move(prediction)});
}

bool uses_rho(Formulation formulation) {
  return formulation != Formulation::kOt && formulation != Formulation::kUot;
}

std::size_t batches_per_epoch(std::size_t n, std::size_t batch) {
  if (batch == 0) throw_invalid_config("batch size must be positive");
  return (n + batch - 1) / batch;
}

TrainLogRow train_epoch(PredictorState& state, const SyntheticDataset& data, MemoryBuffer& buffer,
                        const RampSchedule& schedule, const SolverConfig& cfg,
                        const TrainOptions& options, std::size_t epoch, std::mt19937_64& rng) {
  const std::size_t n = data.size();
  if (options.batch == 0 || options.batch > n) throw_invalid_config("batch must lie in [1, N]");
  cfg.validate();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  TrainLogRow row;
  row.epoch = epoch;
  SolverConfig step_cfg = cfg;
  double loss_sum = 0.0;
  std::size_t batch_index = 0;
  const bool use_buffer = epoch >= options.buffer_warmup_epochs && !buffer.empty();

  for (std::size_t begin = 0; begin < n; begin += options.batch, ++batch_index) {
    const std::size_t end = std::min(n, begin + options.batch);
    const std::vector<std::size_t> ids(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                       order.begin() + static_cast<std::ptrdiff_t>(end));
    const double rho =
        uses_rho(options.formulation)
            ? rho_at(schedule, std::min(state.step, schedule.total_steps))
            : 1.0;
    step_cfg.rho = rho;
    const MemoryBuffer* joint_buffer = use_buffer ? &buffer : nullptr;

    const Matrix features = gather_rows(data.points, ids);
    double loss = 0.0;
    Matrix first_view_predictions;
    if (options.augment) {
      const Matrix view_a = add_noise(features, options.augment_noise, rng);
      const Matrix view_b = add_noise(features, options.augment_noise, rng);
      first_view_predictions = predict(state, view_a);
      const Matrix q_a =
          pseudo_labels(first_view_predictions, joint_buffer, step_cfg, options, epoch, batch_index);
      const Matrix q_b =
          pseudo_labels(predict(state, view_b), joint_buffer, step_cfg, options, epoch, batch_index);
      // each view learns from the other view's pseudo-labels
      loss += gradient_step(state, view_a, q_b, 0.5 / rho);
      loss += gradient_step(state, view_b, q_a, 0.5 / rho);
    } else {
      first_view_predictions = predict(state, features);
      const Matrix q =
          pseudo_labels(first_view_predictions, joint_buffer, step_cfg, options, epoch, batch_index);
      loss = gradient_step(state, features, q, 1.0 / rho);
    }
    loss_sum += loss;
    row.rho = rho;

    for (std::size_t r = 0; r < ids.size(); ++r) {
      buffer.push(ids[r], first_view_predictions.row(static_cast<Index>(r)).transpose());
    }
    ++state.step;
  }
  row.loss = loss_sum / static_cast<double>(batch_index);

  const Matrix all_predictions = predict(state, data.points);
  const std::vector<int> predicted = argmax_rows(all_predictions);
  const metrics::EvalReport report = metrics::evaluate(predicted, data.true_labels, data.class_sizes);
  row.acc = report.acc;
  row.nmi = report.nmi;
  row.f1 = report.f1;

  step_cfg.rho = row.rho;
  const CostMatrix cost =
      cost_from_predictions(PredictionMatrix(all_predictions), cfg.prediction_floor);
  const SolveResult full = solve(options.formulation, cost, step_cfg, options.sla_upper);
  const PrecisionRecall pr = weighted_precision_recall(full.plan, data.true_labels, report.assignment);
  row.weighted_precision = pr.precision;
  row.weighted_recall = pr.recall;
  return row;
}

SimulationResult simulate(const SyntheticDataset& data, const SimulationConfig& config) {
  if (config.epochs == 0) throw_invalid_config("epochs must be positive");
  const std::size_t steps = config.epochs * batches_per_epoch(data.size(), config.train.batch);
  RampSchedule schedule = config.schedule;
  schedule.total_steps = std::max<std::size_t>(1, steps - 1);

  PredictorState state = init_predictor(static_cast<std::size_t>(data.points.cols()),
                                        data.num_classes(), config.hidden_units,
                                        config.learning_rate, config.seed);
  MemoryBuffer buffer(config.buffer_capacity);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  SimulationResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    result.log.rows.push_back(
        train_epoch(state, data, buffer, schedule, config.solver, config.train, epoch, rng));
  }
  result.final_report = metrics::evaluate(argmax_rows(predict(state, data.points)),
                                          data.true_labels, data.class_sizes);
  return result;
}

PrecisionRecall weighted_tally(const std::vector<int>& pseudo_labels,
                               const std::vector<int>& true_labels,
                               const metrics::Assignment& assignment,
                               const std::vector<double>& weights) {
  const std::size_t n = true_labels.size();
  if (pseudo_labels.size() != n || weights.size() != n) {
    throw_invalid_input("weighted tally: label and weight vectors differ in length");
  }
  const std::size_t k = assignment.size();
  std::vector<double> hit(k, 0.0);
  std::vector<double> claimed(k, 0.0);
  std::vector<double> actual(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int cluster = pseudo_labels[i];
    const int truth = true_labels[i];
    if (cluster < 0 || static_cast<std::size_t>(cluster) >= k || truth < 0 ||
        static_cast<std::size_t>(truth) >= k) {
      throw_invalid_input("weighted tally: label out of range at row " + std::to_string(i));
    }
    const auto predicted_class = static_cast<std::size_t>(assignment[static_cast<std::size_t>(cluster)]);
    claimed[predicted_class] += weights[i];
    actual[static_cast<std::size_t>(truth)] += weights[i];
    if (predicted_class == static_cast<std::size_t>(truth)) hit[predicted_class] += weights[i];
  }
  PrecisionRecall out;
  std::size_t p_count = 0;
  std::size_t r_count = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (claimed[c] > 0.0) {
      out.precision += hit[c] / claimed[c];
      ++p_count;
    }
    if (actual[c] > 0.0) {
      out.recall += hit[c] / actual[c];
      ++r_count;
    }
  }
  if (p_count > 0) out.precision /= static_cast<double>(p_count);
  if (r_count > 0) out.recall /= static_cast<double>(r_count);
  return out;
}

PrecisionRecall weighted_precision_recall(const TransportPlan& plan,
                                          const std::vector<int>& true_labels,
                                          const metrics::Assignment& assignment) {
  const Index n = plan.values.rows();
  if (static_cast<std::size_t>(n) != true_labels.size()) {
    throw_invalid_input("plan rows do not match the number of labels");
  }
  if (static_cast<std::size_t>(plan.values.cols()) != assignment.size()) {
    throw_invalid_input("plan columns do not match the assignment size");
  }
  std::vector<int> pseudo(static_cast<std::size_t>(n));
  std::vector<double> weights(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    Index best = 0;
    plan.values.row(i).maxCoeff(&best);
    pseudo[static_cast<std::size_t>(i)] = static_cast<int>(best);
    weights[static_cast<std::size_t>(i)] =
        std::clamp(static_cast<double>(n) * plan.values.row(i).sum(), 0.0, 1.0);
  }
  return weighted_tally(pseudo, true_labels, assignment, weights);
}

}  // namespace p2ot::sim
