#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <utility>
#include <vector>

#include "p2ot/dataset.hpp"
#include "p2ot/metrics.hpp"
#include "p2ot/predictor.hpp"
#include "p2ot/schedule.hpp"
#include "p2ot/solvers.hpp"

namespace p2ot::sim {

inline constexpr std::size_t kDefaultBufferCapacity = 5120;

/// FIFO queue of stale prediction rows, oldest evicted first.
class MemoryBuffer {
 public:
  struct Entry {
    std::size_t sample_id;
    Vector prediction;
  };

  explicit MemoryBuffer(std::size_t capacity = kDefaultBufferCapacity) : capacity_(capacity) {}

  void push(std::size_t sample_id, Vector prediction);
  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return entries_.empty(); }
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::deque<Entry> entries_;
};

struct TrainOptions {
  Formulation formulation = Formulation::kP2ot;
  std::size_t batch = 512;
  // Buffer rows join the transport problem from this epoch on.
  std::size_t buffer_warmup_epochs = 1;
  // Two noisy views with crossed pseudo-labels.
  bool augment = false;
  double augment_noise = 0.1;
  double sla_upper = kDefaultSlaUpper;
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean of <Q, -log P> / rho over the epoch's batches
  double acc = 0.0;
  double nmi = 0.0;
  double f1 = 0.0;
  double weighted_precision = 0.0;
  double weighted_recall = 0.0;
  double rho = 1.0;  // rho used at the epoch's last step
};

struct TrainLog {
  std::vector<TrainLogRow> rows;
};

/// True for formulations whose total mass follows the rho schedule.
bool uses_rho(Formulation formulation);

/// One pass over the data in shuffled mini-batches. Each batch: predict,
/// solve the chosen transport problem over batch ∪ buffer rows at
/// rho = rho_at(schedule, step), take the batch rows as pseudo-labels and take
/// one gradient step on <Q, -log P> / rho. Gradients flow through batch rows
/// only; buffer rows count toward the 1/n row marginal. Solver failures are
/// rethrown with the epoch and batch attached.
TrainLogRow train_epoch(PredictorState& state, const SyntheticDataset& data, MemoryBuffer& buffer,
                        const RampSchedule& schedule, const SolverConfig& cfg,
                        const TrainOptions& options, std::size_t epoch, std::mt19937_64& rng);

struct SimulationConfig {
  TrainOptions train;
  SolverConfig solver;
  RampSchedule schedule;  // total_steps is derived from epochs × batches
  std::size_t epochs = 20;
  std::size_t buffer_capacity = kDefaultBufferCapacity;
  std::size_t hidden_units = 0;
  double learning_rate = 0.5;
  std::uint64_t seed = 0;
};

struct SimulationResult {
  TrainLog log;
  metrics::EvalReport final_report;
};

/// Steps per epoch for N samples at the given batch size.
std::size_t batches_per_epoch(std::size_t n, std::size_t batch);

SimulationResult simulate(const SyntheticDataset& data, const SimulationConfig& config);

struct PrecisionRecall {
  double precision = 0.0;
  double recall = 0.0;
};

/// Macro precision/recall of argmax pseudo-labels under `assignment`
/// (cluster -> class), each sample weighted by `weights`.
PrecisionRecall weighted_tally(const std::vector<int>& pseudo_labels,
                               const std::vector<int>& true_labels,
                               const metrics::Assignment& assignment,
                               const std::vector<double>& weights);

/// Pseudo-label = argmax of each plan row; weight = N · row sum, clamped to [0, 1].
PrecisionRecall weighted_precision_recall(const TransportPlan& plan,
                                          const std::vector<int>& true_labels,
                                          const metrics::Assignment& assignment);

}  // namespace p2ot::sim
