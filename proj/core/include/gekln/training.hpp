#pragma once

#include "gekln/checkpoint.hpp"
#include "gekln/data_ingest.hpp"
#include "gekln/graph_store.hpp"
#include "gekln/metrics.hpp"
#include "gekln/model.hpp"
#include "gekln/optimizer.hpp"
#include "gekln/random.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace gekln {

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t batch_size = 0;  // 0: full batch
  double lr = 0.001;
  std::uint64_t seed = 42;
  OptimizerKind optimizer = OptimizerKind::adaptive;
  std::size_t eval_every = 1;
  std::size_t early_stop_patience = 20;  // 0: off

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<MetricsReport> test;
};

// Mini-batch squared-loss training of a GeklnModel. Every batch re-runs the
// full-graph forward pass and masks the loss to the batch's triplets. The
// loop state (parameters, optimizer moments, RNG, history, best snapshot) can
// be checkpointed and resumed bit-exactly.
class Trainer {
 public:
  Trainer(GeklnModel& model, const TypedBipartiteGraph& graph, const QMatrix& q,
          std::span<const InteractionLog> train_logs, std::span<const InteractionLog> test_logs, TrainConfig config,
          EvalSettings eval = {});

  bool done() const noexcept { return stopped_ || epoch_ >= config_.epochs; }
  void run_epoch();
  // Runs up to `max_epochs` more epochs, or to completion.
  void run(std::size_t max_epochs = std::numeric_limits<std::size_t>::max());
  // Swaps the best-AUC snapshot into the model when early stopping kept one.
  void finalize();

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t best_epoch() const noexcept { return best_epoch_; }
  const std::vector<EpochRecord>& history() const noexcept { return history_; }

  Checkpoint save_state() const;
  void load_state(const Checkpoint& ckpt);

 private:
  std::optional<MetricsReport> evaluate_test() const;

  GeklnModel& model_;
  const TypedBipartiteGraph& graph_;
  const QMatrix& q_;
  std::vector<StudentExercisePair> train_pairs_;
  std::vector<double> train_labels_;
  std::vector<StudentExercisePair> test_pairs_;
  std::vector<double> test_labels_;
  TrainConfig config_;
  EvalSettings eval_;

  OptimizerState optimizer_;
  Rng rng_;
  std::size_t epoch_ = 0;
  bool stopped_ = false;
  std::vector<EpochRecord> history_;
  bool has_best_ = false;
  double best_auc_ = 0.0;
  std::size_t best_epoch_ = 0;
  std::vector<Matrix> best_params_;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

// Trains to completion and finalizes (see Trainer).
TrainResult train(GeklnModel& model, const TypedBipartiteGraph& graph, const QMatrix& q,
                  std::span<const InteractionLog> train_logs, std::span<const InteractionLog> test_logs,
                  const TrainConfig& config, const EvalSettings& eval = {});

std::vector<StudentExercisePair> pairs_of(std::span<const InteractionLog> logs);
std::vector<double> labels_of(std::span<const InteractionLog> logs);

}  // namespace gekln
