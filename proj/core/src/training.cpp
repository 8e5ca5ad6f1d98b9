#include "gekln/training.hpp"

#include "gekln/error.hpp"
#include "gekln/tape.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace gekln {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
  // lr == 0 is accepted: a frozen run is a useful control.
  if (!(lr >= 0.0)) throw ConfigError("train.lr must be >= 0");
  if (eval_every < 1) throw ConfigError("train.eval_every must be >= 1");
}

std::vector<StudentExercisePair> pairs_of(std::span<const InteractionLog> logs) {
  std::vector<StudentExercisePair> out;
  out.reserve(logs.size());
  for (const auto& l : logs) out.emplace_back(l.student, l.exercise);
  return out;
}

std::vector<double> labels_of(std::span<const InteractionLog> logs) {
  std::vector<double> out;
  out.reserve(logs.size());
  for (const auto& l : logs) out.push_back(l.score);
  return out;
}

Trainer::Trainer(GeklnModel& model, const TypedBipartiteGraph& graph, const QMatrix& q,
                 std::span<const InteractionLog> train_logs, std::span<const InteractionLog> test_logs,
                 TrainConfig config, EvalSettings eval)
    : model_(model),
      graph_(graph),
      q_(q),
      train_pairs_(pairs_of(train_logs)),
      train_labels_(labels_of(train_logs)),
      test_pairs_(pairs_of(test_logs)),
      test_labels_(labels_of(test_logs)),
      config_(config),
      eval_(eval),
      rng_(derive_seed(config.seed, "train.shuffle")) {
  config_.validate();
  if (train_pairs_.empty()) throw EmptyDataset();
  optimizer_.settings.kind = config_.optimizer;
  optimizer_.settings.lr = config_.lr;
}

std::optional<MetricsReport> Trainer::evaluate_test() const {
  if (test_pairs_.empty()) return std::nullopt;
  const bool has_pos = std::find(test_labels_.begin(), test_labels_.end(), 1.0) != test_labels_.end();
  const bool has_neg = std::find(test_labels_.begin(), test_labels_.end(), 0.0) != test_labels_.end();
  if (!has_pos || !has_neg) return std::nullopt;
  const auto preds = model_.predict_batch(graph_, q_, test_pairs_);
  return evaluate(preds, test_labels_, eval_);
}

void Trainer::run_epoch() {
  if (done()) return;
  const std::size_t n = train_pairs_.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  portable_shuffle(std::span<std::size_t>(order), rng_);
  const std::size_t batch = config_.batch_size == 0 ? n : std::min(config_.batch_size, n);

  double weighted_loss = 0.0;
  std::vector<StudentExercisePair> pairs;
  std::vector<double> labels;
  for (std::size_t start = 0; start < n; start += batch) {
    const std::size_t end = std::min(start + batch, n);
    pairs.clear();
    labels.clear();
    for (std::size_t i = start; i < end; ++i) {
      pairs.push_back(train_pairs_[order[i]]);
      labels.push_back(train_labels_[order[i]]);
    }
    ad::Tape tape;
    const ad::Var loss = ad::mean_squared_error(model_.forward(tape, graph_, q_, pairs), labels);
    weighted_loss += loss.value()(0, 0) * static_cast<double>(end - start);
    tape.backward(loss);
    optimizer_step(model_.params(), optimizer_);
  }
  ++epoch_;

  EpochRecord rec;
  rec.epoch = epoch_;
  rec.train_loss = weighted_loss / static_cast<double>(n);
  if (epoch_ % config_.eval_every == 0 || epoch_ == config_.epochs) rec.test = evaluate_test();
  if (config_.early_stop_patience > 0 && rec.test) {
    if (!has_best_ || rec.test->auc > best_auc_) {
      has_best_ = true;
      best_auc_ = rec.test->auc;
      best_epoch_ = epoch_;
      best_params_.clear();
      for (std::size_t i = 0; i < model_.params().size(); ++i) best_params_.push_back(model_.params().value(i));
    } else if (epoch_ - best_epoch_ >= config_.early_stop_patience) {
      stopped_ = true;
    }
  }
  history_.push_back(std::move(rec));
}

void Trainer::run(std::size_t max_epochs) {
  for (std::size_t k = 0; k < max_epochs && !done(); ++k) run_epoch();
}

void Trainer::finalize() {
  if (has_best_) {
    for (std::size_t i = 0; i < best_params_.size(); ++i) model_.params().value(i) = best_params_[i];
  } else {
    best_epoch_ = epoch_;
  }
}

namespace {

nlohmann::json record_to_json(const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}};
  if (r.test) j["test"] = {{"accuracy", r.test->accuracy}, {"rmse", r.test->rmse}, {"auc", r.test->auc},
                           {"n_test", r.test->n_test}};
  return j;
}

EpochRecord record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.train_loss = j.at("train_loss").get<double>();
  if (j.contains("test")) {
    MetricsReport m;
    m.accuracy = j["test"].at("accuracy").get<double>();
    m.rmse = j["test"].at("rmse").get<double>();
    m.auc = j["test"].at("auc").get<double>();
    m.n_test = j["test"].at("n_test").get<std::size_t>();
    r.test = m;
  }
  return r;
}

}  // namespace

Checkpoint Trainer::save_state() const {
  Checkpoint ckpt;
  ckpt.params = model_.params();
  ckpt.optimizer = optimizer_;
  std::ostringstream rng_text;
  rng_text << rng_;
  ckpt.rng_state = rng_text.str();
  nlohmann::json history = nlohmann::json::array();
  for (const auto& r : history_) history.push_back(record_to_json(r));
  ckpt.metadata["trainer"] = {{"epoch", epoch_},         {"stopped", stopped_},
                              {"has_best", has_best_},   {"best_auc", best_auc_},
                              {"best_epoch", best_epoch_}, {"history", history}};
  for (std::size_t i = 0; i < best_params_.size(); ++i) {
    ckpt.aux.emplace_back("best." + model_.params().name(i), best_params_[i]);
  }
  return ckpt;
}

void Trainer::load_state(const Checkpoint& ckpt) {
  if (!ckpt.metadata.contains("trainer")) throw IncompatibleCheckpoint("checkpoint carries no trainer state");
  ParameterStore& params = model_.params();
  if (ckpt.params.size() != params.size()) throw IncompatibleCheckpoint("parameter slot count differs");
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& v = ckpt.params.value(params.name(i));
    if (v.rows() != params.value(i).rows() || v.cols() != params.value(i).cols()) {
      throw IncompatibleCheckpoint("shape of slot '" + params.name(i) + "' differs");
    }
    params.value(i) = v;
  }
  params.zero_grad();
  optimizer_ = ckpt.optimizer;
  std::istringstream rng_text(ckpt.rng_state);
  rng_text >> rng_;
  if (!rng_text) throw IncompatibleCheckpoint("unreadable RNG state");

  const auto& t = ckpt.metadata.at("trainer");
  epoch_ = t.at("epoch").get<std::size_t>();
  stopped_ = t.at("stopped").get<bool>();
  has_best_ = t.at("has_best").get<bool>();
  best_auc_ = t.at("best_auc").get<double>();
  best_epoch_ = t.at("best_epoch").get<std::size_t>();
  history_.clear();
  for (const auto& r : t.at("history")) history_.push_back(record_from_json(r));
  best_params_.clear();
  for (const auto& [name, m] : ckpt.aux) {
    if (name.rfind("best.", 0) == 0) best_params_.push_back(m);
  }
}

TrainResult train(GeklnModel& model, const TypedBipartiteGraph& graph, const QMatrix& q,
                  std::span<const InteractionLog> train_logs, std::span<const InteractionLog> test_logs,
                  const TrainConfig& config, const EvalSettings& eval) {
  Trainer trainer(model, graph, q, train_logs, test_logs, config, eval);
  trainer.run();
  trainer.finalize();
  return {trainer.history(), trainer.best_epoch()};
}

}  // namespace gekln
