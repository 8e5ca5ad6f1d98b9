#include "gekln/baselines.hpp"

#include "gekln/error.hpp"
#include "gekln/tape.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace gekln {

StudentAverageModel::StudentAverageModel(ParameterStore params) : params_(std::move(params)) {
  if (!params_.contains("student_mean") || !params_.contains("global_mean")) {
    throw IncompatibleCheckpoint("student-average checkpoint lacks its mean slots");
  }
}

StudentAverageModel StudentAverageModel::fit(std::span<const InteractionLog> train, std::size_t num_students) {
  std::vector<double> sums(num_students, 0.0);
  std::vector<std::size_t> counts(num_students, 0);
  double total = 0.0;
  for (const auto& log : train) {
    if (log.student >= num_students) throw IndexOutOfRange("student " + std::to_string(log.student));
    sums[log.student] += log.score;
    ++counts[log.student];
    total += log.score;
  }
  Matrix means(static_cast<Eigen::Index>(num_students), 1);
  for (std::size_t s = 0; s < num_students; ++s) {
    means(static_cast<Eigen::Index>(s), 0) =
        counts[s] == 0 ? std::numeric_limits<double>::quiet_NaN() : sums[s] / static_cast<double>(counts[s]);
  }
  Matrix global(1, 1);
  global(0, 0) = train.empty() ? 0.5 : total / static_cast<double>(train.size());

  ParameterStore params;
  params.add("student_mean", std::move(means));
  params.add("global_mean", std::move(global));
  return StudentAverageModel(std::move(params));
}

double StudentAverageModel::predict(std::size_t student, std::size_t /*exercise*/) const {
  const Matrix& means = params_.value("student_mean");
  if (student >= static_cast<std::size_t>(means.rows())) return global_mean();
  const double m = means(static_cast<Eigen::Index>(student), 0);
  return std::isnan(m) ? global_mean() : m;
}

IrtModel::IrtModel(std::size_t num_students, std::size_t num_exercises, bool two_parameter) {
  params_.add("theta", Matrix::Zero(static_cast<Eigen::Index>(num_students), 1));
  params_.add("beta", Matrix::Zero(static_cast<Eigen::Index>(num_exercises), 1));
  if (two_parameter) params_.add("discrimination", Matrix::Ones(static_cast<Eigen::Index>(num_exercises), 1));
}

IrtModel::IrtModel(ParameterStore params) : params_(std::move(params)) {
  if (!params_.contains("theta") || !params_.contains("beta")) {
    throw IncompatibleCheckpoint("IRT checkpoint lacks theta/beta");
  }
}

IrtModel IrtModel::fit(std::span<const InteractionLog> train, std::size_t num_students, std::size_t num_exercises,
                       const IrtConfig& config) {
  IrtModel model(num_students, num_exercises, config.two_parameter);
  if (train.empty()) return model;
  std::vector<std::size_t> students, exercises;
  std::vector<double> labels;
  for (const auto& log : train) {
    students.push_back(log.student);
    exercises.push_back(log.exercise);
    labels.push_back(log.score);
  }
  OptimizerState opt;
  opt.settings.kind = config.optimizer;
  opt.settings.lr = config.lr;
  ParameterStore& store = model.params_;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    const ad::Var theta = ad::row_gather(tape.parameter(store, store.id("theta")), students);
    const ad::Var beta = ad::row_gather(tape.parameter(store, store.id("beta")), exercises);
    ad::Var logits = ad::sub(theta, beta);
    if (config.two_parameter) {
      logits = ad::mul(ad::row_gather(tape.parameter(store, store.id("discrimination")), exercises), logits);
    }
    tape.backward(ad::bce_with_logits(logits, labels));
    optimizer_step(store, opt);
  }
  return model;
}

double IrtModel::logit(std::size_t student, std::size_t exercise) const {
  const Matrix& theta = params_.value("theta");
  const Matrix& beta = params_.value("beta");
  if (student >= static_cast<std::size_t>(theta.rows()) || exercise >= static_cast<std::size_t>(beta.rows())) {
    throw IndexOutOfRange("IRT (" + std::to_string(student) + ", " + std::to_string(exercise) + ")");
  }
  const auto s = static_cast<Eigen::Index>(student);
  const auto p = static_cast<Eigen::Index>(exercise);
  const double a = two_parameter() ? params_.value("discrimination")(p, 0) : 1.0;
  return a * (theta(s, 0) - beta(p, 0));
}

double IrtModel::predict(std::size_t student, std::size_t exercise) const {
  return 1.0 / (1.0 + std::exp(-logit(student, exercise)));
}

ModelConfig make_baseline(BaselineKind kind, ModelConfig base) {
  switch (kind) {
    case BaselineKind::mf:
      base.use_gcn = false;
      base.use_knowledge_head = false;
      break;
    case BaselineKind::mf_tem:
      base.use_gcn = false;
      base.use_knowledge_head = true;
      break;
    case BaselineKind::rgcn:
      base.use_gcn = true;
      base.use_knowledge_head = false;
      break;
  }
  return base;
}

}  // namespace gekln
