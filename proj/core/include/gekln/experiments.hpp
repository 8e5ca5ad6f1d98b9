#pragma once

#include "gekln/baselines.hpp"
#include "gekln/data_ingest.hpp"
#include "gekln/graph_store.hpp"
#include "gekln/metrics.hpp"
#include "gekln/model.hpp"
#include "gekln/training.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gekln {

enum class ModelKind { graph_ekln, mf, mf_tem, rgcn, student_average, irt };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
bool is_graph_family(ModelKind kind);

struct RunSpec {
  ModelKind kind = ModelKind::graph_ekln;
  ModelConfig model;
  TrainConfig train;
  IrtConfig irt;
  EvalSettings eval;
};

// Model config after applying the ablation switches implied by `kind`.
ModelConfig effective_model_config(const RunSpec& spec);

nlohmann::json to_json(const RunSpec& spec);
// Inverse of to_json; missing sections keep their defaults.
RunSpec run_spec_from_json(const nlohmann::json& j);
// Short stable hash of the run-defining settings.
std::string fingerprint(const RunSpec& spec);

struct RunOutcome {
  RunSpec spec;
  MetricsReport report;
  std::vector<EpochRecord> history;
  ParameterStore params;
  std::size_t best_epoch = 0;
};

// Fits the model on split.train and scores split.test.
RunOutcome run_experiment(const Dataset& ds, const Split& split, const RunSpec& spec);

// Predictions of frozen parameters for any model kind.
std::vector<double> predict_pairs(const RunSpec& spec, const ParameterStore& params, const Dataset& ds,
                                  const TypedBipartiteGraph& graph, std::span<const StudentExercisePair> pairs);

MetricsReport evaluate_params(const RunSpec& spec, const ParameterStore& params, const Dataset& ds,
                              const Split& split);

struct NamedReport {
  std::string name;
  double alpha = 0.0;
  MetricsReport report;
};

// MF, MF-TEM, R-GCN and Graph-EKLN under one seed and split. `jobs` caps the
// number of concurrent runs.
std::vector<NamedReport> run_ablation(const Dataset& ds, const Split& split, const RunSpec& base,
                                      std::size_t jobs = 1);

inline const std::vector<double> kDefaultAlphas{0.0, 0.1, 1.0, 5.0, 10.0};

// One Graph-EKLN run per fusion weight.
std::vector<NamedReport> run_alpha_sweep(const Dataset& ds, const Split& split, const RunSpec& base,
                                         std::span<const double> alphas = kDefaultAlphas, std::size_t jobs = 1);

std::string format_fixed(double value, int decimals = 6);
// Rounds to 6 decimals so JSON output is stable under diffs.
double round6(double value);

void write_ablation_csv(std::ostream& out, std::span<const NamedReport> rows);
void write_sweep_csv(std::ostream& out, std::span<const NamedReport> rows);
void write_loss_history_csv(std::ostream& out, std::span<const EpochRecord> history);
void write_summary_table(std::ostream& out, std::span<const NamedReport> rows, const std::string& first_column);

nlohmann::json metrics_json(const MetricsReport& report, const RunSpec& spec, std::uint64_t seed,
                            const std::string& dataset_hash);

}  // namespace gekln
