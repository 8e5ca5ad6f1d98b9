#include "gekln/experiments.hpp"

#include "gekln/error.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <iomanip>
#include <mutex>
#include <thread>

namespace gekln {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::graph_ekln:
      return "graph-ekln";
    case ModelKind::mf:
      return "mf";
    case ModelKind::mf_tem:
      return "mf-tem";
    case ModelKind::rgcn:
      return "rgcn";
    case ModelKind::student_average:
      return "student-average";
    case ModelKind::irt:
      return "irt";
  }
  return "graph-ekln";
}

ModelKind model_kind_from_string(const std::string& name) {
  for (ModelKind k : {ModelKind::graph_ekln, ModelKind::mf, ModelKind::mf_tem, ModelKind::rgcn,
                      ModelKind::student_average, ModelKind::irt}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown model '" + name + "' (expected graph-ekln, mf, mf-tem, rgcn, student-average or irt)");
}

bool is_graph_family(ModelKind kind) {
  return kind == ModelKind::graph_ekln || kind == ModelKind::mf || kind == ModelKind::mf_tem ||
         kind == ModelKind::rgcn;
}

ModelConfig effective_model_config(const RunSpec& spec) {
  switch (spec.kind) {
    case ModelKind::mf:
      return make_baseline(BaselineKind::mf, spec.model);
    case ModelKind::mf_tem:
      return make_baseline(BaselineKind::mf_tem, spec.model);
    case ModelKind::rgcn:
      return make_baseline(BaselineKind::rgcn, spec.model);
    default:
      return spec.model;
  }
}

nlohmann::json to_json(const RunSpec& spec) {
  const ModelConfig m = effective_model_config(spec);
  nlohmann::json j;
  j["kind"] = to_string(spec.kind);
  if (is_graph_family(spec.kind)) {
    j["model"] = {{"dim", m.dim},
                  {"layers", m.layers},
                  {"alpha", m.alpha},
                  {"mlp_hidden", m.hidden()},
                  {"leaky_slope", m.leaky_slope},
                  {"use_gcn", m.use_gcn},
                  {"use_knowledge_head", m.use_knowledge_head},
                  {"share_layers", m.share_layers},
                  {"share_sides", m.share_sides}};
    j["train"] = {{"epochs", spec.train.epochs},
                  {"batch_size", spec.train.batch_size},
                  {"lr", spec.train.lr},
                  {"seed", spec.train.seed},
                  {"optimizer", to_string(spec.train.optimizer)},
                  {"eval_every", spec.train.eval_every},
                  {"early_stop_patience", spec.train.early_stop_patience}};
  }
  if (spec.kind == ModelKind::irt) {
    j["irt"] = {{"epochs", spec.irt.epochs},
                {"lr", spec.irt.lr},
                {"two_parameter", spec.irt.two_parameter},
                {"optimizer", to_string(spec.irt.optimizer)}};
  }
  j["eval"] = {{"threshold", spec.eval.threshold}, {"clamp_rmse", spec.eval.clamp_rmse}};
  return j;
}

RunSpec run_spec_from_json(const nlohmann::json& j) {
  RunSpec spec;
  try {
    spec.kind = model_kind_from_string(j.at("kind").get<std::string>());
    if (j.contains("model")) {
      const auto& m = j["model"];
      spec.model.dim = m.value("dim", spec.model.dim);
      spec.model.layers = m.value("layers", spec.model.layers);
      spec.model.alpha = m.value("alpha", spec.model.alpha);
      spec.model.mlp_hidden = m.value("mlp_hidden", spec.model.mlp_hidden);
      spec.model.leaky_slope = m.value("leaky_slope", spec.model.leaky_slope);
      spec.model.use_gcn = m.value("use_gcn", spec.model.use_gcn);
      spec.model.use_knowledge_head = m.value("use_knowledge_head", spec.model.use_knowledge_head);
      spec.model.share_layers = m.value("share_layers", spec.model.share_layers);
      spec.model.share_sides = m.value("share_sides", spec.model.share_sides);
    }
    if (j.contains("train")) {
      const auto& t = j["train"];
      spec.train.epochs = t.value("epochs", spec.train.epochs);
      spec.train.batch_size = t.value("batch_size", spec.train.batch_size);
      spec.train.lr = t.value("lr", spec.train.lr);
      spec.train.seed = t.value("seed", spec.train.seed);
      spec.train.optimizer = optimizer_from_string(t.value("optimizer", std::string("adaptive")));
      spec.train.eval_every = t.value("eval_every", spec.train.eval_every);
      spec.train.early_stop_patience = t.value("early_stop_patience", spec.train.early_stop_patience);
    }
    if (j.contains("irt")) {
      const auto& i = j["irt"];
      spec.irt.epochs = i.value("epochs", spec.irt.epochs);
      spec.irt.lr = i.value("lr", spec.irt.lr);
      spec.irt.two_parameter = i.value("two_parameter", spec.irt.two_parameter);
      spec.irt.optimizer = optimizer_from_string(i.value("optimizer", std::string("adaptive")));
    }
    if (j.contains("eval")) {
      spec.eval.threshold = j["eval"].value("threshold", spec.eval.threshold);
      spec.eval.clamp_rmse = j["eval"].value("clamp_rmse", spec.eval.clamp_rmse);
    }
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(std::string("unreadable run description: ") + e.what());
  }
  return spec;
}

std::string fingerprint(const RunSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(to_json(spec).dump())));
  return buf;
}

std::vector<double> predict_pairs(const RunSpec& spec, const ParameterStore& params, const Dataset& ds,
                                  const TypedBipartiteGraph& graph, std::span<const StudentExercisePair> pairs) {
  std::vector<double> preds;
  preds.reserve(pairs.size());
  switch (spec.kind) {
    case ModelKind::student_average: {
      const StudentAverageModel model(params);
      for (const auto& [s, p] : pairs) preds.push_back(model.predict(s, p));
      return preds;
    }
    case ModelKind::irt: {
      const IrtModel model(params);
      for (const auto& [s, p] : pairs) preds.push_back(model.predict(s, p));
      return preds;
    }
    default: {
      const GeklnModel model(effective_model_config(spec), params);
      return model.predict_batch(graph, ds.q_matrix, pairs);
    }
  }
}

MetricsReport evaluate_params(const RunSpec& spec, const ParameterStore& params, const Dataset& ds,
                              const Split& split) {
  const TypedBipartiteGraph graph = build_graph(split.train, ds.num_students, ds.num_exercises);
  const auto pairs = pairs_of(split.test);
  const auto labels = labels_of(split.test);
  MetricsReport report = evaluate(predict_pairs(spec, params, ds, graph, pairs), labels, spec.eval);
  report.config_fingerprint = fingerprint(spec);
  return report;
}

RunOutcome run_experiment(const Dataset& ds, const Split& split, const RunSpec& spec) {
  RunOutcome out;
  out.spec = spec;
  switch (spec.kind) {
    case ModelKind::student_average:
      out.params = StudentAverageModel::fit(split.train, ds.num_students).params();
      break;
    case ModelKind::irt:
      out.params = IrtModel::fit(split.train, ds.num_students, ds.num_exercises, spec.irt).params();
      break;
    default: {
      const TypedBipartiteGraph graph = build_graph(split.train, ds.num_students, ds.num_exercises);
      GeklnModel model(effective_model_config(spec), ds.num_students, ds.num_exercises, ds.num_concepts,
                       spec.train.seed);
      TrainResult result = train(model, graph, ds.q_matrix, split.train, split.test, spec.train, spec.eval);
      out.history = std::move(result.history);
      out.best_epoch = result.best_epoch;
      out.params = model.params();
      break;
    }
  }
  out.params.zero_grad();
  out.report = evaluate_params(spec, out.params, ds, split);
  return out;
}

namespace {

// Runs `count` independent tasks on at most `jobs` threads; the first
// exception is rethrown after all workers finish.
template <typename Task>
void run_parallel(std::size_t count, std::size_t jobs, Task task) {
  jobs = std::max<std::size_t>(1, std::min(jobs, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < jobs; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::vector<NamedReport> run_ablation(const Dataset& ds, const Split& split, const RunSpec& base, std::size_t jobs) {
  const std::vector<std::pair<std::string, ModelKind>> rows{{"MF", ModelKind::mf},
                                                            {"MF-TEM", ModelKind::mf_tem},
                                                            {"R-GCN", ModelKind::rgcn},
                                                            {"Graph-EKLN", ModelKind::graph_ekln}};
  std::vector<NamedReport> out(rows.size());
  run_parallel(rows.size(), jobs, [&](std::size_t i) {
    RunSpec spec = base;
    spec.kind = rows[i].second;
    out[i].name = rows[i].first;
    out[i].alpha = effective_model_config(spec).use_knowledge_head ? spec.model.alpha : 0.0;
    out[i].report = run_experiment(ds, split, spec).report;
  });
  return out;
}

std::vector<NamedReport> run_alpha_sweep(const Dataset& ds, const Split& split, const RunSpec& base,
                                         std::span<const double> alphas, std::size_t jobs) {
  if (alphas.empty()) throw ConfigError("alpha sweep needs at least one alpha");
  std::vector<NamedReport> out(alphas.size());
  run_parallel(alphas.size(), jobs, [&](std::size_t i) {
    RunSpec spec = base;
    spec.kind = ModelKind::graph_ekln;
    spec.model.alpha = alphas[i];
    out[i].name = "alpha=" + format_fixed(alphas[i]);
    out[i].alpha = alphas[i];
    out[i].report = run_experiment(ds, split, spec).report;
  });
  return out;
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

double round6(double value) { return std::round(value * 1e6) / 1e6; }

void write_ablation_csv(std::ostream& out, std::span<const NamedReport> rows) {
  out << "model,accuracy,rmse,auc,n_test\n";
  for (const auto& r : rows) {
    out << r.name << ',' << format_fixed(r.report.accuracy) << ',' << format_fixed(r.report.rmse) << ','
        << format_fixed(r.report.auc) << ',' << r.report.n_test << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const NamedReport> rows) {
  out << "alpha,accuracy,rmse,auc\n";
  for (const auto& r : rows) {
    out << format_fixed(r.alpha) << ',' << format_fixed(r.report.accuracy) << ',' << format_fixed(r.report.rmse)
        << ',' << format_fixed(r.report.auc) << '\n';
  }
}

void write_loss_history_csv(std::ostream& out, std::span<const EpochRecord> history) {
  out << "epoch,train_loss,accuracy,rmse,auc\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_fixed(r.train_loss);
    if (r.test) {
      out << ',' << format_fixed(r.test->accuracy) << ',' << format_fixed(r.test->rmse) << ','
          << format_fixed(r.test->auc);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

void write_summary_table(std::ostream& out, std::span<const NamedReport> rows, const std::string& first_column) {
  out << std::left << std::setw(14) << first_column << std::right << std::setw(10) << "Accuracy" << std::setw(10)
      << "RMSE" << std::setw(10) << "AUC" << '\n';
  for (const auto& r : rows) {
    out << std::left << std::setw(14) << r.name << std::right << std::setw(10) << format_fixed(r.report.accuracy, 4)
        << std::setw(10) << format_fixed(r.report.rmse, 4) << std::setw(10) << format_fixed(r.report.auc, 4) << '\n';
  }
}

nlohmann::json metrics_json(const MetricsReport& report, const RunSpec& spec, std::uint64_t seed,
                            const std::string& dataset_hash) {
  return {{"accuracy", round6(report.accuracy)},
          {"rmse", round6(report.rmse)},
          {"auc", round6(report.auc)},
          {"n_test", report.n_test},
          {"config", to_json(spec)},
          {"config_fingerprint", report.config_fingerprint},
          {"seed", seed},
          {"dataset_hash", dataset_hash}};
}

}  // namespace gekln
