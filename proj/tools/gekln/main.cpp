#include "config.hpp"

#include "gekln/checkpoint.hpp"
#include "gekln/error.hpp"
#include "gekln/experiments.hpp"
#include "gekln/synthetic.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace gekln::cli {
namespace {

void log(const std::string& message) { std::cerr << "[gekln] " << message << "\n"; }

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

struct LoadedData {
  Dataset dataset;
  Split split;
  std::string hash;  // covers file contents, parse options, split seed and ratio
  std::size_t skipped = 0;
  bool from_cache = false;
};

LoadedData load_data(const RunConfig& cfg) {
  const fs::path path = cfg.data_path();
  if (!fs::is_regular_file(path)) throw FileNotFound(path.string());
  const ParseOptions opt = cfg.parse_options();
  const json key{{"file", hex64(hash_file(path))},
                 {"format", to_string(opt.format)},
                 {"student", opt.columns.student},
                 {"exercise", opt.columns.exercise},
                 {"concepts", opt.columns.concepts},
                 {"correct", opt.columns.correct},
                 {"order", opt.columns.order},
                 {"delimiter", std::string(1, opt.columns.delimiter)},
                 {"concept_separator", opt.columns.concept_separator},
                 {"score_threshold", opt.score_threshold},
                 {"merge_concepts", cfg.merge_concepts()},
                 {"split_seed", cfg.seed()},
                 {"split_ratio", cfg.split_ratio()}};
  LoadedData out;
  out.hash = hex64(fnv1a(key.dump()));
  const fs::path cache = cfg.cache_dir() / ("dataset-" + out.hash + ".bin");
  if (fs::is_regular_file(cache)) {
    try {
      std::tie(out.dataset, out.split) = load_dataset_cache(cache);
      out.from_cache = true;
      log("cache hit: " + cache.string());
      return out;
    } catch (const Error& e) {
      log("ignoring unreadable cache " + cache.string() + ": " + e.what());
    }
  }
  ParseResult parsed = parse_log_file(path, opt);
  out.skipped = parsed.skipped;
  if (cfg.merge_concepts()) parsed.records = merge_concepts_per_exercise(parsed.records);
  out.dataset = build_dataset(parsed.records);
  out.split = split_dataset(out.dataset, cfg.split_ratio(), cfg.seed());
  fs::create_directories(cache.parent_path());
  save_dataset_cache(cache, out.dataset, out.split);
  log("parsed " + path.string() + " (" + std::to_string(out.skipped) + " rows skipped); cached at " + cache.string());
  return out;
}

void print_stats(const LoadedData& data) {
  const Dataset& ds = data.dataset;
  std::cout << "students   " << ds.num_students << "\n"
            << "exercises  " << ds.num_exercises << "\n"
            << "concepts   " << ds.num_concepts << "\n"
            << "logs       " << ds.logs.size() << "\n"
            << "density    " << format_fixed(100.0 * ds.density(), 2) << "%\n"
            << "train/test " << data.split.train.size() << "/" << data.split.test.size() << "\n"
            << "hash       " << data.hash << "\n";
}

int cmd_ingest(const RunConfig& cfg) {
  print_stats(load_data(cfg));
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  const RunSpec spec = cfg.run_spec();
  log("training " + to_string(spec.kind) + " on " + std::to_string(data.split.train.size()) + " logs");
  const RunOutcome outcome = run_experiment(data.dataset, data.split, spec);
  const json metrics = metrics_json(outcome.report, spec, cfg.seed(), data.hash);

  const fs::path out_dir = cfg.output_dir();
  fs::create_directories(out_dir);
  write_text(out_dir / "metrics.json", metrics.dump(2) + "\n");
  std::ostringstream history;
  write_loss_history_csv(history, outcome.history);
  write_text(out_dir / "loss_history.csv", history.str());

  Checkpoint ckpt;
  ckpt.metadata = {{"spec", to_json(spec)},
                   {"seed", cfg.seed()},
                   {"dataset_hash", data.hash},
                   {"num_students", data.dataset.num_students},
                   {"num_exercises", data.dataset.num_exercises},
                   {"num_concepts", data.dataset.num_concepts},
                   {"epochs_trained", outcome.history.size()},
                   {"best_epoch", outcome.best_epoch},
                   {"metrics", metrics}};
  ckpt.params = outcome.params;
  save_checkpoint(out_dir / "checkpoint.bin", ckpt);
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

int cmd_eval(RunConfig cfg, const fs::path& checkpoint_path, bool force) {
  const json meta = read_checkpoint_metadata(checkpoint_path);
  if (!meta.contains("spec") || !meta.contains("dataset_hash")) {
    throw IncompatibleCheckpoint(checkpoint_path.string() + " was not written by 'gekln train'");
  }
  // the split is only reproducible with the training seed
  if (!cfg.is_set("seed") && meta.contains("seed")) cfg.set_from_text("seed", meta["seed"].dump());
  const LoadedData data = load_data(cfg);
  const std::string recorded = meta["dataset_hash"].get<std::string>();
  if (recorded != data.hash) {
    const std::string msg = "checkpoint was trained on dataset " + recorded + " but the configured dataset is " + data.hash;
    if (!force) throw IncompatibleCheckpoint(msg + " (use --force to evaluate anyway)");
    log("warning: " + msg);
  }
  const Checkpoint ckpt = load_checkpoint(checkpoint_path);
  RunSpec spec = run_spec_from_json(meta["spec"]);
  const RunSpec current = cfg.run_spec();
  spec.eval = current.eval;
  if (is_graph_family(spec.kind)) {
    const auto rows = [&](const char* slot) {
      return ckpt.params.contains(slot) ? static_cast<std::size_t>(ckpt.params.value(slot).rows()) : 0;
    };
    if (rows("U") != data.dataset.num_students || rows("V") != data.dataset.num_exercises) {
      throw IncompatibleCheckpoint("checkpoint embedding tables do not match the dataset size");
    }
  }
  const MetricsReport report = evaluate_params(spec, ckpt.params, data.dataset, data.split);
  const json metrics = metrics_json(report, spec, meta.value("seed", cfg.seed()), data.hash);
  const fs::path out_dir = cfg.output_dir();
  fs::create_directories(out_dir);
  write_text(out_dir / "eval_metrics.json", metrics.dump(2) + "\n");
  std::cout << metrics.dump(2) << "\n";
  return 0;
}

int cmd_ablation(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  const auto rows = run_ablation(data.dataset, data.split, cfg.run_spec(), cfg.jobs());
  const fs::path out_dir = cfg.output_dir();
  fs::create_directories(out_dir);
  std::ostringstream csv, table;
  write_ablation_csv(csv, rows);
  write_summary_table(table, rows, "model");
  write_text(out_dir / "ablation.csv", csv.str());
  write_text(out_dir / "ablation_summary.txt", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_alpha_sweep(const RunConfig& cfg) {
  const LoadedData data = load_data(cfg);
  const auto alphas = cfg.alphas();
  const auto rows = run_alpha_sweep(data.dataset, data.split, cfg.run_spec(), alphas, cfg.jobs());
  const fs::path out_dir = cfg.output_dir();
  fs::create_directories(out_dir);
  std::ostringstream csv, table;
  write_sweep_csv(csv, rows);
  write_summary_table(table, rows, "alpha");
  write_text(out_dir / "alpha_sweep.csv", csv.str());
  write_text(out_dir / "alpha_sweep_summary.txt", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_synth(const SyntheticSpec& spec, const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const auto records = synthetic_records(spec);
  write_generic_csv(out, records);
  log("wrote " + std::to_string(records.size()) + " logs to " + path.string());
  return 0;
}

// Adds one flag per config key; values are applied after the file and env.
void add_config_flags(CLI::App& cmd, std::map<std::string, std::optional<std::string>>& flags,
                      std::string& config_file) {
  cmd.add_option("-c,--config", config_file, "JSON config file; flags override its keys");
  for (const auto& s : settings()) {
    std::string names = "--" + s.key;
    if (!s.alias.empty() && s.alias != names) names += "," + s.alias;
    std::string shown = s.default_value.is_string() ? s.default_value.get<std::string>() : s.default_value.dump();
    if (shown.empty()) shown = "\"\"";
    cmd.add_option(names, flags[s.key], s.help + " [default: " + shown + "]")->group("Config keys");
  }
}

}  // namespace
}  // namespace gekln::cli

int main(int argc, char** argv) {
  using namespace gekln;
  using namespace gekln::cli;

  CLI::App app{"Graph-EKLN student performance prediction: ingest logs, train, evaluate, run ablations and alpha sweeps."};
  app.require_subcommand(1);

  std::map<std::string, std::optional<std::string>> flags;
  std::string config_file;
  fs::path checkpoint_path;
  bool force = false, no_clamp = false;

  std::vector<CLI::App*> commands;
  auto* ingest = app.add_subcommand("ingest", "parse a log file, cache it and print dataset statistics");
  auto* train = app.add_subcommand("train", "train one model; writes metrics.json, checkpoint.bin, loss_history.csv");
  auto* eval = app.add_subcommand("eval", "recompute test metrics from a checkpoint");
  auto* ablation = app.add_subcommand("ablation", "MF, MF-TEM, R-GCN and Graph-EKLN on one split; writes ablation.csv");
  auto* sweep = app.add_subcommand("alpha-sweep", "one Graph-EKLN run per alpha; writes alpha_sweep.csv");
  for (auto* cmd : {ingest, train, eval, ablation, sweep}) add_config_flags(*cmd, flags, config_file);
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint to evaluate [default: <output>/checkpoint.bin]");
  eval->add_flag("--force", force, "evaluate even when the dataset hash differs from the checkpoint's");
  eval->add_flag("--no-clamp", no_clamp, "same as --eval.clamp_rmse false");

  SyntheticSpec synth_spec;
  fs::path synth_out = "synthetic.csv";
  auto* synth = app.add_subcommand("synth", "write a synthetic generic-csv log for demos");
  synth->add_option("--students", synth_spec.students, "students")->capture_default_str();
  synth->add_option("--exercises", synth_spec.exercises, "exercises")->capture_default_str();
  synth->add_option("--concepts", synth_spec.concepts, "concepts")->capture_default_str();
  synth->add_option("--logs-per-student", synth_spec.logs_per_student, "logs per student")->capture_default_str();
  synth->add_option("--seed", synth_spec.seed, "generator seed")->capture_default_str();
  synth->add_option("-o,--out-file", synth_out, "destination")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_spec, synth_out);

    RunConfig cfg;
    if (!config_file.empty()) cfg.merge_file(config_file);
    cfg.apply_environment();
    for (const auto& [key, value] : flags) {
      if (value) cfg.set_from_text(key, *value);
    }
    if (no_clamp) cfg.set_from_text("eval.clamp_rmse", "false");

    if (ingest->parsed()) return cmd_ingest(cfg);
    if (train->parsed()) return cmd_train(cfg);
    if (eval->parsed()) {
      return cmd_eval(cfg, checkpoint_path.empty() ? cfg.output_dir() / "checkpoint.bin" : checkpoint_path, force);
    }
    if (ablation->parsed()) return cmd_ablation(cfg);
    if (sweep->parsed()) return cmd_alpha_sweep(cfg);
  } catch (const gekln::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
