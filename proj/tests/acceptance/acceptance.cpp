// Prints one PASS/FAIL/NOT RUN line per acceptance criterion.
// Usage: acceptance [criterion numbers...]   (default: all)
// Exit: 1 if any selected criterion failed, 77 if none failed but some could
// not run (missing dataset), 0 otherwise.

#include "gekln/baselines.hpp"
#include "gekln/error.hpp"
#include "gekln/experiments.hpp"
#include "gekln/metrics.hpp"
#include "gekln/model.hpp"
#include "gekln/synthetic.hpp"
#include "gekln/training.hpp"
#include "support/model_oracles.hpp"
#include "support/oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

using namespace gekln;

namespace {

enum class Outcome { pass, fail, not_run, info };

struct Result {
  Outcome outcome;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string num(double v, int precision = 6) {
  std::ostringstream out;
  out.precision(precision);
  out << v;
  return out.str();
}

Result verdict(bool ok, const std::string& detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

// 1
Result gradient_correctness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  std::size_t checked = 0;
  const int instances = 25;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t m = 1 + rng() % 8, n = 1 + rng() % 8, o = 1 + rng() % 3;
    const Dataset ds = oracle::random_dataset(rng, m, n, o, 1 + rng() % 30);
    const auto graph = build_graph(ds.logs, m, n);
    ModelConfig cfg;
    cfg.dim = 1 + rng() % 4;
    cfg.layers = rng() % 3;
    cfg.alpha = 0.25 * static_cast<double>(1 + rng() % 8);
    GeklnModel model(cfg, m, n, o, rng());
    const auto pairs = pairs_of(ds.logs);
    const auto labels = labels_of(ds.logs);
    {
      ad::Tape tape;
      tape.backward(ad::mean_squared_error(model.forward(tape, graph, ds.q_matrix, pairs), labels));
    }
    const auto numeric = oracle::finite_difference_gradients(model.params(), [&] {
      return oracle::loop_squared_loss(model.predict_batch(graph, ds.q_matrix, pairs), labels);
    });
    for (std::size_t slot = 0; slot < model.params().size(); ++slot) {
      const Matrix& g = model.params().grad(slot);
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        worst = std::max(worst, oracle::relative_error(g.data()[i], numeric[slot].data()[i]));
        ++checked;
      }
    }
  }
  const double elapsed = seconds_since(t0);
  return verdict(worst <= 1e-4 && elapsed < 60.0,
                 std::to_string(instances) + " instances, " + std::to_string(checked) +
                     " gradient entries, max rel err " + num(worst, 3) + " (<= 1e-4), " + num(elapsed, 3) + " s");
}

// 2
Result propagation_oracle() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  const int graphs = 60;
  for (int trial = 0; trial < graphs; ++trial) {
    const std::size_t m = 1 + rng() % 10, n = 1 + rng() % 10;
    const Dataset ds = oracle::random_dataset(rng, m, n, 2, rng() % 40);
    const auto graph = build_graph(ds.logs, m, n);
    const Eigen::Index d = 1 + static_cast<Eigen::Index>(rng() % 5);
    const Matrix hs = oracle::random_matrix(static_cast<Eigen::Index>(m), d, rng);
    const Matrix hp = oracle::random_matrix(static_cast<Eigen::Index>(n), d, rng);
    const auto ws = oracle::random_side(rng, d, d), wp = oracle::random_side(rng, d, d);
    ad::Tape tape;
    const LayerWeights w{oracle::side_vars(tape, ws), oracle::side_vars(tape, wp)};
    const auto [next_s, next_p] = propagate_layer(graph, tape.constant(hs), tape.constant(hp), w, 0.01);
    std::vector<std::tuple<std::size_t, std::size_t, int>> edges;
    for (const auto& l : ds.logs) edges.emplace_back(l.student, l.exercise, l.score);
    const auto mi = static_cast<Eigen::Index>(m), ni = static_cast<Eigen::Index>(n);
    const std::array<Matrix, 2> a_s{oracle::dense_adjacency(edges, mi, ni, 0, true), oracle::dense_adjacency(edges, mi, ni, 1, true)};
    const std::array<Matrix, 2> a_p{oracle::dense_adjacency(edges, ni, mi, 0, false), oracle::dense_adjacency(edges, ni, mi, 1, false)};
    worst = std::max(worst, (next_s.value() - oracle::dense_propagate(hs, hp, a_s, ws, 0.01)).cwiseAbs().maxCoeff());
    worst = std::max(worst, (next_p.value() - oracle::dense_propagate(hp, hs, a_p, wp, 0.01)).cwiseAbs().maxCoeff());
  }
  return verdict(worst <= 1e-10, std::to_string(graphs) + " random graphs, max abs deviation " + num(worst, 3) + " (<= 1e-10)");
}

// 3
Result auc_oracle() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  int instances = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng() % 300;
    std::vector<double> labels(n), preds(n);
    // near-degenerate: a single member of one class
    const int mode = trial % 3;
    for (std::size_t i = 0; i < n; ++i) labels[i] = mode == 0 ? static_cast<double>(rng() % 2) : (mode == 1 ? 0.0 : 1.0);
    if (mode != 0) labels[rng() % n] = mode == 1 ? 1.0 : 0.0;
    if (mode == 0) {
      labels[0] = 0.0;
      labels[1] = 1.0;
    }
    const std::uint64_t levels = trial % 2 == 0 ? 5 : 1000000;
    for (auto& p : preds) p = static_cast<double>(rng() % levels) / static_cast<double>(levels);
    worst = std::max(worst, std::abs(auc(preds, labels) - oracle::pairwise_auc(preds, labels)));
    ++instances;
  }
  bool degenerate_rejected = false;
  try {
    (void)auc(std::vector<double>{0.1, 0.2}, std::vector<double>{1.0, 1.0});
  } catch (const DegenerateLabels&) {
    degenerate_rejected = true;
  }
  return verdict(worst <= 1e-12 && degenerate_rejected,
                 std::to_string(instances) + " instances with ties and single-member classes, max deviation " +
                     num(worst, 3) + " (<= 1e-12); single-class input " +
                     (degenerate_rejected ? "rejected" : "NOT rejected"));
}

// 4
Result ablation_oracles() {
  std::mt19937_64 rng(31);
  double mf_dev = 0.0;
  bool rgcn_exact = true;
  const int instances = 30;
  for (int trial = 0; trial < instances; ++trial) {
    const std::size_t m = 1 + rng() % 8, n = 1 + rng() % 8, o = 1 + rng() % 3;
    const Dataset ds = oracle::random_dataset(rng, m, n, o, rng() % 30);
    const auto graph = build_graph(ds.logs, m, n);
    ModelConfig cfg;
    cfg.dim = 1 + rng() % 6;
    cfg.layers = 1 + rng() % 2;
    const GeklnModel full(cfg, m, n, o, rng());
    std::vector<StudentExercisePair> pairs;
    for (std::size_t s = 0; s < m; ++s)
      for (std::size_t p = 0; p < n; ++p) pairs.emplace_back(s, p);
    const GeklnModel mf(make_baseline(BaselineKind::mf, cfg), full.params());
    const auto mf_pred = mf.predict_batch(graph, ds.q_matrix, pairs);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      mf_dev = std::max(mf_dev, std::abs(mf_pred[i] - oracle::plain_mf(full.params(), pairs[i].first, pairs[i].second)));
    }
    ModelConfig zero = cfg;
    zero.alpha = 0.0;
    const auto a0 = GeklnModel(zero, full.params()).predict_batch(graph, ds.q_matrix, pairs);
    const auto rg = GeklnModel(make_baseline(BaselineKind::rgcn, cfg), full.params()).predict_batch(graph, ds.q_matrix, pairs);
    rgcn_exact = rgcn_exact && a0 == rg;
  }
  // the loop oracle sums the dot product in a different order than the
  // vectorized kernel, so agreement is to rounding
  return verdict(mf_dev <= 1e-12 && rgcn_exact,
                 std::to_string(instances) + " random parameter sets; MF vs plain u.v max deviation " + num(mf_dev, 3) +
                     " (<= 1e-12, summation-order rounding); alpha=0 vs R-GCN " +
                     (rgcn_exact ? "bit-identical" : "DIFFERENT"));
}

// 5
Result determinism() {
  SyntheticSpec sp;
  sp.students = 40;
  sp.exercises = 50;
  sp.concepts = 5;
  sp.logs_per_student = 15;
  const Dataset ds = build_dataset(synthetic_records(sp));
  const Split split = split_dataset(ds, 0.2, 7);
  RunSpec spec;
  spec.model.dim = 16;
  spec.train.epochs = 25;
  spec.train.batch_size = 100;
  spec.train.seed = 7;
  const auto run_json = [&] {
    const auto outcome = run_experiment(ds, split, spec);
    return metrics_json(outcome.report, spec, 7, "synthetic").dump(2);
  };
  const bool json_identical = run_json() == run_json();

  const auto graph = build_graph(split.train, ds.num_students, ds.num_exercises);
  TrainConfig tc = spec.train;
  tc.epochs = 20;
  tc.early_stop_patience = 5;
  GeklnModel straight(spec.model, ds.num_students, ds.num_exercises, ds.num_concepts, 7);
  Trainer full(straight, graph, ds.q_matrix, split.train, split.test, tc);
  full.run();
  full.finalize();
  const auto path = std::filesystem::temp_directory_path() / "gekln_acceptance_resume.ckpt";
  GeklnModel first(spec.model, ds.num_students, ds.num_exercises, ds.num_concepts, 7);
  {
    Trainer part(first, graph, ds.q_matrix, split.train, split.test, tc);
    part.run(8);
    save_checkpoint(path, part.save_state());
  }
  GeklnModel resumed(spec.model, ds.num_students, ds.num_exercises, ds.num_concepts, 1234);
  Trainer rest(resumed, graph, ds.q_matrix, split.train, split.test, tc);
  rest.load_state(load_checkpoint(path));
  rest.run();
  rest.finalize();
  std::filesystem::remove(path);
  bool resume_identical = rest.history().size() == full.history().size();
  for (std::size_t i = 0; resume_identical && i < full.history().size(); ++i) {
    resume_identical = rest.history()[i].train_loss == full.history()[i].train_loss;
  }
  for (std::size_t i = 0; resume_identical && i < straight.params().size(); ++i) {
    resume_identical = resumed.params().value(i) == straight.params().value(i);
  }
  return verdict(json_identical && resume_identical,
                 std::string("repeat run metrics JSON ") + (json_identical ? "byte-identical" : "DIFFERS") +
                     "; resume after epoch 8 of " + std::to_string(full.history().size()) + " " +
                     (resume_identical ? "bit-identical" : "DIFFERS"));
}

// 6
Result toy_overfit() {
  const Dataset toy = oracle::toy_dataset();
  const auto graph = build_graph(toy.logs, toy.num_students, toy.num_exercises);
  TrainConfig tc;
  tc.epochs = 200;
  tc.early_stop_patience = 0;
  GeklnModel model(ModelConfig{}, toy.num_students, toy.num_exercises, toy.num_concepts, tc.seed);
  const auto history = train(model, graph, toy.q_matrix, toy.logs, {}, tc).history;
  const double last = history.back().train_loss;
  return verdict(toy.num_students == 5 && toy.num_exercises == 8 && toy.num_concepts == 3 && last < 0.05,
                 std::to_string(toy.num_students) + "x" + std::to_string(toy.num_exercises) + "x" +
                     std::to_string(toy.num_concepts) + " toy, " + std::to_string(toy.logs.size()) +
                     " logs, default model (D=128, L=2, lr=0.001), train loss after 200 full-batch epochs " +
                     num(last, 4) + " (< 0.05)");
}

// 7-9 share one set of runs on the ASSIST file.
struct AssistRuns {
  std::map<std::string, double> mean_auc;
  double mean_student_avg_accuracy = 0.0;
  double slowest_run_seconds = 0.0;
  std::string description;
};

std::optional<AssistRuns> assist_runs() {
  static std::optional<AssistRuns> cache;
  static bool attempted = false;
  if (attempted) return cache;
  attempted = true;
  const char* env = std::getenv("EKLN_ASSIST_PATH");
  if (env == nullptr || *env == '\0' || !std::filesystem::is_regular_file(env)) return std::nullopt;

  ParseOptions opt;
  opt.format = LogFormat::assist_csv;
  opt.columns = ColumnMapping::defaults(LogFormat::assist_csv);
  const Dataset ds = build_dataset(parse_log_file(env, opt).records);
  AssistRuns out;
  out.description = std::to_string(ds.num_students) + " students, " + std::to_string(ds.num_exercises) +
                    " exercises, " + std::to_string(ds.logs.size()) + " logs";
  const std::vector<std::pair<std::string, ModelKind>> kinds{{"Graph-EKLN", ModelKind::graph_ekln},
                                                             {"MF", ModelKind::mf},
                                                             {"MF-TEM", ModelKind::mf_tem},
                                                             {"R-GCN", ModelKind::rgcn},
                                                             {"Student Average", ModelKind::student_average}};
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  for (const auto seed : seeds) {
    const Split split = split_dataset(ds, 0.2, seed);
    for (const auto& [name, kind] : kinds) {
      RunSpec spec;
      spec.kind = kind;
      spec.model.dim = 32;
      spec.model.layers = 2;
      spec.train.seed = seed;
      const auto t0 = Clock::now();
      const auto outcome = run_experiment(ds, split, spec);
      out.slowest_run_seconds = std::max(out.slowest_run_seconds, seconds_since(t0));
      out.mean_auc[name] += outcome.report.auc / static_cast<double>(seeds.size());
      if (kind == ModelKind::student_average) {
        out.mean_student_avg_accuracy += outcome.report.accuracy / static_cast<double>(seeds.size());
      }
      std::cerr << "  seed " << seed << " " << name << ": auc " << outcome.report.auc << "\n";
    }
  }
  cache = out;
  return cache;
}

Result not_run() {
  return {Outcome::not_run,
          "ASSIST 2009-2010 skill-builder log not available; set EKLN_ASSIST_PATH to the CSV to run this criterion"};
}

Result assist_vs_baselines() {
  const auto runs = assist_runs();
  if (!runs) return not_run();
  const double g = runs->mean_auc.at("Graph-EKLN"), mf = runs->mean_auc.at("MF"), sa = runs->mean_auc.at("Student Average");
  return verdict(g - mf >= 0.005 && g - sa >= 0.10 && runs->slowest_run_seconds <= 1800.0,
                 runs->description + "; mean AUC over seeds 1-3: Graph-EKLN " + num(g, 4) + ", MF " + num(mf, 4) +
                     ", Student Average " + num(sa, 4) + "; slowest run " + num(runs->slowest_run_seconds, 4) + " s");
}

Result assist_ablation_order() {
  const auto runs = assist_runs();
  if (!runs) return not_run();
  const double g = runs->mean_auc.at("Graph-EKLN");
  const double best_other = std::max(runs->mean_auc.at("MF-TEM"), runs->mean_auc.at("R-GCN"));
  return verdict(g >= best_other - 0.003, "mean AUC Graph-EKLN " + num(g, 4) + ", MF-TEM " +
                                              num(runs->mean_auc.at("MF-TEM"), 4) + ", R-GCN " +
                                              num(runs->mean_auc.at("R-GCN"), 4));
}

Result assist_student_average() {
  const auto runs = assist_runs();
  if (!runs) return not_run();
  const double acc = runs->mean_student_avg_accuracy;
  return verdict(std::abs(acc - 0.6942) <= 0.03, "mean accuracy " + num(acc, 4) + " vs reference 0.6942 (+-0.03)");
}

Result exact_reproduction_note() {
  return {Outcome::info,
          "exact reproduction of the reference Graph-EKLN numbers (0.7782/0.3938/0.8298) is not a gate; "
          "split, epochs and batch size are unspecified"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Result()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"propagation oracle", propagation_oracle},
      {"AUC oracle", auc_oracle},
      {"ablation reduction oracles", ablation_oracles},
      {"determinism", determinism},
      {"toy overfit", toy_overfit},
      {"ASSIST: Graph-EKLN vs MF and Student Average", assist_vs_baselines},
      {"ASSIST: ablation ordering", assist_ablation_order},
      {"ASSIST: Student Average accuracy", assist_student_average},
      {"exact reproduction", exact_reproduction_note},
  };
  std::set<std::size_t> selected;
  for (int i = 1; i < argc; ++i) {
    const int c = std::atoi(argv[i]);
    if (c < 1 || c > static_cast<int>(criteria.size())) {
      std::cerr << "usage: acceptance [1-" << criteria.size() << " ...]\n";
      return 2;
    }
    selected.insert(static_cast<std::size_t>(c));
  }
  if (selected.empty()) {
    for (std::size_t c = 1; c <= criteria.size(); ++c) selected.insert(c);
  }

  bool failed = false, skipped = false;
  for (const auto c : selected) {
    const auto& [name, check] = criteria[c - 1];
    Result r;
    try {
      r = check();
    } catch (const std::exception& e) {
      r = {Outcome::fail, std::string("threw: ") + e.what()};
    }
    const char* tag = r.outcome == Outcome::pass ? "PASS" : r.outcome == Outcome::fail ? "FAIL" : r.outcome == Outcome::not_run ? "NOT RUN" : "INFO";
    std::cout << "[" << tag << "] " << c << ". " << name << ": " << r.detail << std::endl;
    failed = failed || r.outcome == Outcome::fail;
    skipped = skipped || r.outcome == Outcome::not_run;
  }
  if (failed) return 1;
  return skipped ? 77 : 0;
}
