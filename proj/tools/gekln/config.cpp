#include "config.hpp"

#include "gekln/error.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace gekln::cli {

using nlohmann::json;

const std::vector<Setting>& settings() {
  static const std::vector<Setting> table{
      {"seed", 42, "seed for the split and for training (EKLN_SEED overrides the file)", "--seed"},
      {"data.path", "", "interaction log to read", "--data"},
      {"data.format", "generic-csv", "generic-csv, assist-csv or kdd-tsv", "--format"},
      {"data.columns.student", "", "student column (empty: format default)", ""},
      {"data.columns.exercise", "", "exercise column(s), comma separated (empty: format default)", ""},
      {"data.columns.concepts", "", "concept column (empty: format default)", ""},
      {"data.columns.correct", "", "score column (empty: format default)", ""},
      {"data.columns.order", "", "attempt id column (empty: format default)", ""},
      {"data.delimiter", "", "field delimiter, 'tab' for tabs (empty: format default)", ""},
      {"data.concept_separator", "", "separator inside the concept column (empty: format default)", ""},
      {"data.score_threshold", 0.5, "scores in [0,1] at or above this count as correct", ""},
      {"data.merge_concepts", "auto", "replace concepts by the per-exercise union key: auto (kdd-tsv only), true or false", ""},
      {"split.ratio", 0.2, "fraction of logs held out for testing", ""},
      {"model.kind", "graph-ekln", "graph-ekln, mf, mf-tem, rgcn, student-average or irt", "--model"},
      {"model.dim", 128, "embedding dimension D", ""},
      {"model.layers", 2, "propagation layers L", ""},
      {"model.alpha", 1.0, "weight of the knowledge-space score", "--alpha"},
      {"model.mlp_hidden", 0, "hidden width of the aggregation MLPs (0: D)", ""},
      {"model.leaky_slope", 0.01, "negative slope of the leaky ReLU", ""},
      {"model.share_layers", false, "share aggregation MLPs across layers", ""},
      {"model.share_sides", false, "share aggregation MLPs between students and exercises", ""},
      {"train.epochs", 300, "maximum training epochs", "--epochs"},
      {"train.batch_size", 0, "logs per batch (0: full batch)", ""},
      {"train.lr", 0.001, "learning rate", "--lr"},
      {"train.optimizer", "adaptive", "adaptive (Adam) or sgd", ""},
      {"train.eval_every", 1, "epochs between test evaluations", ""},
      {"train.early_stop_patience", 20, "epochs without AUC gain before stopping (0: off)", ""},
      {"irt.epochs", 200, "IRT training epochs", ""},
      {"irt.lr", 0.01, "IRT learning rate", ""},
      {"irt.two_parameter", false, "fit per-exercise discrimination", ""},
      {"eval.threshold", 0.5, "accuracy threshold on raw predictions", ""},
      {"eval.clamp_rmse", true, "clip predictions to [0,1] before RMSE", ""},
      {"sweep.alphas", json::array({0.0, 0.1, 1.0, 5.0, 10.0}), "alpha values of the sweep, comma separated", ""},
      {"output", "gekln-out", "output directory", "--out"},
      {"cache_dir", "", "dataset cache directory (empty: <output>/cache)", ""},
      {"jobs", 1, "concurrent runs for ablation and sweep", "--jobs"},
  };
  return table;
}

namespace {

const Setting* find_setting(const std::string& key) {
  for (const auto& s : settings()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      const std::string key = prefix.empty() ? k : prefix + "." + k;
      // a known key whose value is an object is a type error, reported by the caller
      if (v.is_object() && find_setting(key) == nullptr) {
        flatten(v, key, out);
      } else {
        out[key] = v;
      }
    }
  } else {
    out[prefix] = j;
  }
}

bool same_kind(const json& want, const json& got) {
  if (want.is_boolean()) return got.is_boolean();
  if (want.is_number_integer()) return got.is_number_integer() && got.get<std::int64_t>() >= 0;
  if (want.is_number()) return got.is_number();
  if (want.is_string()) return got.is_string();
  if (want.is_array()) return got.is_array() && std::all_of(got.begin(), got.end(), [](const json& x) { return x.is_number(); });
  return false;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& s : settings()) values_[s.key] = s.default_value;
}

void RunConfig::set(const std::string& key, json value) {
  const Setting* s = find_setting(key);
  if (s == nullptr) throw ConfigError("unknown config key '" + key + "'");
  if (key == "data.merge_concepts" && value.is_boolean()) value = value.get<bool>() ? "true" : "false";
  if (!same_kind(s->default_value, value)) {
    throw ConfigError("config key '" + key + "' expects a value like " + s->default_value.dump() + ", got " +
                      value.dump());
  }
  values_[key] = std::move(value);
  explicit_.insert(key);
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFound(path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path.string() + ": top level must be an object");
  std::map<std::string, json> flat;
  flatten(j, "", flat);
  for (auto& [k, v] : flat) set(k, std::move(v));
}

void RunConfig::apply_environment() {
  if (const char* env = std::getenv("EKLN_SEED"); env != nullptr && *env != '\0') {
    set_from_text("seed", env);
  }
}

void RunConfig::set_from_text(const std::string& key, const std::string& text) {
  const Setting* s = find_setting(key);
  if (s == nullptr) throw ConfigError("unknown config key '" + key + "'");
  const json& d = s->default_value;
  try {
    if (d.is_boolean()) {
      if (text == "true" || text == "1" || text == "on") return set(key, true);
      if (text == "false" || text == "0" || text == "off") return set(key, false);
      throw ConfigError("");
    }
    if (d.is_number_integer()) {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(text, &used);
      if (used != text.size() || text.front() == '-') throw ConfigError("");
      return set(key, static_cast<std::uint64_t>(v));
    }
    if (d.is_number()) {
      std::size_t used = 0;
      const double v = std::stod(text, &used);
      if (used != text.size()) throw ConfigError("");
      return set(key, v);
    }
    if (d.is_array()) {
      json arr = json::array();
      for (const auto& item : split_list(text)) {
        std::size_t used = 0;
        arr.push_back(std::stod(item, &used));
        if (used != item.size()) throw ConfigError("");
      }
      return set(key, arr);
    }
  } catch (const std::logic_error&) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  } catch (const ConfigError&) {
    throw ConfigError("invalid value '" + text + "' for " + key);
  }
  set(key, text);
}

const json& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

bool RunConfig::merge_concepts() const {
  const std::string v = get("data.merge_concepts").get<std::string>();
  if (v == "auto") return log_format_from_string(get("data.format").get<std::string>()) == LogFormat::kdd_tsv;
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError("data.merge_concepts must be auto, true or false");
}

std::uint64_t RunConfig::seed() const { return get("seed").get<std::uint64_t>(); }

std::filesystem::path RunConfig::data_path() const {
  const std::string p = get("data.path").get<std::string>();
  if (p.empty()) throw ConfigError("no dataset given; set data.path (--data)");
  return p;
}

ParseOptions RunConfig::parse_options() const {
  ParseOptions opt;
  opt.format = log_format_from_string(get("data.format").get<std::string>());
  opt.columns = ColumnMapping::defaults(opt.format);
  opt.score_threshold = get("data.score_threshold").get<double>();
  const auto text = [&](const char* key) { return get(key).get<std::string>(); };
  if (!text("data.columns.student").empty()) opt.columns.student = text("data.columns.student");
  if (!text("data.columns.exercise").empty()) opt.columns.exercise = split_list(text("data.columns.exercise"));
  if (!text("data.columns.concepts").empty()) opt.columns.concepts = text("data.columns.concepts");
  if (!text("data.columns.correct").empty()) opt.columns.correct = text("data.columns.correct");
  if (!text("data.columns.order").empty()) opt.columns.order = text("data.columns.order");
  if (const std::string d = text("data.delimiter"); !d.empty()) {
    if (d == "tab" || d == "\\t") {
      opt.columns.delimiter = '\t';
    } else if (d.size() == 1) {
      opt.columns.delimiter = d[0];
    } else {
      throw ConfigError("data.delimiter must be one character or 'tab'");
    }
  }
  if (!text("data.concept_separator").empty()) opt.columns.concept_separator = text("data.concept_separator");
  return opt;
}

RunSpec RunConfig::run_spec() const {
  RunSpec spec;
  spec.kind = model_kind_from_string(get("model.kind").get<std::string>());
  spec.model.dim = get("model.dim").get<std::size_t>();
  spec.model.layers = get("model.layers").get<std::size_t>();
  spec.model.alpha = get("model.alpha").get<double>();
  spec.model.mlp_hidden = get("model.mlp_hidden").get<std::size_t>();
  spec.model.leaky_slope = get("model.leaky_slope").get<double>();
  spec.model.share_layers = get("model.share_layers").get<bool>();
  spec.model.share_sides = get("model.share_sides").get<bool>();
  spec.model.validate();
  spec.train.epochs = get("train.epochs").get<std::size_t>();
  spec.train.batch_size = get("train.batch_size").get<std::size_t>();
  spec.train.lr = get("train.lr").get<double>();
  spec.train.seed = seed();
  spec.train.optimizer = optimizer_from_string(get("train.optimizer").get<std::string>());
  spec.train.eval_every = get("train.eval_every").get<std::size_t>();
  spec.train.early_stop_patience = get("train.early_stop_patience").get<std::size_t>();
  spec.train.validate();
  spec.irt.epochs = get("irt.epochs").get<std::size_t>();
  spec.irt.lr = get("irt.lr").get<double>();
  spec.irt.two_parameter = get("irt.two_parameter").get<bool>();
  spec.eval.threshold = get("eval.threshold").get<double>();
  spec.eval.clamp_rmse = get("eval.clamp_rmse").get<bool>();
  return spec;
}

std::vector<double> RunConfig::alphas() const {
  auto out = get("sweep.alphas").get<std::vector<double>>();
  if (out.empty()) throw ConfigError("sweep.alphas must not be empty");
  return out;
}

std::filesystem::path RunConfig::cache_dir() const {
  const std::string c = get("cache_dir").get<std::string>();
  return c.empty() ? output_dir() / "cache" : std::filesystem::path(c);
}

std::size_t RunConfig::jobs() const {
  const auto j = get("jobs").get<std::size_t>();
  if (j == 0) throw ConfigError("jobs must be at least 1");
  return j;
}

}  // namespace gekln::cli
