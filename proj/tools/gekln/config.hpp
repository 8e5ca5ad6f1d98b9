#pragma once

#include "gekln/data_ingest.hpp"
#include "gekln/experiments.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace gekln::cli {

struct Setting {
  std::string key;
  nlohmann::json default_value;
  std::string help;
  std::string alias;  // extra flag name, may be empty
};

// Every configurable key with its default. Keys double as flag names.
const std::vector<Setting>& settings();

// Flat key -> value map after layering defaults, file, environment and flags.
class RunConfig {
 public:
  RunConfig();

  // Nested objects and dotted keys are both accepted.
  void merge_file(const std::filesystem::path& path);
  void apply_environment();
  // Parses a flag value according to the type of the key's default.
  void set_from_text(const std::string& key, const std::string& text);

  const nlohmann::json& get(const std::string& key) const;
  // True once a file, the environment or a flag supplied the key.
  bool is_set(const std::string& key) const { return explicit_.count(key) != 0; }
  nlohmann::json to_json() const;

  std::uint64_t seed() const;
  ParseOptions parse_options() const;
  bool merge_concepts() const;
  std::filesystem::path data_path() const;
  double split_ratio() const { return get("split.ratio").get<double>(); }
  RunSpec run_spec() const;
  std::vector<double> alphas() const;
  std::filesystem::path output_dir() const { return get("output").get<std::string>(); }
  std::filesystem::path cache_dir() const;
  std::size_t jobs() const;

 private:
  void set(const std::string& key, nlohmann::json value);
  std::map<std::string, nlohmann::json> values_;
  std::set<std::string> explicit_;
};

}  // namespace gekln::cli
