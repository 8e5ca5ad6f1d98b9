#pragma once

#include "gekln/segments.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gekln {

// One parsed row of a raw interaction log, before indexing.
struct RawLogRecord {
  std::string student_key;
  std::string exercise_key;
  std::vector<std::string> concept_keys;
  int correct = 0;
  std::optional<std::int64_t> order_hint;

  bool operator==(const RawLogRecord&) const = default;
};

enum class LogFormat { generic_csv, assist_csv, kdd_tsv };

std::string to_string(LogFormat format);
LogFormat log_format_from_string(const std::string& name);

// Where each field lives in a delimited export. Multiple exercise columns are
// joined into one key (KDD identifies an exercise by problem and step).
struct ColumnMapping {
  std::string student;
  std::vector<std::string> exercise;
  std::string concepts;
  std::string correct;
  std::string order;  // empty: no order column
  char delimiter = ',';
  std::string concept_separator = ";";
  std::string exercise_joiner = "::";

  static ColumnMapping defaults(LogFormat format);
};

struct ParseOptions {
  LogFormat format = LogFormat::generic_csv;
  ColumnMapping columns = ColumnMapping::defaults(LogFormat::generic_csv);
  // Scores in [0, 1] map to 1 iff >= threshold; values outside [0, 1] are
  // out of domain and the row is skipped.
  double score_threshold = 0.5;
};

struct ParseResult {
  std::vector<RawLogRecord> records;
  std::size_t skipped = 0;
};

ParseResult parse_log_stream(std::istream& in, const ParseOptions& options);
ParseResult parse_log_file(const std::filesystem::path& path, const ParseOptions& options);

// Replaces each record's concepts with one synthetic key: the sorted, '|'-joined
// union of all concepts seen on that exercise. Idempotent.
std::vector<RawLogRecord> merge_concepts_per_exercise(std::span<const RawLogRecord> records);

struct InteractionLog {
  std::size_t student = 0;
  std::size_t exercise = 0;
  int score = 0;

  bool operator==(const InteractionLog&) const = default;
};

// Sparse exercise -> concept relation, one sorted duplicate-free row per exercise.
struct QMatrix {
  SegmentIndex rows;
  std::size_t num_concepts = 0;

  std::size_t num_exercises() const noexcept { return rows.num_segments(); }
  std::span<const std::size_t> concepts(std::size_t exercise) const { return rows.segment(exercise); }
  bool operator==(const QMatrix&) const = default;
};

struct Dataset {
  std::size_t num_students = 0;
  std::size_t num_exercises = 0;
  std::size_t num_concepts = 0;
  std::vector<InteractionLog> logs;
  QMatrix q_matrix;
  std::vector<std::string> student_keys;
  std::vector<std::string> exercise_keys;
  std::vector<std::string> concept_keys;

  double density() const;
  bool operator==(const Dataset&) const = default;
};

// Drops records of exercises that never carry a concept, then assigns dense
// indices in first-appearance order. Rows sharing (order_hint, student,
// exercise) are one attempt split over several concept rows and collapse into
// a single log; other repeated (student, exercise) pairs stay separate logs.
Dataset build_dataset(std::span<const RawLogRecord> records);

struct Split {
  std::vector<InteractionLog> train;
  std::vector<InteractionLog> test;
  std::uint64_t seed = 0;
  double test_ratio = 0.0;

  bool operator==(const Split&) const = default;
};

// Seeded uniform shuffle; the leading (1 - ratio) share of logs trains.
Split split_dataset(const Dataset& ds, double test_ratio, std::uint64_t seed);

std::uint64_t hash_file(const std::filesystem::path& path);

void save_dataset_cache(const std::filesystem::path& path, const Dataset& ds, const Split& split);
std::pair<Dataset, Split> load_dataset_cache(const std::filesystem::path& path);

}  // namespace gekln
