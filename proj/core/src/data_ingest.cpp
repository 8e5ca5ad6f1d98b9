#include "gekln/data_ingest.hpp"

#include "gekln/binary_io.hpp"
#include "gekln/error.hpp"
#include "gekln/random.hpp"
#include "gekln/tensor.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace gekln {

std::string to_string(LogFormat format) {
  switch (format) {
    case LogFormat::assist_csv:
      return "assist-csv";
    case LogFormat::kdd_tsv:
      return "kdd-tsv";
    case LogFormat::generic_csv:
      break;
  }
  return "generic-csv";
}

LogFormat log_format_from_string(const std::string& name) {
  if (name == "generic-csv") return LogFormat::generic_csv;
  if (name == "assist-csv") return LogFormat::assist_csv;
  if (name == "kdd-tsv") return LogFormat::kdd_tsv;
  throw ConfigError("unknown log format '" + name + "' (expected generic-csv, assist-csv or kdd-tsv)");
}

ColumnMapping ColumnMapping::defaults(LogFormat format) {
  ColumnMapping m;
  switch (format) {
    case LogFormat::generic_csv:
      m.student = "student";
      m.exercise = {"exercise"};
      m.concepts = "concepts";
      m.correct = "correct";
      break;
    case LogFormat::assist_csv:
      // ASSISTments 2009-2010 skill-builder export
      m.student = "user_id";
      m.exercise = {"problem_id"};
      m.concepts = "skill_id";
      m.correct = "correct";
      m.order = "order_id";
      m.concept_separator = "_";
      break;
    case LogFormat::kdd_tsv:
      // KDD Cup 2010 Algebra 2005-2006 export
      m.student = "Anon Student Id";
      m.exercise = {"Problem Name", "Step Name"};
      m.concepts = "KC(Default)";
      m.correct = "Correct First Attempt";
      m.order = "Row";
      m.delimiter = '\t';
      m.concept_separator = "~~";
      break;
  }
  return m;
}

namespace {

// Splits one delimited line; double quotes group fields and "" escapes a quote.
std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_keys(const std::string& field, const std::string& sep) {
  std::vector<std::string> out;
  if (sep.empty()) {
    if (auto t = trim(field); !t.empty()) out.push_back(std::move(t));
    return out;
  }
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = field.find(sep, start);
    auto key = trim(field.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (!key.empty()) out.push_back(std::move(key));
    if (pos == std::string::npos) break;
    start = pos + sep.size();
  }
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw FormatError("header has no column '" + name + "'", 1);
  return static_cast<std::size_t>(it - header.begin());
}

}  // namespace

ParseResult parse_log_stream(std::istream& in, const ParseOptions& options) {
  const ColumnMapping& cols = options.columns;
  if (cols.exercise.empty()) throw ConfigError("column mapping needs at least one exercise column");

  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw FormatError("empty file, expected a header row", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  // UTF-8 byte-order mark
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);

  std::vector<std::string> header = split_fields(line, cols.delimiter);
  for (auto& h : header) h = trim(h);
  if (options.format == LogFormat::generic_csv) {
    const std::vector<std::string> expected{"student", "exercise", "concepts", "correct"};
    if (header != expected) throw FormatError("header mismatch, expected 'student,exercise,concepts,correct'", 1);
  }

  const std::size_t i_student = column_index(header, cols.student);
  std::vector<std::size_t> i_exercise;
  for (const auto& name : cols.exercise) i_exercise.push_back(column_index(header, name));
  const std::size_t i_concepts = column_index(header, cols.concepts);
  const std::size_t i_correct = column_index(header, cols.correct);
  const std::optional<std::size_t> i_order =
      cols.order.empty() ? std::nullopt : std::optional<std::size_t>(column_index(header, cols.order));

  ParseResult result;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_fields(line, cols.delimiter);
    const auto field = [&](std::size_t i) -> std::optional<std::string> {
      if (i >= fields.size()) return std::nullopt;
      return trim(fields[i]);
    };

    RawLogRecord rec;
    const auto student = field(i_student);
    const auto score = field(i_correct);
    const auto concepts = field(i_concepts);
    bool ok = student && !student->empty() && score && concepts;
    for (std::size_t k = 0; ok && k < i_exercise.size(); ++k) {
      const auto part = field(i_exercise[k]);
      if (!part || part->empty()) {
        ok = false;
        break;
      }
      if (k > 0) rec.exercise_key += cols.exercise_joiner;
      rec.exercise_key += *part;
    }
    const auto value = ok ? parse_real(*score) : std::nullopt;
    if (!value || *value < 0.0 || *value > 1.0) {
      ++result.skipped;
      continue;
    }
    rec.student_key = *student;
    rec.concept_keys = split_keys(*concepts, cols.concept_separator);
    rec.correct = *value >= options.score_threshold ? 1 : 0;
    if (i_order) {
      if (const auto o = field(*i_order); o && !o->empty()) {
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(o->data(), o->data() + o->size(), v);
        if (ec == std::errc() && ptr == o->data() + o->size()) rec.order_hint = v;
      }
    }
    result.records.push_back(std::move(rec));
  }
  return result;
}

ParseResult parse_log_file(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!std::filesystem::is_regular_file(path) || !in) throw FileNotFound(path.string());
  return parse_log_stream(in, options);
}

std::vector<RawLogRecord> merge_concepts_per_exercise(std::span<const RawLogRecord> records) {
  std::unordered_map<std::string, std::set<std::string>> per_exercise;
  for (const auto& r : records) {
    auto& keys = per_exercise[r.exercise_key];
    keys.insert(r.concept_keys.begin(), r.concept_keys.end());
  }
  std::unordered_map<std::string, std::string> merged;
  for (const auto& [exercise, keys] : per_exercise) {
    std::string joined;
    for (const auto& k : keys) {
      if (!joined.empty()) joined += '|';
      joined += k;
    }
    merged.emplace(exercise, std::move(joined));
  }
  std::vector<RawLogRecord> out(records.begin(), records.end());
  for (auto& r : out) {
    const std::string& key = merged.at(r.exercise_key);
    r.concept_keys.clear();
    if (!key.empty()) r.concept_keys.push_back(key);
  }
  return out;
}

double Dataset::density() const {
  if (num_students == 0 || num_exercises == 0) return 0.0;
  return static_cast<double>(logs.size()) / (static_cast<double>(num_students) * static_cast<double>(num_exercises));
}

namespace {

std::size_t intern(std::unordered_map<std::string, std::size_t>& ids, std::vector<std::string>& keys,
                   const std::string& key) {
  auto [it, inserted] = ids.try_emplace(key, keys.size());
  if (inserted) keys.push_back(key);
  return it->second;
}

}  // namespace

Dataset build_dataset(std::span<const RawLogRecord> records) {
  std::unordered_map<std::string, bool> has_concept;
  for (const auto& r : records) {
    bool& flag = has_concept[r.exercise_key];
    flag = flag || !r.concept_keys.empty();
  }

  Dataset ds;
  std::unordered_map<std::string, std::size_t> student_ids, exercise_ids, concept_ids;
  std::vector<std::set<std::size_t>> concept_sets;
  std::map<std::tuple<std::int64_t, std::size_t, std::size_t>, std::size_t> attempt_log;

  for (const auto& r : records) {
    if (!has_concept.at(r.exercise_key)) continue;
    const std::size_t s = intern(student_ids, ds.student_keys, r.student_key);
    const std::size_t p = intern(exercise_ids, ds.exercise_keys, r.exercise_key);
    if (p == concept_sets.size()) concept_sets.emplace_back();
    for (const auto& c : r.concept_keys) concept_sets[p].insert(intern(concept_ids, ds.concept_keys, c));

    if (r.order_hint) {
      const auto key = std::make_tuple(*r.order_hint, s, p);
      if (attempt_log.count(key) != 0) continue;
      attempt_log.emplace(key, ds.logs.size());
    }
    ds.logs.push_back({s, p, r.correct});
  }
  if (ds.logs.empty()) throw EmptyDataset();

  ds.num_students = ds.student_keys.size();
  ds.num_exercises = ds.exercise_keys.size();
  ds.num_concepts = ds.concept_keys.size();
  ds.q_matrix.num_concepts = ds.num_concepts;
  for (const auto& set : concept_sets) {
    const std::vector<std::size_t> row(set.begin(), set.end());
    ds.q_matrix.rows.push_segment(row);
  }
  return ds;
}

Split split_dataset(const Dataset& ds, double test_ratio, std::uint64_t seed) {
  if (!(test_ratio > 0.0 && test_ratio < 1.0)) throw ConfigError("test_ratio must lie in (0, 1)");
  std::vector<std::size_t> order(ds.logs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  portable_shuffle(std::span<std::size_t>(order), rng);

  const auto n = order.size();
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_ratio));
  Split split;
  split.seed = seed;
  split.test_ratio = test_ratio;
  split.train.reserve(n - n_test);
  split.test.reserve(n_test);
  for (std::size_t i = 0; i < n; ++i) {
    (i < n - n_test ? split.train : split.test).push_back(ds.logs[order[i]]);
  }
  return split;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    h = fnv1a(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), h);
  }
  return h;
}

namespace {

constexpr std::uint64_t kCacheMagic = 0x3153444e4c4b4547ULL;  // "GEKLNDS1"

void put_logs(io::Writer& w, const std::vector<InteractionLog>& logs) {
  w.put<std::uint64_t>(logs.size());
  for (const auto& l : logs) {
    w.put<std::uint64_t>(l.student);
    w.put<std::uint64_t>(l.exercise);
    w.put<std::int32_t>(l.score);
  }
}

std::vector<InteractionLog> get_logs(io::Reader& r) {
  std::vector<InteractionLog> logs(r.get<std::uint64_t>());
  for (auto& l : logs) {
    l.student = r.get<std::uint64_t>();
    l.exercise = r.get<std::uint64_t>();
    l.score = r.get<std::int32_t>();
  }
  return logs;
}

void put_strings(io::Writer& w, const std::vector<std::string>& v) {
  w.put<std::uint64_t>(v.size());
  for (const auto& s : v) w.put_string(s);
}

std::vector<std::string> get_strings(io::Reader& r) {
  std::vector<std::string> v(r.get<std::uint64_t>());
  for (auto& s : v) s = r.get_string();
  return v;
}

}  // namespace

void save_dataset_cache(const std::filesystem::path& path, const Dataset& ds, const Split& split) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset cache: " + path.string(), 2);
  io::Writer w(out);
  w.put(kCacheMagic);
  w.put<std::uint64_t>(ds.num_students);
  w.put<std::uint64_t>(ds.num_exercises);
  w.put<std::uint64_t>(ds.num_concepts);
  put_logs(w, ds.logs);
  w.put_vector(ds.q_matrix.rows.offsets);
  w.put_vector(ds.q_matrix.rows.members);
  w.put<std::uint64_t>(ds.q_matrix.num_concepts);
  put_strings(w, ds.student_keys);
  put_strings(w, ds.exercise_keys);
  put_strings(w, ds.concept_keys);
  put_logs(w, split.train);
  put_logs(w, split.test);
  w.put<std::uint64_t>(split.seed);
  w.put<double>(split.test_ratio);
}

std::pair<Dataset, Split> load_dataset_cache(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  io::Reader r(in);
  if (r.get<std::uint64_t>() != kCacheMagic) throw Error("not a dataset cache: " + path.string(), 2);
  Dataset ds;
  ds.num_students = r.get<std::uint64_t>();
  ds.num_exercises = r.get<std::uint64_t>();
  ds.num_concepts = r.get<std::uint64_t>();
  ds.logs = get_logs(r);
  ds.q_matrix.rows.offsets = r.get_vector<std::size_t>();
  ds.q_matrix.rows.members = r.get_vector<std::size_t>();
  ds.q_matrix.num_concepts = r.get<std::uint64_t>();
  ds.student_keys = get_strings(r);
  ds.exercise_keys = get_strings(r);
  ds.concept_keys = get_strings(r);
  Split split;
  split.train = get_logs(r);
  split.test = get_logs(r);
  split.seed = r.get<std::uint64_t>();
  split.test_ratio = r.get<double>();
  return {std::move(ds), std::move(split)};
}

}  // namespace gekln
