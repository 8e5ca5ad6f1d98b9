#pragma once

#include "gekln/data_ingest.hpp"

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <vector>

namespace gekln {

// Parameters of a small generative student model: per-student ability plus
// per-concept proficiency against per-exercise difficulty, squashed through
// a logistic link. Used for demos, benchmarks and self-consistency tests.
struct SyntheticSpec {
  std::size_t students = 200;
  std::size_t exercises = 400;
  std::size_t concepts = 20;
  std::size_t logs_per_student = 40;
  std::size_t max_concepts_per_exercise = 2;
  double ability_scale = 1.0;
  double skill_scale = 1.0;
  double difficulty_scale = 1.0;
  std::uint64_t seed = 7;
};

std::vector<RawLogRecord> synthetic_records(const SyntheticSpec& spec);

// Writes records in the generic-csv layout (header student,exercise,concepts,correct).
void write_generic_csv(std::ostream& out, std::span<const RawLogRecord> records);

}  // namespace gekln
