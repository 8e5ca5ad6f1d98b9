#include "gekln/synthetic.hpp"

#include "gekln/error.hpp"
#include "gekln/random.hpp"

#include <cmath>
#include <numbers>
#include <set>
#include <string>

namespace gekln {

namespace {

double normal(Rng& rng) {
  // Box-Muller on the portable uniform draw
  const double u1 = 1.0 - uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::vector<RawLogRecord> synthetic_records(const SyntheticSpec& spec) {
  if (spec.students == 0 || spec.exercises == 0 || spec.concepts == 0 || spec.max_concepts_per_exercise == 0) {
    throw ConfigError("synthetic spec needs non-zero sizes");
  }
  Rng rng(spec.seed);
  std::vector<double> ability(spec.students), difficulty(spec.exercises);
  std::vector<std::vector<double>> skill(spec.students, std::vector<double>(spec.concepts));
  for (std::size_t s = 0; s < spec.students; ++s) {
    ability[s] = spec.ability_scale * normal(rng);
    for (auto& v : skill[s]) v = spec.skill_scale * normal(rng);
  }
  std::vector<std::vector<std::size_t>> exercise_concepts(spec.exercises);
  for (std::size_t p = 0; p < spec.exercises; ++p) {
    difficulty[p] = spec.difficulty_scale * normal(rng);
    const std::size_t k = 1 + uniform_below(rng, spec.max_concepts_per_exercise);
    std::set<std::size_t> picked;
    while (picked.size() < std::min(k, spec.concepts)) picked.insert(uniform_below(rng, spec.concepts));
    exercise_concepts[p].assign(picked.begin(), picked.end());
  }

  std::vector<RawLogRecord> records;
  records.reserve(spec.students * spec.logs_per_student);
  for (std::size_t s = 0; s < spec.students; ++s) {
    for (std::size_t i = 0; i < spec.logs_per_student; ++i) {
      const std::size_t p = uniform_below(rng, spec.exercises);
      double mastery = 0.0;
      for (std::size_t k : exercise_concepts[p]) mastery += skill[s][k];
      mastery /= static_cast<double>(exercise_concepts[p].size());
      const double prob = 1.0 / (1.0 + std::exp(-(ability[s] + mastery - difficulty[p])));
      RawLogRecord rec;
      rec.student_key = "s" + std::to_string(s);
      rec.exercise_key = "e" + std::to_string(p);
      for (std::size_t k : exercise_concepts[p]) rec.concept_keys.push_back("c" + std::to_string(k));
      rec.correct = uniform_unit(rng) < prob ? 1 : 0;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

void write_generic_csv(std::ostream& out, std::span<const RawLogRecord> records) {
  out << "student,exercise,concepts,correct\n";
  for (const auto& r : records) {
    out << r.student_key << ',' << r.exercise_key << ',';
    for (std::size_t i = 0; i < r.concept_keys.size(); ++i) out << (i ? ";" : "") << r.concept_keys[i];
    out << ',' << r.correct << '\n';
  }
}

}  // namespace gekln
