#include "gekln/checkpoint.hpp"

#include "gekln/binary_io.hpp"
#include "gekln/error.hpp"

#include <fstream>

namespace gekln {

namespace {

constexpr const char* kMagicLine = "GEKLN-CKPT 1";

void put_matrices(io::Writer& w, const std::vector<Matrix>& ms) {
  w.put<std::uint64_t>(ms.size());
  for (const auto& m : ms) w.put_matrix(m);
}

std::vector<Matrix> get_matrices(io::Reader& r) {
  std::vector<Matrix> ms(r.get<std::uint64_t>());
  for (auto& m : ms) m = r.get_matrix();
  return ms;
}

std::ifstream open_checked(const std::filesystem::path& path, nlohmann::json& metadata) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FileNotFound(path.string());
  std::string line;
  if (!std::getline(in, line) || line != kMagicLine) throw IncompatibleCheckpoint("not a checkpoint: " + path.string());
  if (!std::getline(in, line)) throw IncompatibleCheckpoint("checkpoint metadata missing: " + path.string());
  try {
    metadata = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw IncompatibleCheckpoint(std::string("checkpoint metadata unreadable: ") + e.what());
  }
  return in;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint: " + path.string(), 2);
  out << kMagicLine << '\n' << ckpt.metadata.dump() << '\n';
  io::Writer w(out);
  w.put<std::uint64_t>(ckpt.params.size());
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    w.put_string(ckpt.params.name(i));
    w.put_matrix(ckpt.params.value(i));
  }
  const auto& s = ckpt.optimizer.settings;
  w.put_string(to_string(s.kind));
  w.put(s.lr);
  w.put(s.beta1);
  w.put(s.beta2);
  w.put(s.epsilon);
  w.put<std::uint64_t>(ckpt.optimizer.step);
  put_matrices(w, ckpt.optimizer.first_moment);
  put_matrices(w, ckpt.optimizer.second_moment);
  w.put<std::uint64_t>(ckpt.aux.size());
  for (const auto& [name, m] : ckpt.aux) {
    w.put_string(name);
    w.put_matrix(m);
  }
  w.put_string(ckpt.rng_state);
  if (!out) throw Error("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ckpt;
  std::ifstream in = open_checked(path, ckpt.metadata);
  io::Reader r(in);
  const auto n_params = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_params; ++i) {
    std::string name = r.get_string();
    ckpt.params.add(std::move(name), r.get_matrix());
  }
  auto& s = ckpt.optimizer.settings;
  s.kind = optimizer_from_string(r.get_string());
  s.lr = r.get<double>();
  s.beta1 = r.get<double>();
  s.beta2 = r.get<double>();
  s.epsilon = r.get<double>();
  ckpt.optimizer.step = r.get<std::uint64_t>();
  ckpt.optimizer.first_moment = get_matrices(r);
  ckpt.optimizer.second_moment = get_matrices(r);
  const auto n_aux = r.get<std::uint64_t>();
  for (std::uint64_t i = 0; i < n_aux; ++i) {
    std::string name = r.get_string();
    ckpt.aux.emplace_back(std::move(name), r.get_matrix());
  }
  ckpt.rng_state = r.get_string();
  return ckpt;
}

nlohmann::json read_checkpoint_metadata(const std::filesystem::path& path) {
  nlohmann::json metadata;
  open_checked(path, metadata);
  return metadata;
}

}  // namespace gekln
