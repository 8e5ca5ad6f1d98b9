#pragma once

#include "gekln/error.hpp"
#include "gekln/tensor.hpp"

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>
#include <vector>

namespace gekln::io {

// Little helpers for the cache and checkpoint payloads. Values are written
// in host byte order; files are not meant to move between architectures.
class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  void put(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void put_string(const std::string& s) {
    put<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  template <typename T>
  void put_vector(const std::vector<T>& v) {
    put<std::uint64_t>(v.size());
    out_.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(T)));
  }
  void put_matrix(const Matrix& m) {
    put<std::int64_t>(m.rows());
    put<std::int64_t>(m.cols());
    out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <typename T>
    requires std::is_arithmetic_v<T>
  T get() {
    T v{};
    read(&v, sizeof(T));
    return v;
  }
  std::string get_string() {
    std::string s(checked_size(get<std::uint64_t>()), '\0');
    read(s.data(), s.size());
    return s;
  }
  template <typename T>
  std::vector<T> get_vector() {
    std::vector<T> v(checked_size(get<std::uint64_t>()));
    read(v.data(), v.size() * sizeof(T));
    return v;
  }
  Matrix get_matrix() {
    const auto rows = get<std::int64_t>();
    const auto cols = get<std::int64_t>();
    if (rows < 0 || cols < 0) throw Error("corrupt matrix header");
    Matrix m(rows, cols);
    read(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    return m;
  }

 private:
  static std::size_t checked_size(std::uint64_t n) {
    if (n > (std::uint64_t{1} << 40)) throw Error("corrupt length field");
    return static_cast<std::size_t>(n);
  }
  void read(void* dst, std::size_t n) {
    in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw Error("truncated binary payload");
  }

  std::istream& in_;
};

}  // namespace gekln::io
