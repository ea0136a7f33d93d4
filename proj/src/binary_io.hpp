#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>

#include "largegt/error.hpp"

namespace largegt::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are little-endian; big-endian hosts need byte swapping");

using Magic = std::array<char, 4>;

inline Magic magic_of(std::string_view s) { return {s[0], s[1], s[2], s[3]}; }

inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open for writing: " + path.string());
  return out;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path.string());
  return in;
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
void write_span(std::ostream& out, std::span<const T> v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size_bytes()));
}

template <typename T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(T)))
    throw FormatError(std::string("truncated file while reading ") + what);
  return v;
}

template <typename T>
void read_span(std::istream& in, std::span<T> v, const char* what) {
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  if (in.gcount() != static_cast<std::streamsize>(v.size_bytes()))
    throw FormatError(std::string("truncated file while reading ") + what);
}

inline void expect_magic(std::istream& in, std::string_view expected,
                         const std::filesystem::path& path) {
  Magic m{};
  in.read(m.data(), 4);
  if (in.gcount() != 4 || m != magic_of(expected))
    throw FormatError("bad magic in " + path.string() + " (expected " +
                      std::string(expected) + ")");
}

inline bool has_magic(const std::filesystem::path& path, std::string_view expected) {
  std::ifstream in(path, std::ios::binary);
  Magic m{};
  in.read(m.data(), 4);
  return in.gcount() == 4 && m == magic_of(expected);
}

inline void expect_version(std::uint32_t got, std::uint32_t want,
                           const std::filesystem::path& path) {
  if (got != want)
    throw FormatError("unsupported version " + std::to_string(got) + " in " +
                      path.string() + " (expected " + std::to_string(want) + ")");
}

inline void expect_eof(std::istream& in, const std::filesystem::path& path) {
  if (in.peek() != std::char_traits<char>::eof())
    throw FormatError("trailing bytes in " + path.string());
}

}  // namespace largegt::io
