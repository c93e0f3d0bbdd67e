#pragma once

// Little-endian primitives shared by the binary snapshot formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "kglp/error.hpp"

namespace kglp::detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  using U = std::make_unsigned_t<T>;
  U v = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>(v & 0xff);
    v = static_cast<U>(v >> 8);
  }
  out.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& in, Errc on_error) {
  static_assert(std::is_integral_v<T>);
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw Error(on_error, "unexpected end of binary stream");
  }
  using U = std::make_unsigned_t<T>;
  U v = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) v = static_cast<U>((v << 8) | buf[i]);
  return static_cast<T>(v);
}

inline void put_f32(std::ostream& out, float value) {
  put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(value));
}

inline float get_f32(std::istream& in, Errc on_error) {
  return std::bit_cast<float>(get_le<std::uint32_t>(in, on_error));
}

inline void put_string(std::ostream& out, const std::string& s) {
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in, Errc on_error) {
  const auto n = get_le<std::uint32_t>(in, on_error);
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw Error(on_error, "truncated string");
  return s;
}

}  // namespace kglp::detail
