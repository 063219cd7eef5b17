#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>

namespace srcsel {

// Incremental 64-bit FNV-1a. Used for vocabulary fingerprints and cache keys.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= p[i];
      state_ *= 0x100000001b3ULL;
    }
    return *this;
  }

  Fnv1a& str(std::string_view s) {
    bytes(s.data(), s.size());
    // length terminator keeps ("ab","c") distinct from ("a","bc")
    return value(static_cast<std::uint64_t>(s.size()));
  }

  template <typename T>
    requires std::is_arithmetic_v<T>
  Fnv1a& value(T v) {
    return bytes(&v, sizeof(v));
  }

  std::uint64_t digest() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace srcsel
