#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>

namespace vidsum {

// 64-bit FNV-1a. Used for content addressing, mock keying and parameter digests;
// not a cryptographic hash.
class Fnv1a {
 public:
  static constexpr std::uint64_t offset_basis = 0xcbf29ce484222325ULL;
  static constexpr std::uint64_t prime = 0x100000001b3ULL;

  Fnv1a& update(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
      state_ ^= bytes[i];
      state_ *= prime;
    }
    return *this;
  }

  Fnv1a& update(std::string_view text) { return update(text.data(), text.size()); }

  // Little-endian encoding regardless of host order.
  Fnv1a& update(std::uint64_t value) {
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(value >> (8 * i));
    return update(buf, 8);
  }

  Fnv1a& update(double value) {
    std::uint64_t bits;
    std::memcpy(&bits, &value, sizeof bits);
    return update(bits);
  }

  Fnv1a& update(std::span<const double> values) {
    for (double v : values) update(v);
    return *this;
  }

  std::uint64_t digest() const noexcept { return state_; }

  std::string hex() const { return to_hex(state_); }

  static std::string to_hex(std::uint64_t value) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
      out[static_cast<std::size_t>(i)] = digits[value & 0xF];
      value >>= 4;
    }
    return out;
  }

 private:
  std::uint64_t state_ = offset_basis;
};

inline std::uint64_t fnv1a(std::string_view text) { return Fnv1a{}.update(text).digest(); }

// Mixes a base seed with a label so that each consumer gets an independent stream.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return Fnv1a{}.update(seed).update(label).digest();
}

}  // namespace vidsum
