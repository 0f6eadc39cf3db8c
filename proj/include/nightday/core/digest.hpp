#pragma once

#include <cstdint>
#include <cstdio>
#include <span>
#include <string>
#include <string_view>

namespace nightday {

class Fnv1a64 {
 public:
  void update(std::span<const unsigned char> bytes) noexcept {
    for (unsigned char b : bytes) {
      state_ ^= b;
      state_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) noexcept {
    update(std::span(reinterpret_cast<const unsigned char*>(s.data()), s.size()));
  }
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string digest_hex(std::string_view text) {
  Fnv1a64 h;
  h.update(text);
  return hex64(h.value());
}

}  // namespace nightday
