#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace ptk {

/// 64-bit FNV-1a, used for config and checkpoint fingerprints in run manifests.
class Fnv1a {
 public:
  void update(std::span<const std::byte> bytes) noexcept;
  void update(std::string_view text) noexcept;

  template <typename T>
  void update_pod(const T& value) noexcept {
    update(std::as_bytes(std::span<const T, 1>(&value, 1)));
  }

  std::uint64_t digest() const noexcept { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::string fnv1a_hex(std::string_view text);

}  // namespace ptk
