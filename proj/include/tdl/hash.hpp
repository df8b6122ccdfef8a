#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

namespace tdl {

/// 64-bit FNV-1a. Used for preset/content fingerprints in file headers and
/// run manifests; not a cryptographic hash.
class Fnv1a64 {
 public:
  Fnv1a64& update(const void* data, std::size_t size);
  Fnv1a64& update(std::string_view s) { return update(s.data(), s.size()); }
  Fnv1a64& update(std::uint64_t v);
  Fnv1a64& update(double v);
  std::uint64_t digest() const { return state_; }
  std::string hex() const;

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ull;
};

/// Hash of a file's full contents. Throws IoError if unreadable.
std::uint64_t hash_file(const std::filesystem::path& path);

}  // namespace tdl
