#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace gapasym {

/// Streaming FNV-1a (64-bit) used for operator/parameter content hashes.
class Fnv1a {
 public:
  Fnv1a& bytes(const void* data, std::size_t n);
  Fnv1a& str(const std::string& s);
  Fnv1a& f64(double v);
  Fnv1a& i64(std::int64_t v);
  std::uint64_t digest() const { return h_; }
  std::string hex() const;

 private:
  std::uint64_t h_ = 1469598103934665603ull;
};

/// Keyed text-blob cache backed by files under `dir` (one file per key).
/// Disabled when constructed with an empty directory.
class FileCache {
 public:
  explicit FileCache(std::string dir) : dir_(std::move(dir)) {}
  bool enabled() const { return !dir_.empty(); }
  std::optional<std::string> load(const std::string& key) const;
  void store(const std::string& key, const std::string& payload) const;

 private:
  std::string dir_;
};

/// Writes `payload` to `path` atomically-ish (temp file + rename), LF endings
/// preserved as given.
void write_file(const std::string& path, const std::string& payload);
std::optional<std::string> read_file(const std::string& path);

}  // namespace gapasym
