#include "gapasym/cache.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace gapasym {

Fnv1a& Fnv1a::bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h_ ^= p[i];
    h_ *= 1099511628211ull;
  }
  return *this;
}

Fnv1a& Fnv1a::str(const std::string& s) {
  i64(static_cast<std::int64_t>(s.size()));
  return bytes(s.data(), s.size());
}

Fnv1a& Fnv1a::f64(double v) {
  // normalize -0.0 so equal values hash equally
  if (v == 0.0) v = 0.0;
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof(bits));
  return bytes(&bits, sizeof(bits));
}

Fnv1a& Fnv1a::i64(std::int64_t v) { return bytes(&v, sizeof(v)); }

std::string Fnv1a::hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h_));
  return buf;
}

std::optional<std::string> FileCache::load(const std::string& key) const {
  if (!enabled()) return std::nullopt;
  return read_file(dir_ + "/" + key);
}

void FileCache::store(const std::string& key, const std::string& payload) const {
  if (!enabled()) return;
  std::filesystem::create_directories(dir_);
  write_file(dir_ + "/" + key, payload);
}

void write_file(const std::string& path, const std::string& payload) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  }
  std::filesystem::rename(tmp, path);
}

std::optional<std::string> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gapasym
