#pragma once
// Small IO helpers shared by the artifact readers/writers: little-endian
// binary primitives, file hashing for stage manifests, numeric formatting.

#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "polarlens/common.hpp"

namespace polarlens {

class BinWriter {
 public:
  explicit BinWriter(const std::string& path);
  void u8(std::uint8_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i64(std::int64_t v);
  void f64(double v);
  void str(std::string_view s);
  void raw(const void* data, std::size_t n);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
};

class BinReader {
 public:
  explicit BinReader(const std::string& path);
  std::uint8_t u8();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64();
  double f64();
  std::string str();
  void expect_magic(const char magic[4], const std::string& what);

 private:
  void fill(void* dst, std::size_t n);
  std::ifstream in_;
  std::string path_;
};

// FNV-1a 64 over the file bytes, as a 16-char hex string. Used for stage
// manifests, not for security.
std::string file_fnv1a_hex(const std::string& path);
std::string fnv1a_hex(std::string_view bytes);

bool file_exists(const std::string& path);
std::string read_text_file(const std::string& path);

// Shortest round-trip formatting for doubles so CSV artifacts re-read exactly.
std::string format_double(double v);

// Splits one CSV line on commas. No quoting: every field this pipeline emits
// or consumes is quote-free by construction (ids, domains, hashtags, numbers).
std::vector<std::string> split_csv_line(const std::string& line);
std::vector<std::string> split_on(const std::string& line, char sep);

// Numeric CSV fields with a line-numbered ValidationError on junk.
double parse_double_field(const std::string& path, std::size_t lineno, const std::string& s);
std::uint64_t parse_count_field(const std::string& path, std::size_t lineno, const std::string& s);

}  // namespace polarlens
