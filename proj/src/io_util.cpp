#include "polarlens/io_util.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <sstream>

namespace polarlens {

BinWriter::BinWriter(const std::string& path) : out_(path, std::ios::binary), path_(path) {
  if (!out_) throw std::runtime_error("cannot open '" + path + "' for writing");
}

void BinWriter::u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }

void BinWriter::u32(std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out_.write(b, 4);
}

void BinWriter::u64(std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out_.write(b, 8);
}

void BinWriter::i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }

void BinWriter::f64(double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  u64(bits);
}

void BinWriter::str(std::string_view s) {
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinWriter::raw(const void* data, std::size_t n) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
}

void BinWriter::close() {
  out_.close();
  if (!out_) throw std::runtime_error("write to '" + path_ + "' failed");
}

BinReader::BinReader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw ValidationError("cannot open '" + path + "'");
}

void BinReader::fill(void* dst, std::size_t n) {
  in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n)
    throw std::runtime_error("truncated artifact '" + path_ + "'");
}

std::uint8_t BinReader::u8() {
  std::uint8_t v;
  fill(&v, 1);
  return v;
}

std::uint32_t BinReader::u32() {
  unsigned char b[4];
  fill(b, 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::uint64_t BinReader::u64() {
  unsigned char b[8];
  fill(b, 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}

std::int64_t BinReader::i64() { return static_cast<std::int64_t>(u64()); }

double BinReader::f64() {
  std::uint64_t bits = u64();
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

std::string BinReader::str() {
  std::uint32_t n = u32();
  std::string s(n, '\0');
  if (n) fill(s.data(), n);
  return s;
}

void BinReader::expect_magic(const char magic[4], const std::string& what) {
  char b[4];
  fill(b, 4);
  if (std::memcmp(b, magic, 4) != 0)
    throw ValidationError("'" + path_ + "' is not a " + what + " artifact");
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_fnv1a_hex(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "' for hashing");
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

bool file_exists(const std::string& path) {
  std::error_code ec;
  return std::filesystem::exists(path, ec);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  // %.17g always round-trips; prefer the shorter form when it does too
  std::snprintf(buf, sizeof buf, "%.15g", v);
  if (std::strtod(buf, nullptr) != v) std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split_on(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) { return split_on(line, ','); }

double parse_double_field(const std::string& path, std::size_t lineno, const std::string& s) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw ValidationError(path + ":" + std::to_string(lineno) + ": bad number '" + s + "'");
  return v;
}

std::uint64_t parse_count_field(const std::string& path, std::size_t lineno,
                                const std::string& s) {
  if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
    throw ValidationError(path + ":" + std::to_string(lineno) + ": bad count '" + s + "'");
  return std::strtoull(s.c_str(), nullptr, 10);
}

}  // namespace polarlens
