#include "dislat/csv.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dislat {

std::string format_double(double value) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

CsvWriter::CsvWriter(std::initializer_list<std::string_view> columns) : columns_(columns.size()) {
  bool first = true;
  for (auto c : columns) {
    if (!first) text_ += ',';
    text_ += c;
    first = false;
  }
  text_ += '\n';
}

CsvWriter& CsvWriter::row(std::initializer_list<double> values) {
  if (values.size() != columns_) throw std::invalid_argument("CsvWriter: row width does not match the header");
  bool first = true;
  for (double v : values) {
    if (!first) text_ += ',';
    text_ += format_double(v);
    first = false;
  }
  text_ += '\n';
  ++rows_;
  return *this;
}

std::uint64_t CsvWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text_.data(), static_cast<std::streamsize>(text_.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
  return fnv1a64(text_);
}

}  // namespace dislat
