#pragma once

// Minimal CSV emission with round-trip exact doubles (17 significant digits).

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

namespace dislat {

class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> columns);

  CsvWriter& row(std::initializer_list<double> values);
  std::size_t rows() const noexcept { return rows_; }
  const std::string& text() const noexcept { return text_; }

  /// Writes the table and returns its checksum. Throws std::runtime_error if the file cannot be written.
  std::uint64_t save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// printf("%.17g").
std::string format_double(double value);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace dislat
