// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <type_traits>
#include <vector>

namespace rdsw {

/// Round-trip text for a double: 17 significant digits, "inf" / "-inf" / "nan".
std::string format_real(double v);

/// In-memory CSV table; cells are written verbatim (no quoting needed for the
/// numeric and identifier content produced here).
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  template <typename... Cells>
  void add(const Cells&... cells) {
    std::vector<std::string> row;
    row.reserve(sizeof...(cells));
    (row.push_back(cell(cells)), ...);
    add_row(std::move(row));
  }
  void add_row(std::vector<std::string> row);

  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  template <typename T>
  static std::string cell(const T& v) {
    if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_floating_point_v<T>) {
      return format_real(static_cast<double>(v));
    } else if constexpr (std::is_integral_v<T>) {
      return std::to_string(v);
    } else {
      return std::string(v);
    }
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// 64-bit FNV-1a, used for compact output digests.
std::uint64_t fnv1a64(const std::string& bytes) noexcept;
std::string hex64(std::uint64_t v);

}  // namespace rdsw
