#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace codesign::cli {

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::string_view bytes);

/// Twelve significant digits, as used in every CSV cell.
std::string csv_number(double v);

/// Collects the files a run writes so a failed run can take them back.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path dir);

  const std::filesystem::path& path() const { return dir_; }
  const std::vector<std::string>& files() const { return files_; }

  void write_text(const std::string& name, const std::string& content);
  void write_json(const std::string& name, const nlohmann::json& j);

  /// Removes everything written so far, and the directory if this run made it.
  void rollback() noexcept;

 private:
  void ensure_dir();

  std::filesystem::path dir_;
  std::vector<std::string> files_;
  bool created_ = false;
};

/// Builds a CSV document row by row.
class CsvWriter {
 public:
  explicit CsvWriter(std::initializer_list<std::string_view> header);

  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(std::uint64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  CsvWriter& cell(std::string_view text);
  void end_row();

  const std::string& str() const { return out_; }

 private:
  void sep();

  std::string out_;
  bool row_started_ = false;
};

}  // namespace codesign::cli
