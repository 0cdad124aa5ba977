#include "output.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "codesign/error.hpp"

namespace codesign::cli {

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  // Avoid "-0" cells.
  if (buf[0] == '-' && std::string_view(buf) == "-0") return "0";
  return buf;
}

OutputDir::OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

void OutputDir::ensure_dir() {
  std::error_code ec;
  if (std::filesystem::is_directory(dir_, ec)) return;
  if (!std::filesystem::create_directories(dir_, ec) || ec)
    throw Error(ErrorKind::io, "cannot create output directory " + dir_.string());
  created_ = true;
}

void OutputDir::write_text(const std::string& name, const std::string& content) {
  ensure_dir();
  const auto p = dir_ / name;
  // Record before writing so a half-written file is also rolled back.
  files_.push_back(name);
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write " + p.string());
  out << content;
  if (!out) throw Error(ErrorKind::io, "error writing " + p.string());
}

void OutputDir::write_json(const std::string& name, const nlohmann::json& j) {
  write_text(name, j.dump(2) + "\n");
}

void OutputDir::rollback() noexcept {
  std::error_code ec;
  for (const auto& f : files_) std::filesystem::remove(dir_ / f, ec);
  files_.clear();
  if (created_ && std::filesystem::is_empty(dir_, ec)) std::filesystem::remove(dir_, ec);
}

CsvWriter::CsvWriter(std::initializer_list<std::string_view> header) {
  for (auto h : header) cell(h);
  end_row();
}

void CsvWriter::sep() {
  if (row_started_) out_ += ',';
  row_started_ = true;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ += csv_number(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::int64_t v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::uint64_t v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(std::string_view text) {
  sep();
  if (text.find_first_of(",\"\n") == std::string_view::npos) {
    out_ += text;
    return *this;
  }
  out_ += '"';
  for (char c : text) {
    if (c == '"') out_ += '"';
    out_ += c;
  }
  out_ += '"';
  return *this;
}

void CsvWriter::end_row() {
  out_ += '\n';
  row_started_ = false;
}

}  // namespace codesign::cli
