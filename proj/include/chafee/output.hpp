#pragma once

// CSV tables and the run manifest. Numbers are written with %.17g in the C
// locale so reruns are byte-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace chafee {

std::string format_number(double v);

class CsvTable {
public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& row(std::vector<std::string> cells);
  const std::vector<std::string>& header() const noexcept { return header_; }
  std::size_t rows() const noexcept { return rows_.size(); }
  std::string str() const;

private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// Builds a row from mixed cells: numbers via format_number, strings verbatim.
struct Cell {
  std::string text;
  Cell(double v) : text(format_number(v)) {}
  Cell(int v) : text(std::to_string(v)) {}
  Cell(long v) : text(std::to_string(v)) {}
  Cell(long long v) : text(std::to_string(v)) {}
  Cell(unsigned long v) : text(std::to_string(v)) {}
  Cell(unsigned long long v) : text(std::to_string(v)) {}
  Cell(unsigned v) : text(std::to_string(v)) {}
  Cell(bool v) : text(v ? "1" : "0") {}
  Cell(const char* s) : text(s) {}
  Cell(std::string s) : text(std::move(s)) {}
};
std::vector<std::string> cells(std::initializer_list<Cell> xs);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Throws Io naming the path on failure.
void write_text(const std::filesystem::path& path, const std::string& text);

struct ManifestEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string version;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> stream_indices;
  std::string started;
  std::string finished;
  int exit_status = 0;
  std::vector<std::string> member_failures;
  std::vector<ManifestEntry> files;

  std::string to_json() const;
};

/// Writes tables under `dir` and keeps the manifest's file list in step.
class OutputSink {
public:
  explicit OutputSink(std::filesystem::path dir);

  void write(const std::string& name, const CsvTable& table);
  void write(const std::string& name, const std::string& text);
  const std::vector<ManifestEntry>& files() const noexcept { return files_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

private:
  std::filesystem::path dir_;
  std::vector<ManifestEntry> files_;
};

std::string utc_timestamp();

inline constexpr const char* kVersion = "chafee 1.0.0";

}  // namespace chafee
