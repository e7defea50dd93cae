#include "chafee/output.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <sstream>

#include "chafee/error.hpp"

namespace chafee {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> cells(std::initializer_list<Cell> xs) {
  std::vector<std::string> out;
  out.reserve(xs.size());
  for (const auto& c : xs) out.push_back(c.text);
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::row(std::vector<std::string> c) {
  if (c.size() != header_.size()) fail(ErrorKind::Dimension, "csv: row width does not match header");
  rows_.push_back(std::move(c));
  return *this;
}

std::string CsvTable::str() const {
  std::string s;
  const auto line = [&s](const std::vector<std::string>& cs) {
    for (std::size_t i = 0; i < cs.size(); ++i) {
      if (i) s += ',';
      s += cs[i];
    }
    s += '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return s;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::Io, "sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read '" + path.string() + "'");
  return sha256_hex(std::string(std::istreambuf_iterator<char>(in), {}));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open '" + path.string() + "' for writing");
  out << text;
  out.close();
  if (!out) fail(ErrorKind::Io, "write to '" + path.string() + "' failed");
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config_sha256"] = config_hash;
  j["version"] = version;
  j["master_seed"] = master_seed;
  j["stream_indices"] = stream_indices;
  j["started"] = started;
  j["finished"] = finished;
  j["exit_status"] = exit_status;
  j["member_failures"] = member_failures;
  auto& fs = j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files) fs.push_back({{"path", f.path}, {"sha256", f.sha256}});
  return j.dump(2) + "\n";
}

OutputSink::OutputSink(std::filesystem::path dir) : dir_(std::move(dir)) {}

void OutputSink::write(const std::string& name, const CsvTable& table) { write(name, table.str()); }

void OutputSink::write(const std::string& name, const std::string& text) {
  write_text(dir_ / name, text);
  files_.push_back({name, sha256_hex(text)});
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace chafee
