#pragma once

// CSV output with round-trip precision, SHA-256 content hashes and a JSON run manifest.

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "roughwall/error.hpp"

namespace roughwall {

/// Formats a double with 17 significant digits ('.' decimal point regardless of locale).
inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// RFC-4180 style table: header row plus numeric or quoted text cells.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  CsvTable& row(const std::vector<double>& values) {
    require(values.size() == header_.size(), ErrorKind::precondition, "csv row width differs from header");
    std::vector<std::string> cells;
    for (double v : values) cells.push_back(format_number(v));
    rows_.push_back(std::move(cells));
    return *this;
  }

  CsvTable& row_text(std::vector<std::string> cells) {
    require(cells.size() == header_.size(), ErrorKind::precondition, "csv row width differs from header");
    rows_.push_back(std::move(cells));
    return *this;
  }

  std::string str() const {
    std::string out;
    auto line = [&](const std::vector<std::string>& cells) {
      for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += quote(cells[i]);
      }
      out += "\r\n";
    };
    line(header_);
    for (const auto& r : rows_) line(r);
    return out;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + '"';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    fail(ErrorKind::io, "sha256 digest failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

/// Collects the artifacts of one run and writes them with a manifest.json.
class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) fail(ErrorKind::io, "cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  const std::filesystem::path& dir() const { return dir_; }

  void write(const std::string& name, const std::string& content) {
    const auto path = dir_ / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    f << content;
    f.flush();
    if (!f) fail(ErrorKind::io, "write to " + path.string() + " failed");
    files_.push_back({{"file", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  }

  void write_csv(const std::string& name, const CsvTable& t) { write(name, t.str()); }
  void write_json(const std::string& name, const nlohmann::json& j) { write(name, j.dump(2) + "\n"); }

  /// Writes manifest.json: the given metadata plus the list of artifacts with their hashes.
  void finish(nlohmann::json meta) {
    meta["artifacts"] = files_;
    const std::string text = meta.dump(2) + "\n";
    const auto path = dir_ / "manifest.json";
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
    f << text;
    if (!f) fail(ErrorKind::io, "write to " + path.string() + " failed");
  }

  const nlohmann::json& artifacts() const { return files_; }

 private:
  std::filesystem::path dir_;
  nlohmann::json files_ = nlohmann::json::array();
};

}  // namespace roughwall
