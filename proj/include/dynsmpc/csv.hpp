#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace dynsmpc {

// Shortest round-trip decimal form, so repeated runs write identical bytes.
std::string format_number(double value);

// A CSV table built row by row; cells are written verbatim.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  void add_row(const std::vector<double>& values);

  const std::vector<std::string>& header() const { return header_; }
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

  // Throws IoError("cannot write <path>") on I/O failure.
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

// Column names prefix0..prefix{count-1}.
std::vector<std::string> indexed_columns(const std::string& prefix, int count);

std::uint64_t fnv1a_64(const std::string& bytes);
std::string hex64(std::uint64_t value);

// Library version including the git description at build time.
const char* version_string();

// Writes a flat JSON object of string entries, in order.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<std::pair<std::string, std::string>>& entries);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace dynsmpc
