#pragma once

#include <string>
#include <vector>

namespace mixflow {

// Shortest decimal string that parses back to exactly the same binary64
// value. Used for all numeric file output so reruns are byte-identical.
std::string format_double(double v);

// CSV table accumulated in memory and written in one shot, so a failed run
// leaves no partial file behind.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(const std::vector<std::string>& cells);
  void add_row(const std::vector<double>& cells);

  std::string str() const;

  // Throws IoError on any failure to create or write the file.
  void write(const std::string& path) const;

  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

// Whole-file helpers; both throw IoError on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

// Creates the directory (and parents) if needed; IoError on failure.
void ensure_directory(const std::string& path);

}  // namespace mixflow
