#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace edt {

// Fixed CSV dialect shared by every emitted artifact: comma separator, '.' decimal,
// one header row, LF endings, floats at 12 significant digits. Files are opened in
// binary mode so the bytes are identical across platforms.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  CsvWriter& cell(const std::string& v);
  CsvWriter& cell(long v);
  CsvWriter& cell(double v);  // %.12g
  void end_row();

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::ofstream out_;
  bool row_open_ = false;
};

std::string csv_format(double v);  // the dialect's float formatting

// Whole-file reader for round-trip checks: header plus data rows, cells as text.
std::vector<std::vector<std::string>> read_csv(const std::string& path);

}  // namespace edt
