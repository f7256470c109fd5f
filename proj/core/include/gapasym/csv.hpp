#pragma once

#include <string>
#include <vector>

namespace gapasym {

/// CSV accumulator with the project-wide numeric format: 17 significant
/// digits, '.' decimal separator, LF line endings. Identical inputs produce
/// identical bytes on any platform.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  CsvWriter& cell(double v);
  CsvWriter& cell(int v);
  CsvWriter& cell(const std::string& v);
  void end_row();

  const std::string& str() const { return out_; }
  void save(const std::string& path) const;

 private:
  void sep();
  std::string out_;
  std::size_t columns_;
  std::size_t in_row_ = 0;
};

}  // namespace gapasym
