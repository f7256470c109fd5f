#include "gapasym/csv.hpp"

#include <stdexcept>

#include "gapasym/cache.hpp"
#include "gapasym/kvdoc.hpp"

namespace gapasym {

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) out_ += ',';
    out_ += header[i];
  }
  out_ += '\n';
}

void CsvWriter::sep() {
  if (in_row_) out_ += ',';
  ++in_row_;
}

CsvWriter& CsvWriter::cell(double v) {
  sep();
  out_ += format_g17(v);
  return *this;
}

CsvWriter& CsvWriter::cell(int v) {
  sep();
  out_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::cell(const std::string& v) {
  sep();
  out_ += v;
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_)
    throw std::runtime_error("csv: row has " + std::to_string(in_row_) +
                             " cells, expected " + std::to_string(columns_));
  out_ += '\n';
  in_row_ = 0;
}

void CsvWriter::save(const std::string& path) const { write_file(path, out_); }

}  // namespace gapasym
