#include "stirsap/csv.hpp"

#include <cstdio>

#include "stirsap/errors.hpp"

namespace stirsap {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path, std::ios::binary), path_(path), columns_(header.size()) {
    if (!out_) throw IoError("cannot open for writing: " + path);
    write_row(header);
}

CsvWriter::~CsvWriter() { close(); }

std::string CsvWriter::format(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9e", v);
    return buf;
}

void CsvWriter::write_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format(v));
    write_row(cells);
}

void CsvWriter::write_row(const std::vector<std::string>& cells) {
    if (cells.size() != columns_)
        throw IoError("csv row width mismatch in " + path_);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
    if (!out_) throw IoError("write failed: " + path_);
}

void CsvWriter::close() {
    if (out_.is_open()) {
        out_.flush();
        out_.close();
    }
}

} // namespace stirsap
