#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace stirsap {

// Minimal CSV writer: comma separator, \n line endings, mandatory header,
// %.9e numeric formatting.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    ~CsvWriter();

    void write_row(const std::vector<double>& values);
    void write_row(const std::vector<std::string>& cells);
    void close();

    static std::string format(double v);

private:
    std::ofstream out_;
    std::string path_;
    std::size_t columns_ = 0;
};

} // namespace stirsap
