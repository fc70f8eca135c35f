#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pu::io {

// CSV with '.' decimal separator, LF line endings, one header row.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    void row(const std::vector<std::string>& cells);
    const std::string& str() const { return buf_; }
    void write(const std::string& path) const;

private:
    std::string buf_;
    std::size_t width_;
};

// Round-trip decimal rendering of a double ("%.17g" trimmed).
std::string fmt_double(double v);

// Binary PGM (P5), maxval 255, row 0 at the top.
void write_pgm(const std::string& path, const std::vector<std::uint8_t>& pixels,
               int width, int height);

void write_text(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace pu::io
