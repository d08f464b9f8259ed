#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dislab {

// Shortest round-trippable decimal form of a double; output is locale-free.
std::string format_double(double v);

// CSV with '#'-prefixed metadata lines before the header row.
class CsvWriter {
  public:
    void metadata(const std::string& key, const std::string& value);
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<std::string>& cells);
    void row_values(const std::vector<double>& values);

    const std::string& text() const { return text_; }
    void write(const std::string& path) const;

  private:
    std::string text_;
    std::size_t n_columns_ = 0;
};

std::uint64_t fnv1a_hash(const std::string& text);
std::string hash_hex(std::uint64_t h);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace dislab
