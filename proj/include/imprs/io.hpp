#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace imprs {

/// Shortest decimal text that parses back to exactly the same double.
std::string format_double(double value);

/// Strict numeric parsing; throws ConfigError mentioning `what` on failure.
double parse_double(std::string_view text, const std::string& what);
int parse_int(std::string_view text, const std::string& what);

/// Minimal CSV reader (no quoting); blank lines are skipped, fields trimmed.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

/// Streams rows of a CSV file.
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}
    CsvWriter& header(std::initializer_list<std::string_view> names);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::string_view v);
    void end_row();

private:
    void sep();
    std::ostream& out_;
    bool first_ = true;
};

/// Writes text to a file, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace imprs
