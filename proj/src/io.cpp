#include "imprs/io.hpp"

#include "imprs/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace imprs {
namespace {

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string format_double(double value)
{
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view text, const std::string& what)
{
    text = trim(text);
    if (text == "inf" || text == "+inf") return INFINITY;
    if (text == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
        throw ConfigError(what + ": cannot parse number '" + std::string(text) + "'");
    return v;
}

int parse_int(std::string_view text, const std::string& what)
{
    text = trim(text);
    int v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || text.empty())
        throw ConfigError(what + ": cannot parse integer '" + std::string(text) + "'");
    return v;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in)
{
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        std::vector<std::string> fields;
        std::string_view rest = line;
        for (;;) {
            const auto pos = rest.find(',');
            fields.emplace_back(trim(rest.substr(0, pos)));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

void CsvWriter::sep()
{
    if (!first_) out_ << ',';
    first_ = false;
}

CsvWriter& CsvWriter::header(std::initializer_list<std::string_view> names)
{
    for (auto n : names) cell(n);
    end_row();
    return *this;
}

CsvWriter& CsvWriter::cell(double v)
{
    sep();
    out_ << format_double(v);
    return *this;
}

CsvWriter& CsvWriter::cell(long long v)
{
    sep();
    out_ << v;
    return *this;
}

CsvWriter& CsvWriter::cell(std::string_view v)
{
    sep();
    out_ << v;
    return *this;
}

void CsvWriter::end_row()
{
    out_ << '\n';
    first_ = true;
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw ConfigError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace imprs
