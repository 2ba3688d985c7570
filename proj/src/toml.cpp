#include "imprs/toml.hpp"

#include "imprs/errors.hpp"
#include "imprs/io.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <vector>

namespace imprs {
namespace {

class Parser {
public:
    explicit Parser(std::string_view text) : s_(text) {}

    ordered_json run()
    {
        ordered_json root = ordered_json::object();
        ordered_json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                table = header(root);
            } else {
                const std::string key = parse_key();
                skip_ws();
                expect('=');
                skip_ws();
                if (table->contains(key)) fail("duplicate key '" + key + "'");
                (*table)[key] = value();
            }
            end_of_line();
        }
        return root;
    }

private:
    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw ConfigError("TOML line " + std::to_string(line_) + ": " + msg);
    }

    void advance()
    {
        if (s_[pos_] == '\n') ++line_;
        ++pos_;
    }

    void expect(char c)
    {
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    void skip_ws()
    {
        while (!eof() && (peek() == ' ' || peek() == '\t')) advance();
    }

    void skip_comment()
    {
        if (peek() == '#')
            while (!eof() && peek() != '\n') advance();
    }

    void skip_blank_lines()
    {
        while (!eof()) {
            skip_ws();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') advance();
            else break;
        }
    }

    // whitespace, comments and newlines inside arrays
    void skip_array_space()
    {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\n' || c == '\r') advance();
            else if (c == '#') skip_comment();
            else break;
        }
    }

    void end_of_line()
    {
        skip_ws();
        skip_comment();
        if (peek() == '\r') advance();
        if (!eof() && peek() != '\n') fail("unexpected trailing characters");
    }

    static bool bare_char(char c)
    {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
    }

    std::string parse_key()
    {
        if (peek() == '"') return parse_string();
        if (peek() == '\'') return parse_literal();
        std::string k;
        while (!eof() && bare_char(peek())) {
            k += peek();
            advance();
        }
        if (k.empty()) fail("expected a key");
        return k;
    }

    std::vector<std::string> parse_dotted()
    {
        std::vector<std::string> parts;
        while (true) {
            skip_ws();
            parts.push_back(parse_key());
            skip_ws();
            if (peek() != '.') break;
            advance();
        }
        return parts;
    }

    ordered_json* header(ordered_json& root)
    {
        advance();
        const bool array = peek() == '[';
        if (array) advance();
        const std::vector<std::string> path = parse_dotted();
        expect(']');
        if (array) expect(']');

        ordered_json* node = &root;
        std::string name;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) {
            name += path[i] + ".";
            ordered_json& next = (*node)[path[i]];
            if (next.is_array()) name += std::to_string(next.size()) + ".";
            if (next.is_null()) next = ordered_json::object();
            if (next.is_array()) {
                if (next.empty() || !next.back().is_object()) fail("'" + path[i] + "' is not a table");
                node = &next.back();
            } else if (next.is_object()) {
                node = &next;
            } else {
                fail("'" + path[i] + "' is not a table");
            }
        }
        ordered_json& last = (*node)[path.back()];
        if (array) {
            if (last.is_null()) last = ordered_json::array();
            if (!last.is_array()) fail("'" + path.back() + "' is not an array of tables");
            last.push_back(ordered_json::object());
            return &last.back();
        }
        if (last.is_null()) {
            last = ordered_json::object();
        } else {
            if (!last.is_object()) fail("'" + path.back() + "' is not a table");
        }
        name += path.back();
        if (!defined_.insert(name).second) fail("table [" + name + "] defined twice");
        return &last;
    }

    std::string parse_literal()
    {
        expect('\'');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = peek();
            advance();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    std::string parse_string()
    {
        expect('"');
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            const char c = peek();
            advance();
            if (c == '"') break;
            if (c != '\\') {
                out += c;
                continue;
            }
            if (eof()) fail("unterminated string");
            const char e = peek();
            advance();
            switch (e) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: fail(std::string("unsupported escape '\\") + e + "'");
            }
        }
        return out;
    }

    ordered_json value()
    {
        const char c = peek();
        if (c == '"') return parse_string();
        if (c == '\'') return parse_literal();
        if (c == '[') return parse_array();
        if (c == '{') fail("inline tables are not supported");
        std::string tok;
        while (!eof()) {
            const char d = peek();
            if (std::isalnum(static_cast<unsigned char>(d)) || d == '+' || d == '-' || d == '.' || d == '_') {
                tok += d;
                advance();
            } else {
                break;
            }
        }
        if (tok.empty()) fail("expected a value");
        if (tok == "true") return true;
        if (tok == "false") return false;
        return number(tok);
    }

    ordered_json number(std::string tok)
    {
        std::string clean;
        for (char c : tok)
            if (c != '_') clean += c;
        std::string body = clean;
        const bool neg = !body.empty() && body[0] == '-';
        if (!body.empty() && (body[0] == '+' || body[0] == '-')) body.erase(0, 1);
        if (body == "inf") return neg ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        if (body == "nan") return std::numeric_limits<double>::quiet_NaN();
        const bool is_float = clean.find_first_of(".eE") != std::string::npos;
        try {
            if (is_float) return parse_double(clean, "value");
            std::size_t used = 0;
            const long long v = std::stoll(clean, &used);
            if (used != clean.size()) throw ConfigError("bad integer");
            return v;
        } catch (const std::exception&) {
            fail("invalid value '" + tok + "'");
        }
    }

    ordered_json parse_array()
    {
        expect('[');
        ordered_json arr = ordered_json::array();
        while (true) {
            skip_array_space();
            if (peek() == ']') break;
            arr.push_back(value());
            skip_array_space();
            if (peek() == ',') {
                advance();
                continue;
            }
            if (peek() != ']') fail("expected ',' or ']' in array");
        }
        advance();
        return arr;
    }

    std::string_view s_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::set<std::string> defined_;
};

bool is_table_array(const ordered_json& v)
{
    return v.is_array() && !v.empty() && v.front().is_object();
}

bool bare_key(const std::string& k)
{
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
    return true;
}

std::string quote(const std::string& s)
{
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
        }
    }
    return out + "\"";
}

std::string key_text(const std::string& k) { return bare_key(k) ? k : quote(k); }

std::string scalar_text(const ordered_json& v)
{
    if (v.is_string()) return quote(v.get<std::string>());
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isnan(d)) return "nan";
        if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
        std::string t = format_double(d);
        if (t.find_first_of(".e") == std::string::npos) t += ".0";
        return t;
    }
    if (v.is_array()) {
        std::string out = "[";
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (v[i].is_object()) throw std::invalid_argument("write_toml: tables inside plain arrays are not supported");
            out += (i ? ", " : "") + scalar_text(v[i]);
        }
        return out + "]";
    }
    if (v.is_null()) throw std::invalid_argument("write_toml: null values cannot be written");
    throw std::invalid_argument("write_toml: unsupported value");
}

void write_table(std::ostream& out, const ordered_json& table, const std::string& path)
{
    for (const auto& [k, v] : table.items())
        if (!v.is_object() && !is_table_array(v)) out << key_text(k) << " = " << scalar_text(v) << '\n';
    for (const auto& [k, v] : table.items()) {
        const std::string sub = path.empty() ? key_text(k) : path + "." + key_text(k);
        if (v.is_object()) {
            out << "\n[" << sub << "]\n";
            write_table(out, v, sub);
        } else if (is_table_array(v)) {
            for (const auto& e : v) {
                out << "\n[[" << sub << "]]\n";
                write_table(out, e, sub);
            }
        }
    }
}

}  // namespace

ordered_json parse_toml(std::string_view text) { return Parser(text).run(); }

std::string write_toml(const ordered_json& root)
{
    if (!root.is_object()) throw std::invalid_argument("write_toml: root must be an object");
    std::ostringstream out;
    write_table(out, root, "");
    std::string s = out.str();
    if (!s.empty() && s.front() == '\n') s.erase(0, 1);
    return s;
}

}  // namespace imprs
