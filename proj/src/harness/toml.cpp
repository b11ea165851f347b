#include "fpo/harness/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace fpo::toml {

double Value::number() const {
    if (kind == Kind::Int) return static_cast<double>(int_value);
    if (kind == Kind::Float) return float_value;
    throw std::runtime_error("toml: value is not numeric");
}

bool Document::has(const std::string& table, const std::string& key) const {
    return find(table, key) != nullptr;
}

const Value* Document::find(const std::string& table, const std::string& key) const {
    const auto t = tables.find(table);
    if (t == tables.end()) return nullptr;
    const auto v = t->second.find(key);
    return v == t->second.end() ? nullptr : &v->second;
}

ParseError::ParseError(int line_no, const std::string& what)
    : std::runtime_error("toml parse error at line " + std::to_string(line_no) + ": " + what),
      line(line_no) {}

namespace {

std::string_view strip(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

/// Removes a trailing comment, respecting quoted strings.
std::string_view strip_comment(std::string_view s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    for (char c : key) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    }
    return true;
}

Value parse_scalar(std::string_view text, int line) {
    Value v;
    if (text.size() >= 2 && text.front() == '"' && text.back() == '"') {
        v.kind = Value::Kind::String;
        std::string out;
        for (std::size_t i = 1; i + 1 < text.size(); ++i) {
            if (text[i] == '\\' && i + 2 < text.size()) {
                ++i;
                switch (text[i]) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: throw ParseError(line, "unsupported escape sequence");
                }
            } else if (text[i] == '"') {
                throw ParseError(line, "unexpected quote inside string");
            } else {
                out.push_back(text[i]);
            }
        }
        v.string_value = std::move(out);
        return v;
    }
    if (text == "true" || text == "false") {
        v.kind = Value::Kind::Bool;
        v.bool_value = text == "true";
        return v;
    }
    // Integer first, then float.
    {
        std::int64_t i = 0;
        const auto r = std::from_chars(text.data(), text.data() + text.size(), i);
        if (r.ec == std::errc() && r.ptr == text.data() + text.size()) {
            v.kind = Value::Kind::Int;
            v.int_value = i;
            return v;
        }
    }
    try {
        std::size_t pos = 0;
        const double d = std::stod(std::string(text), &pos);
        if (pos == text.size()) {
            v.kind = Value::Kind::Float;
            v.float_value = d;
            return v;
        }
    } catch (...) {
    }
    throw ParseError(line, "cannot parse value '" + std::string(text) + "'");
}

/// Splits a bracketed array body at top-level commas (strings may contain
/// commas).
std::vector<std::string_view> split_array(std::string_view body, int line) {
    std::vector<std::string_view> parts;
    bool in_string = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < body.size(); ++i) {
        if (body[i] == '"') in_string = !in_string;
        if (body[i] == '[' && !in_string) throw ParseError(line, "nested arrays unsupported");
        if (body[i] == ',' && !in_string) {
            parts.push_back(body.substr(start, i - start));
            start = i + 1;
        }
    }
    if (in_string) throw ParseError(line, "unterminated string");
    parts.push_back(body.substr(start));
    if (parts.size() == 1 && strip(parts[0]).empty()) parts.clear();  // []
    return parts;
}

Value parse_value(std::string_view text, int line) {
    if (!text.empty() && text.front() == '[') {
        if (text.back() != ']') throw ParseError(line, "unterminated array");
        Value v;
        v.kind = Value::Kind::Array;
        for (std::string_view part : split_array(text.substr(1, text.size() - 2), line)) {
            part = strip(part);
            if (part.empty()) throw ParseError(line, "empty array element");
            v.array.push_back(parse_scalar(part, line));
        }
        return v;
    }
    return parse_scalar(text, line);
}

}  // namespace

Document parse(std::string_view text) {
    Document doc;
    std::string current;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos
                                                                               : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        line = strip(strip_comment(line));
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(line_no, "unterminated table header");
            const std::string_view name = strip(line.substr(1, line.size() - 2));
            if (!valid_key(name)) {
                throw ParseError(line_no, "invalid table name '" + std::string(name) + "'");
            }
            current = std::string(name);
            doc.tables[current];  // materialise even if empty
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw ParseError(line_no, "expected key = value");
        }
        const std::string_view key = strip(line.substr(0, eq));
        const std::string_view value = strip(line.substr(eq + 1));
        if (!valid_key(key)) {
            throw ParseError(line_no, "invalid key '" + std::string(key) + "'");
        }
        if (value.empty()) {
            throw ParseError(line_no, "missing value for key '" + std::string(key) + "'");
        }
        auto [it, inserted] = doc.tables[current].emplace(std::string(key),
                                                          parse_value(value, line_no));
        if (!inserted) {
            throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
        }
    }
    return doc;
}

Document parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

}  // namespace fpo::toml
