#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace fpo::toml {

/// Minimal TOML reader covering the subset the experiment configs use:
/// comments, [table] headers, and key = value lines where a value is a
/// string, integer, float, boolean, or a flat array of those. Nested and
/// inline tables, dates, and multi-line strings are rejected.
struct Value {
    enum class Kind { Int, Float, Bool, String, Array };
    Kind kind = Kind::Int;
    std::int64_t int_value = 0;
    double float_value = 0.0;
    bool bool_value = false;
    std::string string_value;
    std::vector<Value> array;

    /// Int or Float as a double.
    double number() const;
};

using Table = std::map<std::string, Value>;

struct Document {
    std::map<std::string, Table> tables;  // "" holds root-level keys

    bool has(const std::string& table, const std::string& key) const;
    const Value* find(const std::string& table, const std::string& key) const;
};

struct ParseError : std::runtime_error {
    ParseError(int line, const std::string& what);
    int line;
};

Document parse(std::string_view text);
Document parse_file(const std::string& path);

}  // namespace fpo::toml
