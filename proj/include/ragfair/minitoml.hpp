#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ragfair::minitoml {

// Minimal TOML subset: comments, [tables], [[arrays of tables]], and
// string / integer / float / boolean values under bare keys. That covers the
// lexicon and run-config formats; nested inline values are not supported.

struct Value {
    enum class Kind { string, integer, floating, boolean };

    Kind kind = Kind::string;
    std::string str;
    std::int64_t integer = 0;
    double floating = 0.0;
    bool boolean = false;
    int line = 0;

    std::string as_string() const;
    std::int64_t as_int() const;
    double as_double() const; // accepts integer values too
    bool as_bool() const;
};

struct Table {
    std::string name; // dotted section path, empty for the root table
    int line = 0;
    std::map<std::string, Value> values;

    bool has(const std::string& key) const;
    const Value& at(const std::string& key) const; // ConfigError when missing

    std::string get_string(const std::string& key) const;
    std::string get_string_or(const std::string& key, const std::string& fallback) const;
    std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const;
    double get_double_or(const std::string& key, double fallback) const;
    bool get_bool_or(const std::string& key, bool fallback) const;
};

struct Document {
    Table root;
    std::map<std::string, Table> tables;
    std::map<std::string, std::vector<Table>> arrays;

    const Table* find_table(const std::string& name) const;
    const std::vector<Table>* find_array(const std::string& name) const;
};

// Both throw ConfigError carrying the offending line number.
Document parse(std::string_view text);
Document parse_file(const std::string& path);

} // namespace ragfair::minitoml
