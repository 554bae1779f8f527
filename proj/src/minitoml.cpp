#include "ragfair/minitoml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ragfair/errors.hpp"

namespace ragfair::minitoml {
namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
    throw ConfigError("toml line " + std::to_string(line) + ": " + msg);
}

bool is_bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

// Strips a trailing comment that is not inside a basic string.
std::string_view strip_comment(std::string_view s, int line) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
        } else if (c == '"') {
            in_string = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    if (in_string)
        fail(line, "unterminated string");
    return s;
}

std::string parse_basic_string(std::string_view raw, int line) {
    // raw includes the surrounding quotes
    std::string out;
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c != '\\') {
            out += c;
            continue;
        }
        ++i;
        if (i + 1 > raw.size() - 1)
            fail(line, "dangling escape in string");
        switch (raw[i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            default: fail(line, std::string("unsupported escape \\") + raw[i]);
        }
    }
    return out;
}

Value parse_value(std::string_view raw, int line) {
    Value v;
    v.line = line;
    if (raw.empty())
        fail(line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            fail(line, "unterminated string");
        v.kind = Value::Kind::string;
        v.str = parse_basic_string(raw, line);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::boolean;
        v.boolean = raw == "true";
        return v;
    }
    const std::string text(raw);
    const bool looks_float = text.find_first_of(".eE") != std::string::npos;
    if (!looks_float) {
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
        if (ec == std::errc() && p == text.data() + text.size()) {
            v.kind = Value::Kind::integer;
            v.integer = i;
            return v;
        }
    }
    double d = 0.0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), d);
    if (ec == std::errc() && p == text.data() + text.size()) {
        v.kind = Value::Kind::floating;
        v.floating = d;
        return v;
    }
    fail(line, "cannot parse value '" + text + "'");
}

} // namespace

std::string Value::as_string() const {
    if (kind != Kind::string)
        fail(line, "expected a string value");
    return str;
}

std::int64_t Value::as_int() const {
    if (kind != Kind::integer)
        fail(line, "expected an integer value");
    return integer;
}

double Value::as_double() const {
    if (kind == Kind::floating)
        return floating;
    if (kind == Kind::integer)
        return static_cast<double>(integer);
    fail(line, "expected a numeric value");
}

bool Value::as_bool() const {
    if (kind != Kind::boolean)
        fail(line, "expected a boolean value");
    return boolean;
}

bool Table::has(const std::string& key) const {
    return values.count(key) != 0;
}

const Value& Table::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) {
        const std::string where = name.empty() ? "top level" : "[" + name + "]";
        throw ConfigError("missing key '" + key + "' in " + where);
    }
    return it->second;
}

std::string Table::get_string(const std::string& key) const {
    return at(key).as_string();
}

std::string Table::get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? at(key).as_string() : fallback;
}

std::int64_t Table::get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? at(key).as_int() : fallback;
}

double Table::get_double_or(const std::string& key, double fallback) const {
    return has(key) ? at(key).as_double() : fallback;
}

bool Table::get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? at(key).as_bool() : fallback;
}

const Table* Document::find_table(const std::string& name) const {
    auto it = tables.find(name);
    return it == tables.end() ? nullptr : &it->second;
}

const std::vector<Table>* Document::find_array(const std::string& name) const {
    auto it = arrays.find(name);
    return it == arrays.end() ? nullptr : &it->second;
}

Document parse(std::string_view text) {
    Document doc;
    Table* current = &doc.root;

    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        line = trim(strip_comment(line, line_no));
        if (line.empty())
            continue;

        if (line.front() == '[') {
            const bool is_array = line.size() > 1 && line[1] == '[';
            const std::string_view closer = is_array ? "]]" : "]";
            const std::size_t close = line.find(closer);
            if (close == std::string_view::npos || trim(line.substr(close + closer.size())) != "")
                fail(line_no, "malformed section header");
            const std::string name(trim(line.substr(is_array ? 2 : 1, close - (is_array ? 2 : 1))));
            if (name.empty())
                fail(line_no, "empty section name");
            for (char c : name)
                if (!is_bare_key_char(c))
                    fail(line_no, "invalid section name '" + name + "'");
            if (is_array) {
                Table t;
                t.name = name;
                t.line = line_no;
                doc.arrays[name].push_back(std::move(t));
                current = &doc.arrays[name].back();
            } else {
                if (doc.tables.count(name))
                    fail(line_no, "duplicate table [" + name + "]");
                Table t;
                t.name = name;
                t.line = line_no;
                current = &(doc.tables[name] = std::move(t));
            }
            continue;
        }

        const std::size_t eq = line.find('=');
        if (eq == std::string_view::npos)
            fail(line_no, "expected 'key = value'");
        const std::string key(trim(line.substr(0, eq)));
        if (key.empty())
            fail(line_no, "empty key");
        for (char c : key)
            if (!is_bare_key_char(c) || c == '.')
                fail(line_no, "invalid key '" + key + "'");
        if (current->values.count(key))
            fail(line_no, "duplicate key '" + key + "'");
        current->values[key] = parse_value(trim(line.substr(eq + 1)), line_no);
    }
    return doc;
}

Document parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

} // namespace ragfair::minitoml
