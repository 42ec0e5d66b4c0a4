#include "d2d/app/toml.hpp"

#include "d2d/common/error.hpp"
#include "d2d/common/text.hpp"

#include <cctype>
#include <charconv>
#include <set>
#include <string>

namespace d2d::app {

namespace {

using nlohmann::json;

class LineParser {
public:
    LineParser(std::string_view s, std::size_t line) : s_(s), line_(line) {}

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_ws()
    {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) {
            ++pos_;
        }
    }

    bool at_end_or_comment()
    {
        skip_ws();
        return pos_ >= s_.size() || s_[pos_] == '#';
    }

    bool consume(char c)
    {
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    char peek()
    {
        skip_ws();
        return pos_ < s_.size() ? s_[pos_] : '\0';
    }

    std::vector<std::string> dotted_key()
    {
        std::vector<std::string> parts;
        do {
            parts.push_back(simple_key());
        } while (consume('.'));
        return parts;
    }

    json value()
    {
        const char c = peek();
        if (c == '"') {
            return basic_string();
        }
        if (c == '\'') {
            return literal_string();
        }
        if (c == '[') {
            return array();
        }
        if (c == 't' || c == 'f') {
            return boolean();
        }
        return number();
    }

private:
    std::string simple_key()
    {
        const char c = peek();
        if (c == '"') {
            return basic_string();
        }
        if (c == '\'') {
            return literal_string();
        }
        const auto start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-')) {
            ++pos_;
        }
        if (pos_ == start) {
            fail("expected a key");
        }
        return std::string(s_.substr(start, pos_ - start));
    }

    static void append_utf8(std::string& out, unsigned long cp)
    {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }

    std::string basic_string()
    {
        ++pos_; // opening quote
        std::string out;
        while (pos_ < s_.size()) {
            const char c = s_[pos_++];
            if (c == '"') {
                return out;
            }
            if (c != '\\') {
                out += c;
                continue;
            }
            if (pos_ >= s_.size()) {
                break;
            }
            const char e = s_[pos_++];
            switch (e) {
            case '"': out += '"'; break;
            case '\\': out += '\\'; break;
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case 'b': out += '\b'; break;
            case 'f': out += '\f'; break;
            case 'u':
            case 'U': {
                const std::size_t len = e == 'u' ? 4 : 8;
                if (pos_ + len > s_.size()) {
                    fail("short unicode escape");
                }
                unsigned long cp = 0;
                const auto hex = s_.substr(pos_, len);
                auto [p, ec] = std::from_chars(hex.data(), hex.data() + hex.size(), cp, 16);
                if (ec != std::errc() || p != hex.data() + hex.size() || cp > 0x10FFFF) {
                    fail("bad unicode escape");
                }
                append_utf8(out, cp);
                pos_ += len;
                break;
            }
            default: fail(std::string("unknown escape \\") + e);
            }
        }
        fail("unterminated string");
    }

    std::string literal_string()
    {
        ++pos_;
        const auto end = s_.find('\'', pos_);
        if (end == std::string_view::npos) {
            fail("unterminated string");
        }
        std::string out(s_.substr(pos_, end - pos_));
        pos_ = end + 1;
        return out;
    }

    json array()
    {
        ++pos_;
        json arr = json::array();
        if (consume(']')) {
            return arr;
        }
        for (;;) {
            arr.push_back(value());
            if (consume(']')) {
                return arr;
            }
            if (!consume(',')) {
                fail("expected ',' or ']' in array");
            }
            if (consume(']')) { // trailing comma
                return arr;
            }
        }
    }

    json boolean()
    {
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        fail("unrecognised value");
    }

    json number()
    {
        const auto start = pos_;
        while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '+' ||
                                    s_[pos_] == '-' || s_[pos_] == '.' || s_[pos_] == '_')) {
            ++pos_;
        }
        std::string tok;
        for (char c : s_.substr(start, pos_ - start)) {
            if (c != '_') {
                tok += c;
            }
        }
        if (tok.empty()) {
            fail("expected a value");
        }
        const bool is_float = tok.find_first_of(".eE") != std::string::npos;
        const char* b = tok.data() + (tok[0] == '+' ? 1 : 0);
        const char* e = tok.data() + tok.size();
        if (is_float) {
            double d = 0;
            auto [p, ec] = std::from_chars(b, e, d);
            if (ec == std::errc() && p == e) {
                return d;
            }
        } else {
            long long v = 0;
            auto [p, ec] = std::from_chars(b, e, v);
            if (ec == std::errc() && p == e) {
                return v;
            }
        }
        fail("unrecognised value '" + tok + "'");
    }

    std::string_view s_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

json& descend(json& root, const std::vector<std::string>& path, std::size_t upto, const LineParser& lp)
{
    json* node = &root;
    for (std::size_t i = 0; i < upto; ++i) {
        auto& child = (*node)[path[i]];
        if (child.is_null()) {
            child = json::object();
        } else if (!child.is_object()) {
            lp.fail("key '" + path[i] + "' is not a table");
        }
        node = &child;
    }
    return *node;
}

} // namespace

nlohmann::json parse_toml(std::string_view text)
{
    json root = json::object();
    std::vector<std::string> table;
    std::set<std::vector<std::string>> headers;
    std::size_t line_no = 0;
    for (const auto& raw : text::split(text, '\n')) {
        ++line_no;
        std::string_view line = raw;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        LineParser lp(line, line_no);
        if (lp.at_end_or_comment()) {
            continue;
        }
        if (lp.consume('[')) {
            if (lp.peek() == '[') {
                lp.fail("arrays of tables are not supported");
            }
            table = lp.dotted_key();
            if (!lp.consume(']')) {
                lp.fail("expected ']'");
            }
            if (!lp.at_end_or_comment()) {
                lp.fail("unexpected text after table header");
            }
            if (!headers.insert(table).second) {
                lp.fail("table [" + text::join(table, ".") + "] defined twice");
            }
            descend(root, table, table.size(), lp);
            continue;
        }
        auto key = lp.dotted_key();
        if (!lp.consume('=')) {
            lp.fail("expected '='");
        }
        auto value = lp.value();
        if (!lp.at_end_or_comment()) {
            lp.fail("unexpected text after value");
        }
        auto full = table;
        full.insert(full.end(), key.begin(), key.end());
        auto& parent = descend(root, full, full.size() - 1, lp);
        if (parent.contains(full.back())) {
            lp.fail("duplicate key '" + text::join(full, ".") + "'");
        }
        parent[full.back()] = std::move(value);
    }
    return root;
}

} // namespace d2d::app
