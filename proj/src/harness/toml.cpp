#include "adlraw/harness/toml.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>

namespace adlraw::harness {

namespace {

class Reader {
public:
    explicit Reader(std::string_view text) : s_(text) {}

    nlohmann::json parse() {
        nlohmann::json root = nlohmann::json::object();
        nlohmann::json* table = &root;
        while (true) {
            skip_blank_lines();
            if (eof()) break;
            if (peek() == '[') {
                table = &open_table(root);
            } else {
                parse_pair(*table);
            }
            end_of_line();
        }
        return root;
    }

private:
    std::string_view s_;
    std::size_t pos_ = 0;
    std::size_t line_ = 1;

    bool eof() const { return pos_ >= s_.size(); }
    char peek() const { return eof() ? '\0' : s_[pos_]; }
    char get() {
        char c = s_[pos_++];
        if (c == '\n') ++line_;
        return c;
    }

    [[noreturn]] void fail(const std::string& what) const {
        throw ConfigError("config line " + std::to_string(line_) + ": " + what);
    }

    void skip_spaces() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) get();
    }
    void skip_comment() {
        if (peek() == '#') {
            while (!eof() && peek() != '\n') get();
        }
    }
    void skip_blank_lines() {
        while (!eof()) {
            skip_spaces();
            skip_comment();
            if (peek() == '\n' || peek() == '\r') get();
            else break;
        }
    }
    // Whitespace, newlines and comments inside arrays.
    void skip_array_space() {
        while (!eof()) {
            if (std::isspace(static_cast<unsigned char>(peek()))) get();
            else if (peek() == '#') skip_comment();
            else break;
        }
    }
    void end_of_line() {
        skip_spaces();
        skip_comment();
        if (peek() == '\r') get();
        if (!eof() && get() != '\n') fail("unexpected trailing characters");
    }

    std::string bare_key() {
        std::string key;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') key += get();
            else break;
        }
        if (key.empty()) fail("expected a key");
        return key;
    }

    std::string key() {
        if (peek() == '"') return basic_string();
        return bare_key();
    }

    nlohmann::json& open_table(nlohmann::json& root) {
        get(); // '['
        if (peek() == '[') fail("arrays of tables are not supported");
        nlohmann::json* t = &root;
        while (true) {
            skip_spaces();
            const std::string k = key();
            skip_spaces();
            auto& next = (*t)[k];
            if (next.is_null()) next = nlohmann::json::object();
            if (!next.is_object()) fail("'" + k + "' is already a value, not a table");
            t = &next;
            if (peek() == '.') {
                get();
                continue;
            }
            if (peek() != ']') fail("expected ']' after table name");
            get();
            break;
        }
        return *t;
    }

    void parse_pair(nlohmann::json& table) {
        const std::string k = key();
        skip_spaces();
        if (peek() != '=') fail("expected '=' after key '" + k + "'");
        get();
        skip_spaces();
        if (table.contains(k)) fail("duplicate key '" + k + "'");
        table[k] = value();
    }

    nlohmann::json value() {
        const char c = peek();
        if (c == '"') return basic_string();
        if (c == '\'') return literal_string();
        if (c == '[') return array();
        if (c == '{') fail("inline tables are not supported");
        if (s_.substr(pos_, 4) == "true") {
            pos_ += 4;
            return true;
        }
        if (s_.substr(pos_, 5) == "false") {
            pos_ += 5;
            return false;
        }
        return number();
    }

    std::string basic_string() {
        get(); // '"'
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '"') break;
            if (c == '\\') {
                if (eof()) fail("unterminated escape");
                char e = get();
                switch (e) {
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                default: fail(std::string("unsupported escape \\") + e);
                }
            } else {
                out += c;
            }
        }
        return out;
    }

    std::string literal_string() {
        get();
        std::string out;
        while (true) {
            if (eof() || peek() == '\n') fail("unterminated string");
            char c = get();
            if (c == '\'') break;
            out += c;
        }
        return out;
    }

    nlohmann::json array() {
        get(); // '['
        nlohmann::json arr = nlohmann::json::array();
        while (true) {
            skip_array_space();
            if (peek() == ']') {
                get();
                return arr;
            }
            arr.push_back(value());
            skip_array_space();
            if (peek() == ',') {
                get();
                continue;
            }
            if (peek() != ']') fail("expected ',' or ']' in array");
        }
    }

    nlohmann::json number() {
        std::string tok;
        while (!eof()) {
            char c = peek();
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
                if (c != '_') tok += c;
                get();
            } else {
                break;
            }
        }
        if (tok.empty()) fail("expected a value");
        const bool is_float = tok.find_first_of(".eE") != std::string::npos &&
                              tok.rfind("0x", 0) != 0;
        const char* b = tok.data() + (tok.front() == '+' ? 1 : 0);
        const char* e = tok.data() + tok.size();
        if (is_float) {
            double v = 0.0;
            auto r = std::from_chars(b, e, v);
            if (r.ec != std::errc() || r.ptr != e) fail("malformed number '" + tok + "'");
            return v;
        }
        std::int64_t v = 0;
        auto r = std::from_chars(b, e, v);
        if (r.ec != std::errc() || r.ptr != e) fail("malformed value '" + tok + "'");
        return v;
    }
};

} // namespace

nlohmann::json parse_toml(std::string_view text) {
    return Reader(text).parse();
}

nlohmann::json load_toml(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_toml(ss.str());
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

} // namespace adlraw::harness
