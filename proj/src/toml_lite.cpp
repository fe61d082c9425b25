#include "mforge/toml_lite.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "mforge/errors.hpp"

using nlohmann::json;

namespace mforge::toml_lite {

namespace {

std::string strip(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

// Removes a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
    bool in_string = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') in_string = !in_string;
        if (s[i] == '#' && !in_string) return s.substr(0, i);
    }
    return s;
}

std::vector<std::string> split_dotted(const std::string& key) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : key) {
        if (ch == '.') {
            parts.push_back(strip(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(strip(cur));
    return parts;
}

json parse_scalar(const std::string& raw) {
    std::string v = strip(raw);
    if (v.empty()) throw ValidationError("toml: empty value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw ValidationError("toml: unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                ++i;
                switch (v[i]) {
                    case 'n': out += '\n'; break;
                    case 't': out += '\t'; break;
                    case '"': out += '"'; break;
                    case '\\': out += '\\'; break;
                    default: out += v[i];
                }
            } else {
                out += v[i];
            }
        }
        return json(out);
    }
    if (v == "true") return json(true);
    if (v == "false") return json(false);
    try {
        std::size_t pos = 0;
        if (v.find_first_of(".eE") == std::string::npos) {
            long long i = std::stoll(v, &pos);
            if (pos == v.size()) return json(i);
        } else {
            double d = std::stod(v, &pos);
            if (pos == v.size()) return json(d);
        }
    } catch (...) {
    }
    throw ValidationError("toml: cannot parse value '" + v + "'");
}

json parse_value(const std::string& raw) {
    std::string v = strip(raw);
    if (!v.empty() && v.front() == '[') {
        if (v.back() != ']') throw ValidationError("toml: unterminated array");
        json arr = json::array();
        std::string body = v.substr(1, v.size() - 2);
        std::string cur;
        bool in_string = false;
        for (char ch : body) {
            if (ch == '"') in_string = !in_string;
            if (ch == ',' && !in_string) {
                if (!strip(cur).empty()) arr.push_back(parse_scalar(cur));
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!strip(cur).empty()) arr.push_back(parse_scalar(cur));
        return arr;
    }
    return parse_scalar(v);
}

json* descend(json& root, const std::vector<std::string>& path) {
    json* node = &root;
    for (const auto& part : path) {
        if (node->is_array()) node = &node->back();
        if (!node->contains(part)) (*node)[part] = json::object();
        node = &(*node)[part];
        if (node->is_array() && !node->empty()) {
            // keep descending into the last element for nested headers
        }
    }
    if (node->is_array()) node = &node->back();
    return node;
}

}  // namespace

json parse(const std::string& text) {
    json root = json::object();
    json* current = &root;

    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string s = strip(strip_comment(line));
        if (s.empty()) continue;

        if (s.front() == '[') {
            bool array_of_tables = s.size() > 1 && s[1] == '[';
            std::size_t close = s.find(array_of_tables ? "]]" : "]");
            if (close == std::string::npos)
                throw ValidationError("toml line " + std::to_string(line_no) +
                                      ": malformed table header");
            std::string name = strip(s.substr(array_of_tables ? 2 : 1,
                                              close - (array_of_tables ? 2 : 1)));
            auto path = split_dotted(name);
            json* parent = &root;
            for (std::size_t i = 0; i + 1 < path.size(); ++i) {
                if (parent->is_array()) parent = &parent->back();
                if (!parent->contains(path[i])) (*parent)[path[i]] = json::object();
                parent = &(*parent)[path[i]];
                if (parent->is_array()) parent = &parent->back();
            }
            if (parent->is_array()) parent = &parent->back();
            const std::string& leaf = path.back();
            if (array_of_tables) {
                if (!parent->contains(leaf)) (*parent)[leaf] = json::array();
                (*parent)[leaf].push_back(json::object());
                current = &(*parent)[leaf].back();
            } else {
                if (!parent->contains(leaf)) (*parent)[leaf] = json::object();
                current = &(*parent)[leaf];
            }
            continue;
        }

        std::size_t eq = std::string::npos;
        bool in_string = false;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '"') in_string = !in_string;
            if (s[i] == '=' && !in_string) {
                eq = i;
                break;
            }
        }
        if (eq == std::string::npos)
            throw ValidationError("toml line " + std::to_string(line_no) + ": expected key = value");
        auto path = split_dotted(strip(s.substr(0, eq)));
        json value = parse_value(s.substr(eq + 1));
        json* node = current;
        for (std::size_t i = 0; i + 1 < path.size(); ++i) node = descend(*node, {path[i]});
        (*node)[path.back()] = std::move(value);
    }
    return root;
}

}  // namespace mforge::toml_lite
