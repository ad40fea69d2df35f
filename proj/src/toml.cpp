// Copyright 2026 The ReliPI Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rpi/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace rpi::toml {

double Value::as_double() const {
    if (kind == Kind::Float) return real;
    if (kind == Kind::Integer) return static_cast<double>(integer);
    throw ParseError("expected a number");
}

long long Value::as_integer() const {
    if (kind == Kind::Integer) return integer;
    throw ParseError("expected an integer");
}

bool Value::as_bool() const {
    if (kind == Kind::Boolean) return boolean;
    throw ParseError("expected a boolean");
}

const std::string& Value::as_string() const {
    if (kind == Kind::String) return text;
    throw ParseError("expected a string");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Cut "# comment" respecting quoted strings.
std::string strip_comment(const std::string& line) {
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_string = !in_string;
        if (line[i] == '#' && !in_string) return line.substr(0, i);
    }
    return line;
}

Value parse_scalar(const std::string& raw, int line_no);

Value parse_value(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw ParseError("line " + std::to_string(line_no) + ": missing value");
    if (v.front() == '[') {
        if (v.back() != ']')
            throw ParseError("line " + std::to_string(line_no) + ": unterminated array");
        Value out;
        out.kind = Value::Kind::Array;
        std::string body = v.substr(1, v.size() - 2);
        std::string item;
        bool in_string = false;
        for (char ch : body) {
            if (ch == '"') in_string = !in_string;
            if (ch == ',' && !in_string) {
                if (!trim(item).empty()) out.array.push_back(parse_scalar(trim(item), line_no));
                item.clear();
            } else {
                item += ch;
            }
        }
        if (!trim(item).empty()) out.array.push_back(parse_scalar(trim(item), line_no));
        return out;
    }
    return parse_scalar(v, line_no);
}

Value parse_scalar(const std::string& v, int line_no) {
    Value out;
    if (v == "true" || v == "false") {
        out.kind = Value::Kind::Boolean;
        out.boolean = (v == "true");
        return out;
    }
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') {
        out.kind = Value::Kind::String;
        out.text = v.substr(1, v.size() - 2);
        return out;
    }
    const bool looks_float = v.find_first_of(".eE") != std::string::npos &&
                             v.find_first_not_of("+-0123456789.eE") == std::string::npos;
    char* end = nullptr;
    if (!looks_float) {
        const long long i = std::strtoll(v.c_str(), &end, 10);
        if (end != nullptr && *end == '\0') {
            out.kind = Value::Kind::Integer;
            out.integer = i;
            return out;
        }
    }
    const double d = std::strtod(v.c_str(), &end);
    if (end == nullptr || *end != '\0')
        throw ParseError("line " + std::to_string(line_no) + ": cannot parse value '" + v + "'");
    out.kind = Value::Kind::Float;
    out.real = d;
    return out;
}

}  // namespace

Document Document::parse_string(const std::string& text) {
    Document doc;
    std::istringstream in(text);
    std::string line;
    std::string current;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string body = trim(strip_comment(line));
        if (body.empty()) continue;
        if (body.front() == '[') {
            if (body.back() != ']')
                throw ParseError("line " + std::to_string(line_no) + ": bad table header");
            current = trim(body.substr(1, body.size() - 2));
            doc.tables_[current];
            continue;
        }
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos)
            throw ParseError("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(body.substr(0, eq));
        if (key.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty key");
        doc.tables_[current][key] = parse_value(body.substr(eq + 1), line_no);
    }
    return doc;
}

Document Document::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

bool Document::has(const std::string& table, const std::string& key) const {
    return find(table, key) != nullptr;
}

const Value* Document::find(const std::string& table, const std::string& key) const {
    const auto t = tables_.find(table);
    if (t == tables_.end()) return nullptr;
    const auto v = t->second.find(key);
    return v == t->second.end() ? nullptr : &v->second;
}

double Document::get_double(const std::string& table, const std::string& key,
                            double fallback) const {
    const Value* v = find(table, key);
    return v == nullptr ? fallback : v->as_double();
}

long long Document::get_integer(const std::string& table, const std::string& key,
                                long long fallback) const {
    const Value* v = find(table, key);
    return v == nullptr ? fallback : v->as_integer();
}

bool Document::get_bool(const std::string& table, const std::string& key, bool fallback) const {
    const Value* v = find(table, key);
    return v == nullptr ? fallback : v->as_bool();
}

std::string Document::get_string(const std::string& table, const std::string& key,
                                 const std::string& fallback) const {
    const Value* v = find(table, key);
    return v == nullptr ? fallback : v->as_string();
}

std::vector<double> Document::get_double_array(const std::string& table,
                                               const std::string& key) const {
    const Value* v = find(table, key);
    if (v == nullptr) return {};
    if (v->kind != Value::Kind::Array) throw ParseError("key '" + key + "' is not an array");
    std::vector<double> out;
    out.reserve(v->array.size());
    for (const Value& e : v->array) out.push_back(e.as_double());
    return out;
}

}  // namespace rpi::toml
