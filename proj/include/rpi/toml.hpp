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

#ifndef RPI_TOML_HPP_
#define RPI_TOML_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

// Flat TOML subset: [tables], key = value with booleans, integers, floats,
// quoted strings, and one-line arrays. Enough for experiment configs; no
// dotted keys, no multi-line values.

namespace rpi::toml {

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct Value {
    enum class Kind { Boolean, Integer, Float, String, Array };
    Kind kind = Kind::Boolean;
    bool boolean = false;
    long long integer = 0;
    double real = 0.0;
    std::string text;
    std::vector<Value> array;

    double as_double() const;
    long long as_integer() const;
    bool as_bool() const;
    const std::string& as_string() const;
};

using Table = std::map<std::string, Value>;

class Document {
  public:
    static Document parse_string(const std::string& text);
    static Document parse_file(const std::string& path);

    bool has(const std::string& table, const std::string& key) const;
    const Value* find(const std::string& table, const std::string& key) const;

    double get_double(const std::string& table, const std::string& key, double fallback) const;
    long long get_integer(const std::string& table, const std::string& key,
                          long long fallback) const;
    bool get_bool(const std::string& table, const std::string& key, bool fallback) const;
    std::string get_string(const std::string& table, const std::string& key,
                           const std::string& fallback) const;
    std::vector<double> get_double_array(const std::string& table, const std::string& key) const;

    const std::map<std::string, Table>& tables() const { return tables_; }

  private:
    std::map<std::string, Table> tables_;  // "" holds root-level keys
};

}  // namespace rpi::toml

#endif  // RPI_TOML_HPP_
