// Copyright (c) 2026 The send-diar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "send/keyvalue.h"

#include <fstream>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KeyValueFile KeyValueFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_text(buf.str(), path);
}

KeyValueFile KeyValueFile::parse_text(const std::string& text,
                                      const std::string& origin) {
  KeyValueFile f;
  f.origin_ = origin;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << origin << ":" << line_no << ": expected 'key = value'";
      throw InvalidInput(os.str());
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      std::ostringstream os;
      os << origin << ":" << line_no << ": empty key";
      throw InvalidInput(os.str());
    }
    if (f.kv_.count(key)) {
      std::ostringstream os;
      os << origin << ":" << line_no << ": duplicate key '" << key << "'";
      throw InvalidInput(os.str());
    }
    f.kv_[key] = value;
  }
  return f;
}

bool KeyValueFile::has(const std::string& key) const { return kv_.count(key); }

std::optional<std::string> KeyValueFile::find(const std::string& key) const {
  auto it = kv_.find(key);
  if (it == kv_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueFile::get_string(const std::string& key) const {
  auto v = find(key);
  if (!v) throw InvalidInput(origin_ + ": missing required key '" + key + "'");
  return *v;
}

std::string KeyValueFile::get_string(const std::string& key,
                                     const std::string& dflt) const {
  return find(key).value_or(dflt);
}

int64_t KeyValueFile::get_int(const std::string& key) const {
  std::string v = get_string(key);
  try {
    size_t pos = 0;
    int64_t r = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw InvalidInput(origin_ + ": key '" + key + "' is not an integer: '" +
                       v + "'");
  }
}

int64_t KeyValueFile::get_int(const std::string& key, int64_t dflt) const {
  return has(key) ? get_int(key) : dflt;
}

uint64_t KeyValueFile::get_uint(const std::string& key) const {
  std::string v = get_string(key);
  try {
    size_t pos = 0;
    uint64_t r = std::stoull(v, &pos);
    if (pos != v.size() || v[0] == '-') throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw InvalidInput(origin_ + ": key '" + key +
                       "' is not a nonnegative integer: '" + v + "'");
  }
}

uint64_t KeyValueFile::get_uint(const std::string& key, uint64_t dflt) const {
  return has(key) ? get_uint(key) : dflt;
}

double KeyValueFile::get_double(const std::string& key) const {
  std::string v = get_string(key);
  try {
    size_t pos = 0;
    double r = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return r;
  } catch (const std::exception&) {
    throw InvalidInput(origin_ + ": key '" + key + "' is not a number: '" + v +
                       "'");
  }
}

double KeyValueFile::get_double(const std::string& key, double dflt) const {
  return has(key) ? get_double(key) : dflt;
}

bool KeyValueFile::get_bool(const std::string& key, bool dflt) const {
  if (!has(key)) return dflt;
  std::string v = get_string(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw InvalidInput(origin_ + ": key '" + key + "' is not a boolean: '" + v +
                     "'");
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  kv_[key] = value;
}

void KeyValueFile::set_int(const std::string& key, int64_t value) {
  kv_[key] = std::to_string(value);
}

void KeyValueFile::set_double(const std::string& key, double value) {
  std::ostringstream os;
  os.precision(17);
  os << value;
  kv_[key] = os.str();
}

std::string KeyValueFile::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : kv_) os << k << " = " << v << "\n";
  return os.str();
}

void KeyValueFile::write_file(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InvalidInput("cannot write config file: " + path);
  out << to_text();
  if (!out) throw std::runtime_error("config write failed: " + path);
}

}  // namespace send
