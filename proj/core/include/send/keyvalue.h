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

#ifndef SEND_KEYVALUE_H_
#define SEND_KEYVALUE_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace send {

// Plain-text config files: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Keys are unique; later duplicates are an error.
class KeyValueFile {
 public:
  KeyValueFile() = default;
  static KeyValueFile parse_file(const std::string& path);
  static KeyValueFile parse_text(const std::string& text,
                                 const std::string& origin = "<text>");

  bool has(const std::string& key) const;
  // Typed getters throw InvalidInput on a malformed value; the non-optional
  // forms throw when the key is missing.
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& dflt) const;
  int64_t get_int(const std::string& key) const;
  int64_t get_int(const std::string& key, int64_t dflt) const;
  uint64_t get_uint(const std::string& key) const;
  uint64_t get_uint(const std::string& key, uint64_t dflt) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double dflt) const;
  bool get_bool(const std::string& key, bool dflt) const;

  void set(const std::string& key, const std::string& value);
  void set_int(const std::string& key, int64_t value);
  void set_double(const std::string& key, double value);

  // Deterministic (sorted-key) rendering, suitable for resolved-config echo.
  std::string to_text() const;
  void write_file(const std::string& path) const;

  const std::map<std::string, std::string>& entries() const { return kv_; }

 private:
  std::optional<std::string> find(const std::string& key) const;
  std::map<std::string, std::string> kv_;
  std::string origin_ = "<empty>";
};

}  // namespace send

#endif  // SEND_KEYVALUE_H_
