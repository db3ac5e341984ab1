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

#include "send/checkpoint.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "send/common.h"

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; byte swapping not wired up");

namespace send {

namespace {

struct ManifestEntry {
  std::string name;
  std::vector<int64_t> shape;
  uint64_t offset = 0;
};

std::string shape_to_text(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

std::vector<int64_t> shape_from_text(const std::string& text, int line_no) {
  std::vector<int64_t> shape;
  std::string token;
  std::istringstream is(text);
  while (std::getline(is, token, 'x')) {
    try {
      shape.push_back(std::stoll(token));
    } catch (const std::exception&) {
      std::ostringstream os;
      os << "checkpoint manifest line " << line_no << ": bad shape '" << text
         << "'";
      throw InvalidInput(os.str());
    }
  }
  if (shape.empty()) {
    std::ostringstream os;
    os << "checkpoint manifest line " << line_no << ": empty shape";
    throw InvalidInput(os.str());
  }
  return shape;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open checkpoint manifest: " + path);
  std::vector<ManifestEntry> entries;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream is(line);
    ManifestEntry e;
    std::string shape_text;
    if (!(is >> e.name >> shape_text >> e.offset)) {
      std::ostringstream os;
      os << "checkpoint manifest line " << line_no << ": expected"
         << " '<name> <shape> <offset>', got '" << line << "'";
      throw InvalidInput(os.str());
    }
    e.shape = shape_from_text(shape_text, line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

}  // namespace

void save_checkpoint(const std::string& path,
                     std::span<Parameter* const> params) {
  std::ofstream data(path, std::ios::binary | std::ios::trunc);
  if (!data) throw InvalidInput("cannot write checkpoint: " + path);
  std::ofstream manifest(path + ".manifest", std::ios::trunc);
  if (!manifest) {
    throw InvalidInput("cannot write checkpoint manifest: " + path +
                       ".manifest");
  }
  std::map<std::string, int> seen;
  uint64_t offset = 0;
  for (const Parameter* p : params) {
    if (p->name.empty()) throw InvalidInput("checkpoint: unnamed parameter");
    if (seen.count(p->name)) {
      throw InvalidInput("checkpoint: duplicate parameter name '" + p->name +
                         "'");
    }
    seen[p->name] = 1;
    data.write(reinterpret_cast<const char*>(p->value.data()),
               static_cast<std::streamsize>(p->value.size() * sizeof(double)));
    manifest << p->name << ' ' << shape_to_text(p->value.shape()) << ' '
             << offset << '\n';
    offset += static_cast<uint64_t>(p->value.size()) * sizeof(double);
  }
  if (!data || !manifest) {
    throw std::runtime_error("checkpoint write failed: " + path);
  }
}

void load_checkpoint(const std::string& path, std::span<Parameter*> params) {
  std::vector<ManifestEntry> entries = read_manifest(path + ".manifest");
  std::map<std::string, const ManifestEntry*> by_name;
  for (const ManifestEntry& e : entries) by_name[e.name] = &e;

  std::ifstream data(path, std::ios::binary);
  if (!data) throw InvalidInput("cannot open checkpoint: " + path);

  for (Parameter* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) {
      throw InvalidInput("checkpoint " + path + " is missing array '" +
                         p->name + "'");
    }
    const ManifestEntry& e = *it->second;
    if (e.shape != p->value.shape()) {
      throw InvalidInput("checkpoint array '" + p->name + "' has shape " +
                         shape_to_text(e.shape) + ", expected " +
                         p->value.shape_str());
    }
    data.seekg(static_cast<std::streamoff>(e.offset));
    std::vector<double> buf(static_cast<size_t>(p->value.size()));
    data.read(reinterpret_cast<char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(double)));
    if (!data) {
      throw InvalidInput("checkpoint " + path + " truncated at array '" +
                         p->name + "'");
    }
    p->value = Tensor::from_values(e.shape, std::move(buf));
    p->zero_grad();
  }
}

}  // namespace send
