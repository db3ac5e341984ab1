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

#include "send/dataset_io.h"

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "send/common.h"

// Per-sample binary record (all integers int64, floats f64, little-endian):
//   magic "SENDSMP1"
//   T, F, S, D, W            frames, feature dim, speakers, emb dim, words
//   features  f64[T*F]
//   labels    u8[T*S]
//   speaker_ids  i64[S]
//   enrollments  f64[S*D]
//   words     W x (vocab i64, speaker i64, begin i64, end i64)

static_assert(std::endian::native == std::endian::little,
              "dataset format is little-endian; byte swapping not wired up");

namespace send {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr char kMagic[8] = {'S', 'E', 'N', 'D', 'S', 'M', 'P', '1'};

void write_i64(std::ofstream& out, int64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

int64_t read_i64(std::ifstream& in, const std::string& path) {
  int64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw InvalidInput("truncated sample record: " + path);
  return v;
}

std::string sample_file_name(int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "sample_%06lld.bin",
                static_cast<long long>(index));
  return buf;
}

void write_sample(const std::string& path, const MixtureSample& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write sample record: " + path);
  out.write(kMagic, sizeof(kMagic));
  int64_t frames = s.features.dim(0);
  int64_t feat_dim = s.features.dim(1);
  int64_t speakers = static_cast<int64_t>(s.speaker_ids.size());
  int64_t emb_dim =
      s.enrollments.empty() ? 0 : static_cast<int64_t>(s.enrollments[0].size());
  int64_t words = static_cast<int64_t>(s.words.size());
  write_i64(out, frames);
  write_i64(out, feat_dim);
  write_i64(out, speakers);
  write_i64(out, emb_dim);
  write_i64(out, words);
  out.write(reinterpret_cast<const char*>(s.features.data()),
            static_cast<std::streamsize>(frames * feat_dim * sizeof(double)));
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t n = 0; n < speakers; ++n) {
      char c = s.labels.active(t, static_cast<int>(n)) ? 1 : 0;
      out.write(&c, 1);
    }
  }
  for (int32_t id : s.speaker_ids) write_i64(out, id);
  for (const auto& e : s.enrollments) {
    out.write(reinterpret_cast<const char*>(e.data()),
              static_cast<std::streamsize>(e.size() * sizeof(double)));
  }
  for (const WordSpan& w : s.words) {
    write_i64(out, w.vocab_id);
    write_i64(out, w.speaker);
    write_i64(out, w.begin);
    write_i64(out, w.end);
  }
  if (!out) throw std::runtime_error("sample write failed: " + path);
}

MixtureSample read_sample(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open sample record: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidInput("bad sample record magic: " + path);
  }
  int64_t frames = read_i64(in, path);
  int64_t feat_dim = read_i64(in, path);
  int64_t speakers = read_i64(in, path);
  int64_t emb_dim = read_i64(in, path);
  int64_t words = read_i64(in, path);
  if (frames < 1 || feat_dim < 1 || speakers < 1 || emb_dim < 0 || words < 0) {
    throw InvalidInput("bad sample record header: " + path);
  }
  MixtureSample s;
  std::vector<double> feat(static_cast<size_t>(frames * feat_dim));
  in.read(reinterpret_cast<char*>(feat.data()),
          static_cast<std::streamsize>(feat.size() * sizeof(double)));
  s.features = Tensor::from_values({frames, feat_dim}, std::move(feat));
  s.labels = FrameLabels(frames, static_cast<int>(speakers));
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t n = 0; n < speakers; ++n) {
      char c = 0;
      in.read(&c, 1);
      s.labels.set(t, static_cast<int>(n), c != 0);
    }
  }
  for (int64_t i = 0; i < speakers; ++i) {
    s.speaker_ids.push_back(static_cast<int32_t>(read_i64(in, path)));
  }
  for (int64_t i = 0; i < speakers; ++i) {
    std::vector<double> e(static_cast<size_t>(emb_dim));
    in.read(reinterpret_cast<char*>(e.data()),
            static_cast<std::streamsize>(e.size() * sizeof(double)));
    s.enrollments.push_back(std::move(e));
  }
  for (int64_t i = 0; i < words; ++i) {
    WordSpan w;
    w.vocab_id = static_cast<int32_t>(read_i64(in, path));
    w.speaker = static_cast<int32_t>(read_i64(in, path));
    w.begin = read_i64(in, path);
    w.end = read_i64(in, path);
    s.words.push_back(w);
  }
  if (!in) throw InvalidInput("truncated sample record: " + path);
  return s;
}

json tensor_to_json(const Tensor& t) {
  json rows = json::array();
  for (int64_t r = 0; r < t.dim(0); ++r) {
    json row = json::array();
    for (int64_t c = 0; c < t.dim(1); ++c) row.push_back(t.at(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Tensor tensor_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) {
    throw InvalidInput("manifest: expected a non-empty array of rows");
  }
  int64_t r = static_cast<int64_t>(rows.size());
  int64_t c = static_cast<int64_t>(rows[0].size());
  std::vector<double> values;
  values.reserve(static_cast<size_t>(r * c));
  for (const auto& row : rows) {
    if (static_cast<int64_t>(row.size()) != c) {
      throw InvalidInput("manifest: ragged matrix");
    }
    for (const auto& v : row) values.push_back(v.get<double>());
  }
  return Tensor::from_values({r, c}, std::move(values));
}

}  // namespace

DatasetStats Dataset::stats() const {
  DatasetStats st;
  st.num_samples = static_cast<int64_t>(samples.size());
  for (const MixtureSample& s : samples) {
    st.total_frames += s.labels.num_frames();
    st.total_words += static_cast<int64_t>(s.words.size());
    for (int64_t t = 0; t < s.labels.num_frames(); ++t) {
      int n = s.labels.active_count(t);
      if (n >= 1) ++st.speech_frames;
      if (n >= 2) ++st.overlap_frames;
      st.max_simultaneous_seen = std::max(st.max_simultaneous_seen, n);
    }
  }
  return st;
}

Dataset simulate_dataset(const SimConfig& config) {
  config.validate();
  Dataset d;
  d.config = config;
  std::mt19937_64 pool_rng = make_rng(config.seed, "pool");
  d.pool = build_speaker_pool(config, pool_rng);
  d.samples.reserve(static_cast<size_t>(config.num_samples));
  for (int i = 0; i < config.num_samples; ++i) {
    std::mt19937_64 rng =
        make_rng(config.seed, "sample", static_cast<uint64_t>(i));
    d.samples.push_back(simulate_mixture(config, d.pool, rng));
  }
  return d;
}

void write_dataset(const std::string& dir, const Dataset& dataset) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InvalidInput("cannot create dataset directory: " + dir);

  DatasetStats st = dataset.stats();
  json manifest;
  manifest["format"] = "send-diar-dataset-v1";
  manifest["num_samples"] = st.num_samples;
  manifest["seed"] = dataset.config.seed;
  {
    json cfg;
    KeyValueFile kv = dataset.config.to_keyvalue();
    for (const auto& [k, v] : kv.entries()) cfg[k] = v;
    manifest["config"] = std::move(cfg);
  }
  json stats;
  stats["total_frames"] = st.total_frames;
  stats["speech_frames"] = st.speech_frames;
  stats["overlap_frames"] = st.overlap_frames;
  stats["overlap_ratio"] = st.overlap_ratio();
  stats["total_words"] = st.total_words;
  stats["max_simultaneous_seen"] = st.max_simultaneous_seen;
  manifest["stats"] = std::move(stats);
  manifest["pool_means"] = tensor_to_json(dataset.pool.means);
  manifest["pool_signatures"] = tensor_to_json(dataset.pool.signatures);

  std::ofstream mf(fs::path(dir) / "manifest.json", std::ios::trunc);
  if (!mf) throw InvalidInput("cannot write dataset manifest in " + dir);
  mf << manifest.dump(2) << "\n";
  if (!mf) throw std::runtime_error("manifest write failed in " + dir);

  for (size_t i = 0; i < dataset.samples.size(); ++i) {
    write_sample((fs::path(dir) / sample_file_name(static_cast<int64_t>(i)))
                     .string(),
                 dataset.samples[i]);
  }
}

void write_frame_labels(const std::string& path, const FrameLabels& labels) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write label record: " + path);
  out.write("SENDHYP1", 8);
  write_i64(out, labels.num_frames());
  write_i64(out, labels.num_speakers());
  for (int64_t t = 0; t < labels.num_frames(); ++t) {
    for (int n = 0; n < labels.num_speakers(); ++n) {
      char c = labels.active(t, n) ? 1 : 0;
      out.write(&c, 1);
    }
  }
  if (!out) throw std::runtime_error("label record write failed: " + path);
}

FrameLabels read_frame_labels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open label record: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, "SENDHYP1", 8) != 0) {
    throw InvalidInput("bad label record magic: " + path);
  }
  int64_t frames = read_i64(in, path);
  int64_t speakers = read_i64(in, path);
  if (frames < 0 || speakers < 0 || speakers > 62) {
    throw InvalidInput("bad label record header: " + path);
  }
  FrameLabels labels(frames, static_cast<int>(speakers));
  for (int64_t t = 0; t < frames; ++t) {
    for (int64_t n = 0; n < speakers; ++n) {
      char c = 0;
      in.read(&c, 1);
      labels.set(t, static_cast<int>(n), c != 0);
    }
  }
  if (!in) throw InvalidInput("truncated label record: " + path);
  return labels;
}

Dataset read_dataset(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw InvalidInput("cannot open dataset manifest in " + dir);
  json manifest;
  try {
    mf >> manifest;
  } catch (const json::exception& e) {
    throw InvalidInput("bad dataset manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format", "") != "send-diar-dataset-v1") {
    throw InvalidInput("unrecognized dataset format in " + dir);
  }
  Dataset d;
  {
    KeyValueFile kv;
    for (const auto& [k, v] : manifest.at("config").items()) {
      kv.set(k, v.get<std::string>());
    }
    d.config = SimConfig::from_keyvalue(kv);
  }
  d.pool.means = tensor_from_json(manifest.at("pool_means"));
  d.pool.signatures = tensor_from_json(manifest.at("pool_signatures"));
  int64_t n = manifest.at("num_samples").get<int64_t>();
  d.samples.reserve(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) {
    d.samples.push_back(
        read_sample((fs::path(dir) / sample_file_name(i)).string()));
  }
  return d;
}

}  // namespace send
