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

#include "send/corpus.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "send/common.h"

namespace send {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  std::uniform_int_distribution<int> d(lo, hi);
  return d(rng);
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw InvalidInput("sim config: " + msg);
}

// E[min(L1, L2)] for iid uniform integers on [a, b].
double expected_min_uniform(int a, int b) {
  double n = static_cast<double>(b - a + 1);
  double e = a;
  for (int k = 1; k <= b - a; ++k) {
    double p = (n - k) / n;
    e += p * p;
  }
  return e;
}

struct Turn {
  int speaker = 0;  // sample-local index
  int64_t start = 0;
  int64_t len = 0;
  int64_t end() const { return start + len; }
};

}  // namespace

void SimConfig::validate() const {
  require(num_samples >= 0, "num_samples must be nonnegative");
  require(min_speakers >= 1 && min_speakers <= max_speakers,
          "speaker range invalid");
  require(max_speakers <= num_pool_speakers,
          "max_speakers exceeds the speaker pool");
  require(max_simultaneous >= 1, "max_simultaneous must be >= 1");
  require(min_turns >= 1 && min_turns <= max_turns, "turn range invalid");
  require(min_turn_frames >= 1 && min_turn_frames <= max_turn_frames,
          "turn length range invalid");
  require(min_pause_frames >= 1 && min_pause_frames <= max_pause_frames,
          "pause range invalid");
  require(overlap_ratio >= 0.0 && overlap_ratio < 1.0,
          "overlap_ratio must lie in [0, 1)");
  require(feature_dim >= 1 && embedding_dim >= 1, "dimensions must be >= 1");
  require(feature_noise >= 0.0 && enrollment_noise >= 0.0,
          "noise scales must be nonnegative");
  require(speaker_separation > 0.0, "speaker_separation must be positive");
  if (transcripts) {
    require(min_word_frames >= 1 && min_word_frames <= max_word_frames,
            "word length range invalid");
    require(vocab_size >= 1, "vocab_size must be >= 1");
  }
}

SimConfig SimConfig::from_keyvalue(const KeyValueFile& kv) {
  SimConfig c;
  c.num_samples = static_cast<int>(kv.get_int("num_samples", c.num_samples));
  c.min_speakers = static_cast<int>(kv.get_int("min_speakers", c.min_speakers));
  c.max_speakers = static_cast<int>(kv.get_int("max_speakers", c.max_speakers));
  c.num_pool_speakers =
      static_cast<int>(kv.get_int("num_pool_speakers", c.num_pool_speakers));
  c.max_simultaneous =
      static_cast<int>(kv.get_int("max_simultaneous", c.max_simultaneous));
  c.min_turns = static_cast<int>(kv.get_int("min_turns", c.min_turns));
  c.max_turns = static_cast<int>(kv.get_int("max_turns", c.max_turns));
  c.min_turn_frames =
      static_cast<int>(kv.get_int("min_turn_frames", c.min_turn_frames));
  c.max_turn_frames =
      static_cast<int>(kv.get_int("max_turn_frames", c.max_turn_frames));
  c.min_pause_frames =
      static_cast<int>(kv.get_int("min_pause_frames", c.min_pause_frames));
  c.max_pause_frames =
      static_cast<int>(kv.get_int("max_pause_frames", c.max_pause_frames));
  c.overlap_ratio = kv.get_double("overlap_ratio", c.overlap_ratio);
  c.feature_dim = static_cast<int>(kv.get_int("feature_dim", c.feature_dim));
  c.feature_noise = kv.get_double("feature_noise", c.feature_noise);
  c.embedding_dim =
      static_cast<int>(kv.get_int("embedding_dim", c.embedding_dim));
  if (kv.get_string("speaker_separation", "") == "orthogonal") {
    c.speaker_separation = std::numeric_limits<double>::infinity();
  } else {
    c.speaker_separation =
        kv.get_double("speaker_separation", c.speaker_separation);
  }
  c.enrollment_noise = kv.get_double("enrollment_noise", c.enrollment_noise);
  c.transcripts = kv.get_bool("transcripts", c.transcripts);
  c.min_word_frames =
      static_cast<int>(kv.get_int("min_word_frames", c.min_word_frames));
  c.max_word_frames =
      static_cast<int>(kv.get_int("max_word_frames", c.max_word_frames));
  c.vocab_size = static_cast<int>(kv.get_int("vocab_size", c.vocab_size));
  c.seed = kv.get_uint("seed");  // mandatory: no seed, no dataset
  c.validate();
  return c;
}

KeyValueFile SimConfig::to_keyvalue() const {
  KeyValueFile kv;
  kv.set_int("num_samples", num_samples);
  kv.set_int("min_speakers", min_speakers);
  kv.set_int("max_speakers", max_speakers);
  kv.set_int("num_pool_speakers", num_pool_speakers);
  kv.set_int("max_simultaneous", max_simultaneous);
  kv.set_int("min_turns", min_turns);
  kv.set_int("max_turns", max_turns);
  kv.set_int("min_turn_frames", min_turn_frames);
  kv.set_int("max_turn_frames", max_turn_frames);
  kv.set_int("min_pause_frames", min_pause_frames);
  kv.set_int("max_pause_frames", max_pause_frames);
  kv.set_double("overlap_ratio", overlap_ratio);
  kv.set_int("feature_dim", feature_dim);
  kv.set_double("feature_noise", feature_noise);
  kv.set_int("embedding_dim", embedding_dim);
  if (std::isinf(speaker_separation)) {
    kv.set("speaker_separation", "orthogonal");
  } else {
    kv.set_double("speaker_separation", speaker_separation);
  }
  kv.set_double("enrollment_noise", enrollment_noise);
  kv.set("transcripts", transcripts ? "true" : "false");
  kv.set_int("min_word_frames", min_word_frames);
  kv.set_int("max_word_frames", max_word_frames);
  kv.set_int("vocab_size", vocab_size);
  kv.set("seed", std::to_string(seed));
  return kv;
}

Tensor synth_speaker_bank(int num_speakers, int dim, double separation,
                          std::mt19937_64& rng) {
  if (num_speakers < 1) throw InvalidInput("need at least one speaker");
  if (!(separation > 0.0)) throw InvalidInput("separation must be positive");
  bool orthogonal = std::isinf(separation);
  int basis_needed = orthogonal ? num_speakers : num_speakers + 1;
  if (dim < basis_needed) {
    std::ostringstream os;
    os << "embedding dim " << dim << " too small for " << num_speakers
       << (orthogonal ? " orthogonal speakers"
                      : " speakers (needs one extra shared direction)");
    throw InvalidInput(os.str());
  }
  // Random orthonormal basis via Gram-Schmidt over gaussian draws.
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<double>> basis;
  while (static_cast<int>(basis.size()) < basis_needed) {
    std::vector<double> v(static_cast<size_t>(dim));
    for (double& x : v) x = gauss(rng);
    for (const auto& b : basis) {
      double dot = std::inner_product(v.begin(), v.end(), b.begin(), 0.0);
      for (size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
    }
    double norm =
        std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm < 1e-8) continue;  // degenerate draw, retry
    for (double& x : v) x /= norm;
    basis.push_back(std::move(v));
  }
  Tensor means({num_speakers, dim});
  if (orthogonal) {
    for (int s = 0; s < num_speakers; ++s) {
      for (int d = 0; d < dim; ++d) {
        means.at(s, d) = basis[static_cast<size_t>(s)][static_cast<size_t>(d)];
      }
    }
    return means;
  }
  // mean_s = (shared + separation * q_s) / sqrt(1 + separation^2): unit norm,
  // pairwise cosine exactly 1 / (1 + separation^2).
  const std::vector<double>& shared = basis[0];
  double denom = std::sqrt(1.0 + separation * separation);
  for (int s = 0; s < num_speakers; ++s) {
    const std::vector<double>& q = basis[static_cast<size_t>(s) + 1];
    for (int d = 0; d < dim; ++d) {
      means.at(s, d) = (shared[static_cast<size_t>(d)] +
                        separation * q[static_cast<size_t>(d)]) /
                       denom;
    }
  }
  return means;
}

std::vector<double> sample_enrollment(std::span<const double> mean,
                                      double noise_scale,
                                      std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(mean.begin(), mean.end());
  if (noise_scale > 0.0) {
    for (double& x : v) x += noise_scale * gauss(rng);
  }
  double norm =
      std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

SpeakerPool build_speaker_pool(const SimConfig& cfg, std::mt19937_64& rng) {
  SpeakerPool pool;
  pool.means = synth_speaker_bank(cfg.num_pool_speakers, cfg.embedding_dim,
                                  cfg.speaker_separation, rng);
  if (cfg.feature_dim == cfg.embedding_dim) {
    pool.signatures = pool.means;
    return pool;
  }
  // Fixed random map into feature space; a generic linear image keeps the
  // subset-sum geometry separable.
  std::normal_distribution<double> gauss(0.0, 1.0);
  Tensor proj({cfg.embedding_dim, cfg.feature_dim});
  double scale = 1.0 / std::sqrt(static_cast<double>(cfg.embedding_dim));
  for (int64_t i = 0; i < proj.size(); ++i) proj.at(i) = scale * gauss(rng);
  pool.signatures = Tensor({cfg.num_pool_speakers, cfg.feature_dim});
  for (int s = 0; s < cfg.num_pool_speakers; ++s) {
    for (int f = 0; f < cfg.feature_dim; ++f) {
      double acc = 0.0;
      for (int d = 0; d < cfg.embedding_dim; ++d) {
        acc += pool.means.at(s, d) * proj.at(d, f);
      }
      pool.signatures.at(s, f) = acc;
    }
  }
  return pool;
}

MixtureSample simulate_mixture(const SimConfig& cfg, const SpeakerPool& pool,
                               std::mt19937_64& rng) {
  cfg.validate();
  if (pool.means.dim(0) < cfg.max_speakers) {
    throw InvalidInput("speaker pool smaller than max_speakers");
  }

  int num_spk = uniform_int(rng, cfg.min_speakers, cfg.max_speakers);
  std::vector<int32_t> all_ids(static_cast<size_t>(pool.means.dim(0)));
  std::iota(all_ids.begin(), all_ids.end(), 0);
  std::shuffle(all_ids.begin(), all_ids.end(), rng);
  std::vector<int32_t> speaker_ids(all_ids.begin(), all_ids.begin() + num_spk);

  int num_turns =
      std::max(uniform_int(rng, cfg.min_turns, cfg.max_turns), num_spk);

  // Everyone talks at least once; later turns avoid immediate repeats.
  std::vector<int> turn_speaker(static_cast<size_t>(num_turns));
  std::iota(turn_speaker.begin(), turn_speaker.begin() + num_spk, 0);
  std::shuffle(turn_speaker.begin(), turn_speaker.begin() + num_spk, rng);
  for (int i = num_spk; i < num_turns; ++i) {
    int s = uniform_int(rng, 0, num_spk - 1);
    if (num_spk > 1 && s == turn_speaker[static_cast<size_t>(i) - 1]) {
      s = (s + 1) % num_spk;
    }
    turn_speaker[static_cast<size_t>(i)] = s;
  }

  // Probability that a turn starts before the previous one ends, chosen so
  // the expected overlapped-frame share matches cfg.overlap_ratio.
  double e_len = 0.5 * (cfg.min_turn_frames + cfg.max_turn_frames);
  double e_ov = std::max(1.0, 0.5 * expected_min_uniform(cfg.min_turn_frames,
                                                         cfg.max_turn_frames));
  double p_overlap = 0.0;
  if (cfg.overlap_ratio > 0.0 && num_turns > 1 && cfg.max_simultaneous >= 2 &&
      num_spk > 1) {
    double target_frames =
        cfg.overlap_ratio / (1.0 + cfg.overlap_ratio) * num_turns * e_len;
    p_overlap = std::min(0.95, target_frames / ((num_turns - 1) * e_ov));
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Turn> turns;
  turns.reserve(static_cast<size_t>(num_turns));
  for (int i = 0; i < num_turns; ++i) {
    Turn turn;
    turn.speaker = turn_speaker[static_cast<size_t>(i)];
    turn.len = uniform_int(rng, cfg.min_turn_frames, cfg.max_turn_frames);
    int64_t desired;
    if (turns.empty()) {
      // Leading silence >= 1 frame guarantees a silence frame per sample.
      desired = uniform_int(rng, 1, cfg.max_pause_frames);
    } else {
      const Turn& prev = turns.back();
      int64_t max_ov = std::min(prev.len, turn.len) - 1;
      if (unit(rng) < p_overlap && max_ov >= 1) {
        desired = prev.end() - uniform_int(rng, 1, static_cast<int>(max_ov));
      } else {
        desired = prev.end() +
                  uniform_int(rng, cfg.min_pause_frames, cfg.max_pause_frames);
      }
    }
    // Shift right until the span respects the concurrency cap and the
    // speaker is not already talking.
    auto feasible = [&](int64_t s) {
      for (const Turn& t : turns) {
        if (t.speaker == turn.speaker && t.end() > s && t.start < s + turn.len) {
          return false;
        }
      }
      for (int64_t f = s; f < s + turn.len; ++f) {
        int count = 0;
        for (const Turn& t : turns) {
          if (f >= t.start && f < t.end()) ++count;
        }
        if (count >= cfg.max_simultaneous) return false;
      }
      return true;
    };
    int64_t start = std::max<int64_t>(desired, 1);
    while (!feasible(start)) ++start;
    turn.start = start;
    turns.push_back(turn);
  }

  int64_t last_end = 0;
  for (const Turn& t : turns) last_end = std::max(last_end, t.end());
  int64_t total = last_end + uniform_int(rng, 1, cfg.max_pause_frames);

  MixtureSample sample;
  sample.labels = FrameLabels(total, num_spk);
  for (const Turn& t : turns) {
    for (int64_t f = t.start; f < t.end(); ++f) {
      sample.labels.set(f, t.speaker, true);
    }
  }

  sample.speaker_ids = speaker_ids;
  sample.enrollments.reserve(static_cast<size_t>(num_spk));
  for (int s = 0; s < num_spk; ++s) {
    sample.enrollments.push_back(
        sample_enrollment(pool.means.row(speaker_ids[static_cast<size_t>(s)]),
                          cfg.enrollment_noise, rng));
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  sample.features = Tensor({total, cfg.feature_dim});
  for (int64_t f = 0; f < total; ++f) {
    for (int d = 0; d < cfg.feature_dim; ++d) {
      double acc =
          cfg.feature_noise > 0.0 ? cfg.feature_noise * gauss(rng) : 0.0;
      for (int s = 0; s < num_spk; ++s) {
        if (sample.labels.active(f, s)) {
          acc += pool.signatures.at(speaker_ids[static_cast<size_t>(s)], d);
        }
      }
      sample.features.at(f, d) = acc;
    }
  }

  if (cfg.transcripts) {
    for (const Turn& t : turns) {
      int64_t cursor = t.start;
      while (cursor < t.end()) {
        int64_t len =
            uniform_int(rng, cfg.min_word_frames, cfg.max_word_frames);
        int64_t end = std::min(cursor + len, t.end());
        if (t.end() - end < cfg.min_word_frames) end = t.end();
        WordSpan w;
        w.begin = cursor;
        w.end = end;
        w.vocab_id = uniform_int(rng, 1, cfg.vocab_size);
        w.speaker = static_cast<int32_t>(t.speaker);
        sample.words.push_back(w);
        cursor = end;
      }
    }
    std::stable_sort(
        sample.words.begin(), sample.words.end(),
        [](const WordSpan& a, const WordSpan& b) { return a.begin < b.begin; });
  }
  return sample;
}

Tensor stack_and_subsample(const Tensor& raw, int context, int stride) {
  if (raw.ndim() != 2) {
    throw InvalidInput("frontend expects T x F features, got " +
                       raw.shape_str());
  }
  if (context < 0 || stride < 1) {
    throw InvalidInput("frontend: context must be >= 0 and stride >= 1");
  }
  int64_t frames = raw.dim(0), dim = raw.dim(1);
  int64_t window = 2 * static_cast<int64_t>(context) + 1;
  int64_t out_frames = (frames + stride - 1) / stride;
  Tensor out({out_frames, window * dim});
  for (int64_t o = 0; o < out_frames; ++o) {
    int64_t center = o * stride;
    for (int64_t w = 0; w < window; ++w) {
      int64_t src = std::clamp<int64_t>(center + w - context, 0, frames - 1);
      for (int64_t d = 0; d < dim; ++d) {
        out.at(o, w * dim + d) = raw.at(src, d);
      }
    }
  }
  return out;
}

FrameLabels subsample_labels(const FrameLabels& labels, int stride) {
  if (stride < 1) throw InvalidInput("subsample stride must be >= 1");
  int64_t frames = labels.num_frames();
  int64_t out_frames = (frames + stride - 1) / stride;
  FrameLabels out(out_frames, labels.num_speakers());
  for (int64_t o = 0; o < out_frames; ++o) {
    int64_t begin = o * stride;
    int64_t end = std::min<int64_t>(begin + stride, frames);
    for (int s = 0; s < labels.num_speakers(); ++s) {
      int64_t count = 0;
      for (int64_t f = begin; f < end; ++f) {
        if (labels.active(f, s)) ++count;
      }
      out.set(o, s, 2 * count > end - begin);
    }
  }
  return out;
}

}  // namespace send
