// Copyright (c) 2025 the spkid authors
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

#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "spkid/types.hpp"

namespace spkid {

// ---------------------------------------------------------------------------
// WAV I/O. RIFF/WAVE, fmt tag 1 (PCM), 16-bit, little-endian, mono or stereo.
// No resampling on read; stereo is averaged down to mono.
// ---------------------------------------------------------------------------

namespace detail {

inline std::uint32_t read_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
  out.push_back((v >> 16) & 0xff);
  out.push_back((v >> 24) & 0xff);
}

inline void put_u16le(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace detail

inline AudioClip read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("read_wav: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("read_wav: " + path + " is not a RIFF/WAVE file");
  }

  bool have_fmt = false;
  std::uint16_t format_tag = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  const unsigned char* data_ptr = nullptr;
  std::uint32_t data_len = 0;

  // Walk chunks; unknown chunks are skipped (word-aligned sizes).
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* hdr = bytes.data() + pos;
    std::uint32_t chunk_len = detail::read_u32le(hdr + 4);
    std::size_t body = pos + 8;
    if (body + chunk_len > bytes.size()) {
      throw FormatError("read_wav: truncated chunk in " + path);
    }
    if (std::memcmp(hdr, "fmt ", 4) == 0) {
      if (chunk_len < 16) throw FormatError("read_wav: short fmt chunk in " + path);
      const unsigned char* f = bytes.data() + body;
      format_tag = detail::read_u16le(f);
      channels = detail::read_u16le(f + 2);
      sample_rate = detail::read_u32le(f + 4);
      bits = detail::read_u16le(f + 14);
      have_fmt = true;
    } else if (std::memcmp(hdr, "data", 4) == 0) {
      data_ptr = bytes.data() + body;
      data_len = chunk_len;
    }
    pos = body + chunk_len + (chunk_len & 1);
  }

  if (!have_fmt) throw FormatError("read_wav: missing fmt chunk in " + path);
  if (format_tag != 1 || bits != 16) {
    throw UnsupportedError("read_wav: " + path +
                           ": only PCM 16-bit supported (tag=" +
                           std::to_string(format_tag) +
                           ", bits=" + std::to_string(bits) + ")");
  }
  if (channels != 1 && channels != 2) {
    throw UnsupportedError("read_wav: " + path + ": only mono/stereo supported");
  }
  if (sample_rate == 0) throw FormatError("read_wav: zero sample rate in " + path);
  if (data_ptr == nullptr || data_len == 0) {
    throw FormatError("read_wav: empty data chunk in " + path);
  }

  const std::size_t n_frames = data_len / (2 * channels);
  if (n_frames == 0) throw FormatError("read_wav: empty data chunk in " + path);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(sample_rate);
  clip.samples.resize(n_frames);
  const double scale = 1.0 / 32768.0;
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::uint16_t c = 0; c < channels; ++c) {
      const unsigned char* s = data_ptr + 2 * (i * channels + c);
      std::int16_t v = static_cast<std::int16_t>(s[0] | (s[1] << 8));
      acc += v * scale;
    }
    clip.samples[i] = acc / channels;
  }
  return clip;
}

inline void write_wav(const AudioClip& clip, const std::string& path) {
  if (!all_finite(clip.samples)) {
    throw ParamError("write_wav: non-finite sample");
  }
  if (clip.sample_rate <= 0) throw ParamError("write_wav: bad sample rate");

  const std::uint32_t n = static_cast<std::uint32_t>(clip.samples.size());
  std::vector<unsigned char> out;
  out.reserve(44 + 2 * n);
  auto put_tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };

  put_tag("RIFF");
  detail::put_u32le(out, 36 + 2 * n);
  put_tag("WAVE");
  put_tag("fmt ");
  detail::put_u32le(out, 16);
  detail::put_u16le(out, 1);  // PCM
  detail::put_u16le(out, 1);  // mono
  detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate));
  detail::put_u32le(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  detail::put_u16le(out, 2);   // block align
  detail::put_u16le(out, 16);  // bits
  put_tag("data");
  detail::put_u32le(out, 2 * n);
  for (double x : clip.samples) {
    long q = std::lround(x * 32768.0);
    if (q > 32767) q = 32767;
    if (q < -32768) q = -32768;
    detail::put_u16le(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("write_wav: cannot open " + path + " for writing");
  f.write(reinterpret_cast<const char*>(out.data()),
          static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write_wav: short write to " + path);
}

// ---------------------------------------------------------------------------
// Corpus manifest: UTF-8 CSV with header row
//   path,speaker_id,sentence_id,emotion,repetition
// ---------------------------------------------------------------------------

enum class Emotion { kNeutral, kSad, kFear, kHappy, kDisgust, kAnger };

inline constexpr std::array<Emotion, 6> kAllEmotions = {
    Emotion::kNeutral, Emotion::kSad,     Emotion::kFear,
    Emotion::kHappy,   Emotion::kDisgust, Emotion::kAnger};

inline std::string to_string(Emotion e) {
  switch (e) {
    case Emotion::kNeutral: return "neutral";
    case Emotion::kSad: return "sad";
    case Emotion::kFear: return "fear";
    case Emotion::kHappy: return "happy";
    case Emotion::kDisgust: return "disgust";
    case Emotion::kAnger: return "anger";
  }
  throw ParamError("unknown emotion");
}

inline Emotion emotion_from_string(const std::string& s) {
  if (s == "neutral") return Emotion::kNeutral;
  if (s == "sad") return Emotion::kSad;
  if (s == "fear") return Emotion::kFear;
  if (s == "happy") return Emotion::kHappy;
  if (s == "disgust") return Emotion::kDisgust;
  if (s == "anger") return Emotion::kAnger;
  throw ParamError("unknown emotion: " + s);
}

struct UtteranceRecord {
  std::string path;
  std::string speaker_id;
  int sentence_id = 0;  // 1..8
  Emotion emotion = Emotion::kNeutral;
  int repetition = 0;  // 1..9
};

inline constexpr const char* kManifestHeader =
    "path,speaker_id,sentence_id,emotion,repetition";

inline std::vector<UtteranceRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("load_manifest: cannot open " + path);

  std::string line;
  std::size_t line_no = 0;
  std::vector<UtteranceRecord> records;

  auto fail = [&](const std::string& what) {
    throw ParseError("load_manifest: " + path + ":" + std::to_string(line_no) +
                     ": " + what);
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kManifestHeader) fail("bad header row, expected '" +
                                        std::string(kManifestHeader) + "'");
      continue;
    }
    if (line.empty()) continue;

    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string col;
    while (std::getline(ss, col, ',')) cols.push_back(col);
    if (cols.size() != 5) fail("expected 5 columns, got " + std::to_string(cols.size()));

    UtteranceRecord rec;
    rec.path = cols[0];
    rec.speaker_id = cols[1];
    try {
      rec.sentence_id = std::stoi(cols[2]);
      rec.repetition = std::stoi(cols[4]);
    } catch (const std::exception&) {
      fail("non-numeric sentence_id or repetition");
    }
    if (rec.sentence_id < 1 || rec.sentence_id > 8) {
      fail("sentence_id " + cols[2] + " out of range [1,8]");
    }
    if (rec.repetition < 1 || rec.repetition > 9) {
      fail("repetition " + cols[4] + " out of range [1,9]");
    }
    try {
      rec.emotion = emotion_from_string(cols[3]);
    } catch (const ParamError&) {
      fail("bad emotion token '" + cols[3] + "'");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

inline void save_manifest(const std::vector<UtteranceRecord>& records,
                          const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("save_manifest: cannot open " + path + " for writing");
  out << kManifestHeader << "\n";
  for (const auto& r : records) {
    out << r.path << ',' << r.speaker_id << ',' << r.sentence_id << ','
        << to_string(r.emotion) << ',' << r.repetition << "\n";
  }
  if (!out) throw IoError("save_manifest: short write to " + path);
}

// Resolves a manifest-relative path against the manifest's directory.
inline std::string resolve_manifest_path(const std::string& manifest_path,
                                         const std::string& entry) {
  if (!entry.empty() && entry.front() == '/') return entry;
  auto slash = manifest_path.find_last_of('/');
  if (slash == std::string::npos) return entry;
  return manifest_path.substr(0, slash + 1) + entry;
}

}  // namespace spkid
