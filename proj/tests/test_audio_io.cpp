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

#include "spkid/audio_io.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace {

using namespace spkid;

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "spkid_audio_io_test";
  std::filesystem::create_directories(dir);
  return dir;
}

// Raw WAV builder so reader tests do not depend on write_wav.
std::string make_wav_bytes(std::uint16_t format_tag, std::uint16_t channels,
                           std::uint32_t rate, std::uint16_t bits,
                           const std::vector<std::int16_t>& samples) {
  std::string b;
  auto u16 = [&](std::uint16_t v) {
    b.push_back(static_cast<char>(v & 0xff));
    b.push_back(static_cast<char>((v >> 8) & 0xff));
  };
  auto u32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  };
  const std::uint32_t data_len = static_cast<std::uint32_t>(samples.size() * 2);
  b += "RIFF";
  u32(36 + data_len);
  b += "WAVE";
  b += "fmt ";
  u32(16);
  u16(format_tag);
  u16(channels);
  u32(rate);
  u32(rate * channels * bits / 8);
  u16(static_cast<std::uint16_t>(channels * bits / 8));
  u16(bits);
  b += "data";
  u32(data_len);
  for (std::int16_t s : samples) u16(static_cast<std::uint16_t>(s));
  return b;
}

std::string write_bytes(const std::string& name, const std::string& bytes) {
  auto path = (temp_dir() / name).string();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  return path;
}

TEST(ReadWav, HeaderEcho) {
  std::vector<std::int16_t> samples(16000, 100);
  auto path = write_bytes("echo.wav", make_wav_bytes(1, 1, 16000, 16, samples));
  AudioClip clip = read_wav(path);
  EXPECT_EQ(clip.samples.size(), 16000u);
  EXPECT_EQ(clip.sample_rate, 16000);
}

TEST(ReadWav, ScalingEndpoint) {
  auto path = write_bytes("endpoint.wav", make_wav_bytes(1, 1, 8000, 16, {-32768}));
  AudioClip clip = read_wav(path);
  EXPECT_DOUBLE_EQ(clip.samples[0], -1.0);
}

TEST(ReadWav, StereoAveragesToMono) {
  // One frame with channels (0.5, -0.5).
  auto path = write_bytes("stereo.wav",
                          make_wav_bytes(1, 2, 16000, 16, {16384, -16384}));
  AudioClip clip = read_wav(path);
  ASSERT_EQ(clip.samples.size(), 1u);
  EXPECT_DOUBLE_EQ(clip.samples[0], 0.0);
}

TEST(ReadWav, RejectsBadMagic) {
  auto path = write_bytes("junk.wav", "definitely not a wav file at all....");
  EXPECT_THROW(read_wav(path), FormatError);
}

TEST(ReadWav, RejectsNonPcm) {
  auto path = write_bytes("float.wav", make_wav_bytes(3, 1, 16000, 16, {0}));
  EXPECT_THROW(read_wav(path), UnsupportedError);
}

TEST(ReadWav, RejectsWideSamples) {
  auto path = write_bytes("24bit.wav", make_wav_bytes(1, 1, 16000, 24, {}));
  EXPECT_THROW(read_wav(path), UnsupportedError);
}

TEST(ReadWav, RejectsEmptyData) {
  auto path = write_bytes("empty.wav", make_wav_bytes(1, 1, 16000, 16, {}));
  EXPECT_THROW(read_wav(path), FormatError);
}

TEST(ReadWav, MissingFile) {
  EXPECT_THROW(read_wav((temp_dir() / "nope.wav").string()), IoError);
}

TEST(WriteWav, ZerosRoundTrip) {
  AudioClip clip{std::vector<double>(256, 0.0), 16000};
  auto path = (temp_dir() / "zeros.wav").string();
  write_wav(clip, path);
  AudioClip back = read_wav(path);
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  for (double s : back.samples) EXPECT_DOUBLE_EQ(s, 0.0);
}

TEST(WriteWav, ClampContract) {
  AudioClip clip{{2.0}, 16000};
  auto path = (temp_dir() / "clamp.wav").string();
  write_wav(clip, path);
  AudioClip back = read_wav(path);
  EXPECT_DOUBLE_EQ(back.samples[0], 32767.0 / 32768.0);
}

TEST(WriteWav, RoundTripWithinOneStep) {
  std::mt19937 rng(20250815);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.resize(4096);
  for (double& s : clip.samples) s = dist(rng);
  auto path = (temp_dir() / "roundtrip.wav").string();
  write_wav(clip, path);
  AudioClip back = read_wav(path);
  ASSERT_EQ(back.samples.size(), clip.samples.size());
  double max_err = 0.0;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    max_err = std::max(max_err, std::fabs(back.samples[i] - clip.samples[i]));
  }
  EXPECT_LE(max_err, 1.0 / 32768.0);
}

TEST(WriteWav, RejectsNonFinite) {
  AudioClip clip{{0.0, std::nan("")}, 16000};
  EXPECT_THROW(write_wav(clip, (temp_dir() / "nan.wav").string()), ParamError);
}

TEST(WriteWav, UnwritablePath) {
  AudioClip clip{{0.0}, 16000};
  EXPECT_THROW(write_wav(clip, "/nonexistent_dir_xyz/out.wav"), IoError);
}

std::string manifest_with_lines(const std::string& name,
                                const std::vector<std::string>& lines) {
  std::ostringstream ss;
  ss << kManifestHeader << "\n";
  for (const auto& l : lines) ss << l << "\n";
  return write_bytes(name, ss.str());
}

TEST(Manifest, SingleValidLine) {
  auto path = manifest_with_lines("one.csv", {"a.wav,spk001,1,neutral,1"});
  auto records = load_manifest(path);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].path, "a.wav");
  EXPECT_EQ(records[0].speaker_id, "spk001");
  EXPECT_EQ(records[0].sentence_id, 1);
  EXPECT_EQ(records[0].emotion, Emotion::kNeutral);
  EXPECT_EQ(records[0].repetition, 1);
}

TEST(Manifest, BadSentenceIdNamesLine) {
  auto path = manifest_with_lines(
      "bad_sentence.csv",
      {"a.wav,spk001,1,neutral,1", "b.wav,spk001,9,neutral,1"});
  try {
    load_manifest(path);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos) << e.what();
  }
}

TEST(Manifest, BadEmotionToken) {
  auto path = manifest_with_lines("bad_emotion.csv", {"a.wav,spk001,1,bored,1"});
  EXPECT_THROW(load_manifest(path), ParseError);
}

TEST(Manifest, BadRepetition) {
  auto path = manifest_with_lines("bad_rep.csv", {"a.wav,spk001,1,neutral,0"});
  EXPECT_THROW(load_manifest(path), ParseError);
}

TEST(Manifest, BadHeader) {
  auto path = write_bytes("bad_header.csv", "file,speaker\na.wav,spk001\n");
  EXPECT_THROW(load_manifest(path), ParseError);
}

// Full synthetic manifest structure: 50 speakers, sentences 1-4 neutral only,
// sentences 5-8 under all six emotions, 9 repetitions -> 12,600 records.
TEST(Manifest, FiftySpeakerProtocolCount) {
  std::ostringstream ss;
  ss << kManifestHeader << "\n";
  for (int s = 1; s <= 50; ++s) {
    char spk[16];
    std::snprintf(spk, sizeof(spk), "spk%03d", s);
    for (int sent = 1; sent <= 8; ++sent) {
      for (Emotion e : kAllEmotions) {
        if (sent <= 4 && e != Emotion::kNeutral) continue;
        for (int rep = 1; rep <= 9; ++rep) {
          ss << spk << "_s" << sent << ".wav," << spk << ',' << sent << ','
             << to_string(e) << ',' << rep << "\n";
        }
      }
    }
  }
  auto path = write_bytes("full.csv", ss.str());
  auto records = load_manifest(path);
  EXPECT_EQ(records.size(), 12600u);

  std::size_t train = 0, test = 0;
  for (const auto& r : records) {
    if (r.sentence_id <= 4) {
      ++train;
      EXPECT_EQ(r.emotion, Emotion::kNeutral);
    } else {
      ++test;
    }
  }
  EXPECT_EQ(train, 1800u);
  EXPECT_EQ(test, 10800u);
}

TEST(Manifest, SaveLoadPreservesOrder) {
  std::vector<UtteranceRecord> records = {
      {"x.wav", "spk002", 5, Emotion::kAnger, 3},
      {"y.wav", "spk001", 2, Emotion::kNeutral, 9},
  };
  auto path = (temp_dir() / "saved.csv").string();
  save_manifest(records, path);
  auto back = load_manifest(path);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].speaker_id, "spk002");
  EXPECT_EQ(back[0].emotion, Emotion::kAnger);
  EXPECT_EQ(back[1].repetition, 9);
}

TEST(Manifest, ResolveRelativePath) {
  EXPECT_EQ(resolve_manifest_path("/data/corpus/manifest.csv", "a.wav"),
            "/data/corpus/a.wav");
  EXPECT_EQ(resolve_manifest_path("/data/corpus/manifest.csv", "/abs/a.wav"),
            "/abs/a.wav");
  EXPECT_EQ(resolve_manifest_path("manifest.csv", "a.wav"), "a.wav");
}

}  // namespace
