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

#ifndef SPKID_SYNTH_HPP_
#define SPKID_SYNTH_HPP_

// Deterministic synthetic corpus: source-filter utterances (glottal pulse
// train through per-speaker formant resonators) arranged in the fixed
// speakers x sentences x repetitions x emotions protocol. Training sentences
// 1-4 appear under the neutral style only; test sentences 5-8 under all six
// styles, so the two partitions never share sentence text.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "spkid/audio_io.hpp"
#include "spkid/types.hpp"

namespace spkid {

struct SpeakerProfile {
  std::string speaker_id;
  double f0_base = 0.0;                 // Hz, in [90, 250]
  std::array<double, 3> formants{};    // strictly increasing, below Nyquist
  std::array<double, 3> bandwidths{};  // Hz
  double gain = 1.0;
  double tilt_pole = 0.7;        // glottal rolloff pole; higher = darker voice
  double bandwidth_scale = 1.0;  // formant sharpness (Q) control
  double breathiness = 1.0;      // aspiration noise multiplier
};

struct EmotionModifier {
  Emotion emotion;
  double f0_scale;
  double rate_scale;
  double jitter;
};

inline const EmotionModifier& emotion_modifier(Emotion e) {
  static const std::array<EmotionModifier, 6> kTable = {{
      {Emotion::kNeutral, 1.00, 1.00, 0.01},
      {Emotion::kSad, 0.85, 0.90, 0.01},
      {Emotion::kFear, 1.15, 1.20, 0.05},
      {Emotion::kHappy, 1.20, 1.10, 0.03},
      {Emotion::kDisgust, 0.95, 0.95, 0.02},
      {Emotion::kAnger, 1.30, 1.15, 0.04},
  }};
  for (const auto& m : kTable) {
    if (m.emotion == e) return m;
  }
  throw ParamError("emotion_modifier: unknown emotion");
}

namespace detail {

// Vowel targets as multipliers on the speaker's formant centers, so vowel
// identity and speaker identity stay separable.
struct VowelShape {
  double m1, m2, m3;
};

// Multiplier spreads are kept inside the inter-speaker formant ratios so
// vowels cannot swamp speaker separation. Two vowels move all three formants
// together (the open and close extremes): a resampling pitch disguise is a
// uniform spectral rescale, so training material that itself samples the
// common-scale direction teaches every backend that this direction is
// within-speaker variation rather than identity.
inline const std::array<VowelShape, 6>& vowel_table() {
  static const std::array<VowelShape, 6> kVowels = {{
      {1.20, 1.16, 1.13},  // open, raises the whole stack
      {0.94, 1.10, 1.04},  // mid front
      {0.85, 1.18, 1.08},  // close front
      {0.94, 0.85, 0.96},  // mid back
      {0.84, 0.81, 0.87},  // close back, lowers the whole stack
      {1.00, 1.00, 1.00},  // schwa
  }};
  return kVowels;
}

// Fixed vowel sequences per sentence. Sentences 1-4 jointly cover all six
// vowels so the training partition spans the full vowel space.
inline const std::vector<int>& sentence_vowels(int sentence_id) {
  static const std::array<std::vector<int>, 8> kSentences = {{
      {0, 1, 2, 3, 4},
      {5, 3, 1, 0},
      {2, 4, 0, 5, 1, 3},
      {4, 0, 3, 2, 5},
      {1, 3, 5, 2},
      {0, 2, 1, 4, 3, 5},
      {3, 5, 4, 0, 2},
      {2, 0, 5, 1, 4, 3},
  }};
  if (sentence_id < 1 || sentence_id > 8) {
    throw ParamError("sentence_id must lie in [1, 8]");
  }
  return kSentences[static_cast<std::size_t>(sentence_id - 1)];
}

inline std::uint64_t fnv1a(std::string_view s,
                           std::uint64_t h = 1469598103934665603ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

// Speaker identity is carried by the formant triple plus three voice-quality
// axes, not by f0: emotion styles rescale f0 by up to 1.3x while formants
// stay put, and the protocol trains on neutral speech only, so f0-reliant
// profiles would not survive the emotional test partition. f0 is therefore
// packed tightly (4.5 Hz steps until the [90, 250] band is exhausted at ~36
// speakers) and the formant axes are spread multiplicatively with three
// different ratios, so a uniform spectral rescale (a resampling pitch
// disguise) cannot map one speaker's triple onto another's on all axes at
// once. The voice-quality axes (spectral tilt, formant Q, breathiness) are
// chosen because a resampling disguise maps a resonance (f, bw) to
// (r*f, r*bw), preserving Q, and likewise preserves the noise floor level
// and the gross spectral slope, so these cues stay speaker-discriminative
// when every formant position has moved. The two index shuffles spread
// small corpora across all axes instead of walking one of them.
inline std::vector<SpeakerProfile> make_profiles(std::size_t n_speakers) {
  if (n_speakers < 2) throw ParamError("make_profiles: need >= 2 speakers");
  if (n_speakers > 100) {
    throw ParamError("make_profiles: formant grid supports at most 100 speakers");
  }
  static constexpr std::array<double, 5> kF1 = {260.0, 325.0, 406.3, 507.8,
                                                634.8};  // ratio 1.25
  static constexpr std::array<double, 5> kF2 = {850.0, 1003.0, 1183.5, 1396.6,
                                                1648.0};  // ratio 1.18
  static constexpr std::array<double, 4> kF3 = {2000.0, 2380.0, 2832.2,
                                                3370.3};  // ratio 1.19
  // Tilt levels are spaced so the rolloff corners sit at ratios above
  // 2^(4/12) ~ 1.26 and a four-semitone resample cannot hop a speaker onto
  // a neighboring level. Q and breathiness are preserved exactly by a
  // resample, so their spacing only needs to exceed measurement noise; the
  // ranges stay moderate because needle-thin or washed-out formants deny
  // the LPC front end a stable pole to lock onto.
  static constexpr std::array<double, 4> kTilt = {0.22, 0.58, 0.83, 0.93};
  static constexpr std::array<double, 5> kQ = {0.55, 0.88, 1.40, 2.24, 3.58};
  // The top breath level is capped so aspiration noise does not drown the
  // pitch pulses: past ~11x the noise-driven formant ring can out-power the
  // periodic peak and autocorrelation pitch tracking loses its lock.
  static constexpr std::array<double, 5> kBreath = {0.22, 0.66, 1.98, 5.90,
                                                    11.0};
  const double span = std::min(160.0, 4.5 * static_cast<double>(n_speakers - 1));
  std::vector<SpeakerProfile> profiles;
  profiles.reserve(n_speakers);
  for (std::size_t s = 0; s < n_speakers; ++s) {
    SpeakerProfile p;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "spk%03zu", s + 1);
    p.speaker_id = buf;
    p.f0_base = 90.0 + span * static_cast<double>(s) /
                           static_cast<double>(n_speakers - 1);
    const std::size_t t = (37 * s) % 100;  // bijective on 0..99
    p.formants = {kF1[t % 5], kF2[(t / 5) % 5], kF3[(t / 25) % 4]};
    p.bandwidths = {115.0, 145.0, 200.0};
    const std::size_t v = (53 * s) % 100;  // second shuffle, decorrelated
    p.tilt_pole = kTilt[v % 4];
    p.bandwidth_scale = kQ[(v / 4) % 5];
    p.breathiness = kBreath[(v / 20) % 5];
    p.gain = 1.0;
    profiles.push_back(std::move(p));
  }
  return profiles;
}

inline AudioClip synth_utterance(const SpeakerProfile& profile, int sentence_id,
                                 Emotion emotion, int repetition,
                                 std::uint64_t master_seed) {
  if (repetition < 1 || repetition > 9) {
    throw ParamError("synth_utterance: repetition must lie in [1, 9]");
  }
  if (profile.f0_base < 90.0 || profile.f0_base > 250.0) {
    throw ParamError("synth_utterance: f0_base outside [90, 250]");
  }
  const auto& vowels = detail::sentence_vowels(sentence_id);
  const auto& mod = emotion_modifier(emotion);

  const int rate = 16000;
  const double fs = static_cast<double>(rate);

  // All randomness flows from one hash of the utterance identity, so the
  // result is independent of synthesis order.
  std::string key = profile.speaker_id + '|' + std::to_string(sentence_id) +
                    '|' + to_string(emotion) + '|' + std::to_string(repetition) +
                    '|' + std::to_string(master_seed);
  std::mt19937_64 rng(detail::fnv1a(key));
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Segment timing: repetition wobble, emotion rate, then rescaled into the
  // 1-2 s contract window.
  std::vector<double> seg_dur(vowels.size());
  double total = 0.0;
  for (auto& d : seg_dur) {
    d = 0.30 * (1.0 + 0.06 * uniform(rng)) / mod.rate_scale;
    total += d;
  }
  if (total < 1.05 || total > 1.95) {
    const double target = std::clamp(total, 1.05, 1.95);
    for (auto& d : seg_dur) d *= target / total;
    total = target;
  }
  const std::size_t n = static_cast<std::size_t>(std::lround(total * fs));

  // Per-sample formant targets: hold each vowel, linear 40 ms glide into the
  // next segment.
  const double f0_nom = profile.f0_base * mod.f0_scale;
  const std::size_t glide = static_cast<std::size_t>(0.040 * fs);
  std::vector<std::size_t> seg_start(vowels.size() + 1, 0);
  for (std::size_t v = 0; v < vowels.size(); ++v) {
    seg_start[v + 1] = std::min(
        n, seg_start[v] + static_cast<std::size_t>(std::lround(seg_dur[v] * fs)));
  }
  seg_start.back() = n;

  auto vowel_formants = [&](int vowel) {
    const auto& shape = detail::vowel_table()[static_cast<std::size_t>(vowel)];
    std::array<double, 3> f = {profile.formants[0] * shape.m1,
                               profile.formants[1] * shape.m2,
                               profile.formants[2] * shape.m3};
    // Vowel shaping can push neighbors together; keep the resonators ordered
    // and inside the band.
    f[1] = std::max(f[1], f[0] + 150.0);
    f[2] = std::max(f[2], f[1] + 200.0);
    f[2] = std::min(f[2], fs * 0.45);
    return f;
  };

  // Excitation: unit pulses from a phase accumulator with per-pulse jitter,
  // plus aspiration noise scaled by the speaker's breathiness. The noise
  // level is a pure speaker cue: emotions perturb only the pulse timing, so
  // the neutral-only training partition covers the test noise statistics.
  const double noise_amp = 0.0124 * profile.breathiness;
  std::vector<double> x(n, 0.0);
  {
    double phase = 1.0;
    double f0_pulse = f0_nom;
    for (std::size_t i = 0; i < n; ++i) {
      phase += f0_pulse / fs;
      if (phase >= 1.0) {
        phase -= 1.0;
        x[i] += 1.0;
        const double z = std::clamp(normal(rng), -2.5, 2.5);
        f0_pulse = f0_nom * (1.0 + mod.jitter * z);
      }
      x[i] += noise_amp * uniform(rng);
    }
  }

  // Spectral tilt: one-pole lowpass approximating the glottal rolloff, with
  // the pole (hence the rolloff corner) set by the speaker profile. A second,
  // fixed pole shared by every speaker steepens the rolloff above ~1.7 kHz,
  // as real glottal pulses are smooth rather than impulsive. Being common to
  // the whole corpus it carries no identity; it keeps the top octave from
  // filling with pulse harmonics that an all-pole fit would otherwise have
  // to spend poles on.
  {
    const double pole = std::clamp(profile.tilt_pole, 0.0, 0.98);
    const double kFixedPole = 0.32;
    double y1 = 0.0;
    double y2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      y1 = (1.0 - pole) * x[i] + pole * y1;
      y2 = (1.0 - kFixedPole) * y1 + kFixedPole * y2;
      x[i] = y2;
    }
  }

  // Cascade of three second-order resonators with time-varying centers.
  std::array<double, 3> rho{};
  for (std::size_t k = 0; k < 3; ++k) {
    const double bw = profile.bandwidths[k] * profile.bandwidth_scale;
    rho[k] = std::exp(-std::numbers::pi * bw / fs);
  }
  std::size_t seg = 0;
  std::array<double, 3> cur = vowel_formants(vowels[0]);
  std::array<double, 3> from = cur;
  std::array<std::array<double, 2>, 3> state{};  // y[n-1], y[n-2] per resonator
  for (std::size_t i = 0; i < n; ++i) {
    while (seg + 1 < vowels.size() && i >= seg_start[seg + 1]) {
      ++seg;
      from = cur;
    }
    const auto target = vowel_formants(vowels[seg]);
    const std::size_t into = i - seg_start[seg];
    const double mix = seg == 0 || into >= glide
                           ? 1.0
                           : static_cast<double>(into) / static_cast<double>(glide);
    double v = x[i];
    for (std::size_t k = 0; k < 3; ++k) {
      cur[k] = from[k] + (target[k] - from[k]) * mix;
      const double b = 2.0 * rho[k] *
                       std::cos(2.0 * std::numbers::pi * cur[k] / fs);
      const double c = -rho[k] * rho[k];
      const double a = 1.0 - b - c;
      const double y = a * v + b * state[k][0] + c * state[k][1];
      state[k][1] = state[k][0];
      state[k][0] = y;
      v = y;
    }
    x[i] = v;
  }

  // Remove the pulse-train DC offset the resonators pass through.
  {
    double prev_in = 0.0, prev_out = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double out = x[i] - prev_in + 0.995 * prev_out;
      prev_in = x[i];
      prev_out = out;
      x[i] = out;
    }
  }

  // 20 ms raised-cosine fades, then peak normalization.
  const std::size_t fade = std::min(n / 2, static_cast<std::size_t>(0.020 * fs));
  for (std::size_t i = 0; i < fade; ++i) {
    const double w =
        0.5 * (1.0 - std::cos(std::numbers::pi * static_cast<double>(i) /
                              static_cast<double>(fade)));
    x[i] *= w;
    x[n - 1 - i] *= w;
  }
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0) {
    const double scale = 0.5 * profile.gain / peak;
    for (double& v : x) v *= scale;
  }

  AudioClip clip;
  clip.sample_rate = rate;
  clip.samples = std::move(x);
  return clip;
}

inline std::string utterance_filename(const std::string& speaker_id,
                                      int sentence_id, Emotion emotion,
                                      int repetition) {
  return speaker_id + "_sent" + std::to_string(sentence_id) + '_' +
         to_string(emotion) + "_rep" + std::to_string(repetition) + ".wav";
}

// Protocol records for n speakers, in deterministic order. Paths are
// relative; no audio is synthesized.
inline std::vector<UtteranceRecord> corpus_records(std::size_t n_speakers) {
  auto profiles = make_profiles(n_speakers);
  std::vector<UtteranceRecord> records;
  records.reserve(n_speakers * 252);
  for (const auto& p : profiles) {
    for (int sentence = 1; sentence <= 8; ++sentence) {
      for (Emotion e : kAllEmotions) {
        if (sentence <= 4 && e != Emotion::kNeutral) continue;
        for (int rep = 1; rep <= 9; ++rep) {
          records.push_back({utterance_filename(p.speaker_id, sentence, e, rep),
                             p.speaker_id, sentence, e, rep});
        }
      }
    }
  }
  return records;
}

inline std::string build_corpus(std::size_t n_speakers,
                                const std::string& out_dir,
                                std::uint64_t seed) {
  auto profiles = make_profiles(n_speakers);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("build_corpus: cannot create " + out_dir);

  auto records = corpus_records(n_speakers);
  for (const auto& r : records) {
    const auto& p = profiles[static_cast<std::size_t>(
        std::stoi(r.speaker_id.substr(3)) - 1)];
    AudioClip clip = synth_utterance(p, r.sentence_id, r.emotion, r.repetition,
                                     seed);
    write_wav(clip, (std::filesystem::path(out_dir) / r.path).string());
  }
  const std::string manifest =
      (std::filesystem::path(out_dir) / "manifest.csv").string();
  save_manifest(records, manifest);
  return manifest;
}

}  // namespace spkid

#endif  // SPKID_SYNTH_HPP_
