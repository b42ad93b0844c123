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

#ifndef SPKID_DISGUISE_HPP_
#define SPKID_DISGUISE_HPP_

// Voice disguise transforms: pitch shifting (resample + overlap-add
// time-stretch back to the original duration) and ring-modulation "electronic
// voice", plus the autocorrelation f0 estimator used to verify them.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "spkid/types.hpp"

namespace spkid {

enum class DisguiseEffect { kNone, kHighPitched, kLowPitched, kEvc };

inline std::string to_string(DisguiseEffect e) {
  switch (e) {
    case DisguiseEffect::kNone: return "none";
    case DisguiseEffect::kHighPitched: return "high";
    case DisguiseEffect::kLowPitched: return "low";
    case DisguiseEffect::kEvc: return "evc";
  }
  throw ParamError("unknown disguise effect");
}

inline DisguiseEffect disguise_effect_from_string(const std::string& s) {
  if (s == "none") return DisguiseEffect::kNone;
  if (s == "high" || s == "high_pitched") return DisguiseEffect::kHighPitched;
  if (s == "low" || s == "low_pitched") return DisguiseEffect::kLowPitched;
  if (s == "evc") return DisguiseEffect::kEvc;
  throw ParamError("unknown disguise effect: " + s);
}

struct DisguiseSpec {
  DisguiseEffect effect = DisguiseEffect::kNone;
  double semitones = 0.0;   // pitch effects only
  double carrier_hz = 50.0; // evc only

  void validate() const {
    switch (effect) {
      case DisguiseEffect::kNone:
        break;
      case DisguiseEffect::kHighPitched:
        if (semitones <= 0.0) {
          throw ParamError("high-pitched effect requires semitones > 0");
        }
        break;
      case DisguiseEffect::kLowPitched:
        if (semitones >= 0.0) {
          throw ParamError("low-pitched effect requires semitones < 0");
        }
        break;
      case DisguiseEffect::kEvc:
        if (!(carrier_hz > 10.0 && carrier_hz < 500.0)) {
          throw ParamError("evc carrier must lie in (10, 500) Hz");
        }
        break;
    }
  }
};

// Default magnitudes for the three named effects.
inline DisguiseSpec default_disguise_spec(DisguiseEffect e) {
  DisguiseSpec spec;
  spec.effect = e;
  if (e == DisguiseEffect::kHighPitched) spec.semitones = 4.0;
  if (e == DisguiseEffect::kLowPitched) spec.semitones = -4.0;
  return spec;
}

namespace detail {

inline double hermite_at(const std::vector<double>& x, double t) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
  const std::ptrdiff_t j = static_cast<std::ptrdiff_t>(std::floor(t));
  const double u = t - static_cast<double>(j);
  auto at = [&](std::ptrdiff_t i) {
    return x[static_cast<std::size_t>(std::clamp(i, std::ptrdiff_t{0}, n - 1))];
  };
  const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
  return p1 + 0.5 * u *
                  (p2 - p0 +
                   u * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                        u * (3.0 * (p1 - p2) + p3 - p0)));
}

// Read the signal at rate r: output[i] = x(i * r). r > 1 shortens.
inline std::vector<double> resample_by(const std::vector<double>& x, double r) {
  const std::size_t out_len = static_cast<std::size_t>(
      std::floor(static_cast<double>(x.size() - 1) / r)) + 1;
  std::vector<double> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    out[i] = hermite_at(x, static_cast<double>(i) * r);
  }
  return out;
}

// Overlap-add time-stretch with waveform-similarity alignment: Hann grains
// at 50% overlap, each analysis grain slid within +-tol samples to best match
// the natural continuation of the previous grain.
inline std::vector<double> wsola_stretch(const std::vector<double>& x,
                                         std::size_t target_len, int rate,
                                         double grain_ms = 30.0,
                                         double tol_ms = 5.0) {
  std::size_t grain = static_cast<std::size_t>(
      std::lround(grain_ms * 1e-3 * static_cast<double>(rate)));
  grain += grain % 2;  // even, so hop = grain/2 keeps the Hann sum flat
  const std::size_t hop = grain / 2;
  const std::ptrdiff_t tol = static_cast<std::ptrdiff_t>(
      std::lround(tol_ms * 1e-3 * static_cast<double>(rate)));
  if (x.size() < grain) {
    throw ParamError("pitch_shift: clip shorter than one stretch window");
  }

  std::vector<double> window(grain);
  for (std::size_t i = 0; i < grain; ++i) {
    // Periodic Hann: shifted copies at 50% overlap sum to exactly 1.
    window[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i /
                                      static_cast<double>(grain)));
  }

  const double ratio = static_cast<double>(target_len) /
                       static_cast<double>(x.size());
  const std::ptrdiff_t max_pos = static_cast<std::ptrdiff_t>(x.size() - grain);
  std::vector<double> acc(target_len + grain, 0.0);
  std::vector<double> norm(target_len + grain, 0.0);

  std::ptrdiff_t prev_pos = -1;
  for (std::size_t out_pos = 0;; out_pos += hop) {
    const std::ptrdiff_t nominal = std::clamp(
        static_cast<std::ptrdiff_t>(
            std::llround(static_cast<double>(out_pos) / ratio)),
        std::ptrdiff_t{0}, max_pos);

    std::ptrdiff_t pos = nominal;
    if (prev_pos >= 0) {
      // Reference: where the previous grain would continue unbroken.
      const std::ptrdiff_t ref =
          std::clamp(prev_pos + static_cast<std::ptrdiff_t>(hop),
                     std::ptrdiff_t{0}, max_pos);
      double ref_energy = 0.0;
      for (std::size_t i = 0; i < grain; ++i) {
        double v = x[static_cast<std::size_t>(ref) + i];
        ref_energy += v * v;
      }
      double best = -2.0;
      // Offsets visited in order of growing |delta| so ties keep the
      // smallest displacement (exact pass-through when ratio == 1).
      for (std::ptrdiff_t a = 0; a <= tol; ++a) {
        for (int sign = 0; sign < (a == 0 ? 1 : 2); ++sign) {
          const std::ptrdiff_t cand = nominal + (sign == 0 ? a : -a);
          if (cand < 0 || cand > max_pos) continue;
          double dot = 0.0, cand_energy = 0.0;
          const double* xc = &x[static_cast<std::size_t>(cand)];
          const double* xr = &x[static_cast<std::size_t>(ref)];
          for (std::size_t i = 0; i < grain; ++i) {
            dot += xc[i] * xr[i];
            cand_energy += xc[i] * xc[i];
          }
          const double denom = std::sqrt(cand_energy * ref_energy);
          const double ncc = denom > 1e-20 ? dot / denom : 0.0;
          if (ncc > best) {
            best = ncc;
            pos = cand;
          }
        }
      }
    }

    for (std::size_t i = 0; i < grain; ++i) {
      acc[out_pos + i] += window[i] * x[static_cast<std::size_t>(pos) + i];
      norm[out_pos + i] += window[i];
    }
    prev_pos = pos;
    if (out_pos + hop >= target_len) break;
  }

  std::vector<double> out(target_len);
  for (std::size_t i = 0; i < target_len; ++i) {
    out[i] = norm[i] > 1e-8 ? acc[i] / norm[i] : 0.0;
  }
  return out;
}

}  // namespace detail

inline AudioClip pitch_shift(const AudioClip& clip, double semitones) {
  if (std::fabs(semitones) > 12.0) {
    throw ParamError("pitch_shift: |semitones| must be <= 12");
  }
  if (clip.sample_rate <= 0) throw ParamError("pitch_shift: bad sample rate");
  if (clip.duration_s() < 0.1) {
    throw ParamError("pitch_shift: clip shorter than 100 ms");
  }
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  if (semitones == 0.0) {
    out.samples = clip.samples;
    return out;
  }
  const double r = std::exp2(semitones / 12.0);
  auto resampled = detail::resample_by(clip.samples, r);
  out.samples = detail::wsola_stretch(resampled, clip.samples.size(),
                                      clip.sample_rate);
  // Cubic interpolation can overshoot a full-scale input slightly.
  double peak = 0.0;
  for (double s : out.samples) peak = std::max(peak, std::fabs(s));
  if (peak > 1.0) {
    for (double& s : out.samples) s /= peak;
  }
  return out;
}

inline AudioClip evc_transform(const AudioClip& clip, double carrier_hz) {
  if (!(carrier_hz > 10.0 && carrier_hz < 500.0)) {
    throw ParamError("evc_transform: carrier must lie in (10, 500) Hz");
  }
  if (clip.sample_rate <= 0) throw ParamError("evc_transform: bad sample rate");
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.samples.resize(clip.samples.size());
  double in_peak = 0.0, out_peak = 0.0;
  const double w = 2.0 * std::numbers::pi * carrier_hz /
                   static_cast<double>(clip.sample_rate);
  for (std::size_t n = 0; n < clip.samples.size(); ++n) {
    out.samples[n] = clip.samples[n] * std::sin(w * static_cast<double>(n));
    in_peak = std::max(in_peak, std::fabs(clip.samples[n]));
    out_peak = std::max(out_peak, std::fabs(out.samples[n]));
  }
  if (in_peak > 0.0 && out_peak > 0.0) {
    const double scale = in_peak / out_peak;
    for (double& s : out.samples) s *= scale;
  }
  return out;
}

// Autocorrelation pitch oracle over the 60-500 Hz range.
inline double estimate_f0(const AudioClip& clip) {
  if (clip.sample_rate <= 0) throw ParamError("estimate_f0: bad sample rate");
  if (clip.duration_s() < 0.1) {
    throw ParamError("estimate_f0: clip shorter than 100 ms");
  }
  const double fs = static_cast<double>(clip.sample_rate);
  const std::size_t lag_min = static_cast<std::size_t>(std::floor(fs / 500.0));
  const std::size_t lag_max = static_cast<std::size_t>(std::ceil(fs / 60.0));
  const std::size_t n = clip.samples.size();
  if (lag_max + 2 >= n) throw ParamError("estimate_f0: clip too short for lag range");

  std::vector<double> r(lag_max + 2, 0.0);
  for (std::size_t tau = 0; tau < r.size(); ++tau) {
    double acc = 0.0;
    for (std::size_t i = 0; i + tau < n; ++i) {
      acc += clip.samples[i] * clip.samples[i + tau];
    }
    r[tau] = acc;
  }
  if (r[0] <= 0.0) throw UnvoicedError("estimate_f0: no signal energy");

  std::size_t best = 0;
  double best_val = -2.0;
  for (std::size_t tau = lag_min; tau <= lag_max; ++tau) {
    const double v = r[tau] / r[0];
    if (v > best_val) {
      best_val = v;
      best = tau;
    }
  }
  if (best_val < 0.3) {
    throw UnvoicedError("estimate_f0: no periodicity above threshold");
  }
  // Octave guard: prefer the smallest local-max lag nearly as strong as the
  // global one, so a sub-harmonic at 2x the period cannot halve the answer.
  for (std::size_t tau = lag_min; tau < best; ++tau) {
    const double v = r[tau] / r[0];
    if (v >= 0.9 * best_val && r[tau] >= r[tau - 1] && r[tau] >= r[tau + 1]) {
      best = tau;
      break;
    }
  }
  // Parabolic refinement around the winning lag.
  double delta = 0.0;
  const double den = r[best - 1] - 2.0 * r[best] + r[best + 1];
  if (std::fabs(den) > 1e-20) {
    delta = 0.5 * (r[best - 1] - r[best + 1]) / den;
    delta = std::clamp(delta, -0.5, 0.5);
  }
  return fs / (static_cast<double>(best) + delta);
}

inline AudioClip apply_disguise(const AudioClip& clip, const DisguiseSpec& spec) {
  spec.validate();
  switch (spec.effect) {
    case DisguiseEffect::kNone: {
      AudioClip out = clip;
      return out;
    }
    case DisguiseEffect::kHighPitched:
    case DisguiseEffect::kLowPitched:
      return pitch_shift(clip, spec.semitones);
    case DisguiseEffect::kEvc:
      return evc_transform(clip, spec.carrier_hz);
  }
  throw ParamError("apply_disguise: unknown effect");
}

}  // namespace spkid

#endif  // SPKID_DISGUISE_HPP_
