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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "spkid/dsp.hpp"
#include "spkid/types.hpp"

namespace spkid {

// ---------------------------------------------------------------------------
// Mel scale
// ---------------------------------------------------------------------------

inline double hz_to_mel(double f) {
  if (f < 0.0) throw ParamError("hz_to_mel: negative frequency");
  return 2595.0 * std::log10(1.0 + f / 700.0);
}

inline double mel_to_hz(double m) {
  if (m < 0.0) throw ParamError("mel_to_hz: negative mel");
  return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
}

// Triangular mel filterbank. Each row is a triangle sampled at the FFT bin
// frequencies and rescaled so its largest sampled weight is exactly 1.
struct MelFilterbank {
  std::vector<double> weights;  // n_filters * n_bins, row-major
  std::size_t n_filters = 0;
  std::size_t n_bins = 0;  // n_fft/2 + 1
  std::vector<double> centers_hz;

  const double* row(std::size_t i) const { return weights.data() + i * n_bins; }

  // energies[i] = weights row i . power
  void apply(const std::vector<double>& power, std::vector<double>& energies) const {
    energies.assign(n_filters, 0.0);
    for (std::size_t i = 0; i < n_filters; ++i) {
      const double* w = row(i);
      double acc = 0.0;
      for (std::size_t k = 0; k < n_bins; ++k) acc += w[k] * power[k];
      energies[i] = acc;
    }
  }
};

inline MelFilterbank mel_filterbank(std::size_t n_filters, std::size_t n_fft,
                                    int sample_rate, double fmin, double fmax) {
  if (n_filters < 1) throw ParamError("mel_filterbank: n_filters < 1");
  if (!is_power_of_two(n_fft)) throw ParamError("mel_filterbank: n_fft not a power of two");
  const double nyquist = sample_rate / 2.0;
  if (fmin < 0.0 || fmin >= fmax) throw ParamError("mel_filterbank: need 0 <= fmin < fmax");
  if (fmax > nyquist + 1e-9) {
    throw ParamError("mel_filterbank: fmax above Nyquist");
  }

  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> edges_hz(n_filters + 2);
  for (std::size_t i = 0; i < n_filters + 2; ++i) {
    const double mel = mel_lo + (mel_hi - mel_lo) * i / (n_filters + 1);
    edges_hz[i] = mel_to_hz(mel);
  }

  MelFilterbank fb;
  fb.n_filters = n_filters;
  fb.n_bins = n_fft / 2 + 1;
  fb.weights.assign(n_filters * fb.n_bins, 0.0);
  fb.centers_hz.resize(n_filters);

  const double bin_hz = static_cast<double>(sample_rate) / n_fft;
  for (std::size_t i = 0; i < n_filters; ++i) {
    const double lo = edges_hz[i], c = edges_hz[i + 1], hi = edges_hz[i + 2];
    fb.centers_hz[i] = c;
    double* w = fb.weights.data() + i * fb.n_bins;
    double peak = 0.0;
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = k * bin_hz;
      double v = 0.0;
      if (f > lo && f < c) {
        v = (f - lo) / (c - lo);
      } else if (f >= c && f < hi) {
        v = (hi - f) / (hi - c);
      }
      w[k] = v;
      peak = std::max(peak, v);
    }
    if (peak <= 0.0) {
      throw ParamError("mel_filterbank: degenerate triangle for filter " +
                       std::to_string(i) + " (edges collapse onto one bin)");
    }
    for (std::size_t k = 0; k < fb.n_bins; ++k) w[k] /= peak;
  }
  return fb;
}

// ---------------------------------------------------------------------------
// Orthonormal DCT-II: X(m) = sqrt(2/N) C_m sum_n x(n) cos((2n+1) m pi / 2N),
// C_0 = 1/sqrt(2), C_m = 1 otherwise.
// ---------------------------------------------------------------------------

inline std::vector<double> dct_ii(const double* x, std::size_t n,
                                  std::size_t n_coeffs) {
  if (n_coeffs > n) throw ParamError("dct_ii: n_coeffs > input length");
  std::vector<double> out(n_coeffs, 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t m = 0; m < n_coeffs; ++m) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      acc += x[i] * std::cos((2.0 * i + 1.0) * m * std::numbers::pi / (2.0 * n));
    }
    const double cm = (m == 0) ? 1.0 / std::numbers::sqrt2 : 1.0;
    out[m] = scale * cm * acc;
  }
  return out;
}

inline std::vector<double> dct_ii(const std::vector<double>& x, std::size_t n_coeffs) {
  return dct_ii(x.data(), x.size(), n_coeffs);
}

// Inverse of the orthonormal DCT-II (the DCT-III); full-length only.
inline std::vector<double> dct_ii_inverse(const std::vector<double>& X) {
  const std::size_t n = X.size();
  std::vector<double> out(n, 0.0);
  const double scale = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      const double cm = (m == 0) ? 1.0 / std::numbers::sqrt2 : 1.0;
      acc += cm * X[m] *
             std::cos((2.0 * i + 1.0) * m * std::numbers::pi / (2.0 * n));
    }
    out[i] = scale * acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// MFCC + deltas
// ---------------------------------------------------------------------------

struct MfccConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_filters = 26;
  std::size_t n_mfcc = 13;
  double preemphasis = 0.97;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 means Nyquist
  double log_floor = 1e-10;
  int delta_window = 2;  // N of the delta regression
};

inline std::vector<double> preemphasize(const std::vector<double>& x, double k) {
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  y[0] = x[0] * (1.0 - k);
  for (std::size_t n = 1; n < x.size(); ++n) y[n] = x[n] - k * x[n - 1];
  return y;
}

inline FeatureMatrix mfcc_static(const AudioClip& clip, const MfccConfig& cfg) {
  if (cfg.n_mfcc > cfg.n_filters) {
    throw ParamError("mfcc_static: n_mfcc > n_filters");
  }
  AudioClip pre{preemphasize(clip.samples, cfg.preemphasis), clip.sample_rate};
  FrameMatrix frames = frame_signal(pre, cfg.frame_ms, cfg.hop_ms, Window::kHamming);
  const std::size_t n_fft = next_power_of_two(frames.frame_len);
  const double fmax = cfg.fmax > 0.0 ? cfg.fmax : clip.sample_rate / 2.0;
  MelFilterbank fb = mel_filterbank(cfg.n_filters, n_fft, clip.sample_rate,
                                    cfg.fmin, fmax);

  FeatureMatrix out;
  out.n_frames = frames.n_frames;
  out.dim = cfg.n_mfcc;
  out.method = "mfcc";
  out.frame_ms = cfg.frame_ms;
  out.hop_ms = cfg.hop_ms;
  out.sample_rate = clip.sample_rate;
  out.data.resize(out.n_frames * out.dim);

  std::vector<double> energies;
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto power = power_spectrum(frames.row(t), frames.frame_len, n_fft);
    fb.apply(power, energies);
    for (double& e : energies) e = std::log(std::max(e, cfg.log_floor));
    auto cepstra = dct_ii(energies, cfg.n_mfcc);
    std::copy(cepstra.begin(), cepstra.end(), out.row(t));
  }
  return out;
}

// Delta regression of Eq.-style form d_t = sum_n n (c_{t+n} - c_{t-n}) / (2 sum n^2)
// with replicated-edge padding. Input and output are n_frames x dim.
inline FeatureMatrix delta(const FeatureMatrix& coeffs, int window) {
  if (window < 1) throw ParamError("delta: window < 1");
  if (coeffs.n_frames < 1) throw ParamError("delta: empty input");

  FeatureMatrix out = coeffs;
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += static_cast<double>(n) * n;
  denom *= 2.0;

  const long T = static_cast<long>(coeffs.n_frames);
  for (long t = 0; t < T; ++t) {
    for (std::size_t d = 0; d < coeffs.dim; ++d) {
      double acc = 0.0;
      for (int n = 1; n <= window; ++n) {
        const long hi = std::clamp<long>(t + n, 0, T - 1);
        const long lo = std::clamp<long>(t - n, 0, T - 1);
        acc += n * (coeffs.at(hi, d) - coeffs.at(lo, d));
      }
      out.at(t, d) = acc / denom;
    }
  }
  return out;
}

// Static MFCCs, their deltas, and delta-deltas (computed from the deltas),
// concatenated per frame: dim = 3 * n_mfcc.
inline FeatureMatrix mfcc_delta_delta(const AudioClip& clip, const MfccConfig& cfg) {
  FeatureMatrix stat = mfcc_static(clip, cfg);
  FeatureMatrix d1 = delta(stat, cfg.delta_window);
  FeatureMatrix d2 = delta(d1, cfg.delta_window);

  FeatureMatrix out;
  out.n_frames = stat.n_frames;
  out.dim = 3 * stat.dim;
  out.method = "mfcc_dd";
  out.frame_ms = stat.frame_ms;
  out.hop_ms = stat.hop_ms;
  out.sample_rate = stat.sample_rate;
  out.data.resize(out.n_frames * out.dim);
  for (std::size_t t = 0; t < out.n_frames; ++t) {
    double* dst = out.row(t);
    std::copy(stat.row(t), stat.row(t) + stat.dim, dst);
    std::copy(d1.row(t), d1.row(t) + stat.dim, dst + stat.dim);
    std::copy(d2.row(t), d2.row(t) + stat.dim, dst + 2 * stat.dim);
  }
  return out;
}

// ---------------------------------------------------------------------------
// LPC via Levinson-Durbin
// ---------------------------------------------------------------------------

struct LevinsonResult {
  std::vector<double> coeffs;  // alpha_1..alpha_p of s_n ~ sum alpha_k s_{n-k}
  double error = 0.0;          // final prediction error energy
  bool degenerate = false;     // zero energy or |reflection| >= 1
};

// Solves the Toeplitz normal equations R alpha = r from autocorrelation
// r(0..p). Returns the one-step predictor coefficients.
inline LevinsonResult levinson_durbin(const std::vector<double>& r, std::size_t p) {
  if (r.size() < p + 1) throw ParamError("levinson_durbin: need r(0..p)");
  LevinsonResult res;
  res.coeffs.assign(p, 0.0);
  if (r[0] <= 0.0) {
    res.degenerate = true;
    return res;
  }
  std::vector<double> a(p, 0.0), prev(p, 0.0);
  double err = r[0];
  for (std::size_t m = 1; m <= p; ++m) {
    double acc = r[m];
    for (std::size_t j = 1; j < m; ++j) acc -= a[j - 1] * r[m - j];
    const double k = acc / err;
    if (!(std::fabs(k) < 1.0)) {
      res.degenerate = true;
      res.coeffs.assign(p, 0.0);
      return res;
    }
    prev = a;
    a[m - 1] = k;
    for (std::size_t j = 1; j < m; ++j) a[j - 1] = prev[j - 1] - k * prev[m - j - 1];
    err *= (1.0 - k * k);
    if (err <= 0.0) {
      res.degenerate = true;
      res.coeffs.assign(p, 0.0);
      return res;
    }
  }
  res.coeffs = a;
  res.error = err;
  return res;
}

struct LpcConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t order = 12;
};

// Per-frame LPC coefficients under the predictor convention
// s_n ~= -sum_k a_k s_{n-k}, i.e. a_k is the negated Levinson output.
// Degenerate frames (zero energy, unstable recursion) emit the zero vector;
// the count is reported in the returned matrix's method tag consumer via
// n_flagged.
struct LpcFeatures {
  FeatureMatrix features;
  std::size_t n_flagged = 0;
};

inline LpcFeatures lpc_features(const AudioClip& clip, const LpcConfig& cfg) {
  if (cfg.order < 1) throw ParamError("lpc_features: order < 1");
  FrameMatrix frames = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, Window::kHamming);
  if (frames.frame_len <= cfg.order) {
    throw ParamError("lpc_features: frame length must exceed LPC order");
  }

  LpcFeatures out;
  out.features.n_frames = frames.n_frames;
  out.features.dim = cfg.order;
  out.features.method = "lpc";
  out.features.frame_ms = cfg.frame_ms;
  out.features.hop_ms = cfg.hop_ms;
  out.features.sample_rate = clip.sample_rate;
  out.features.data.assign(frames.n_frames * cfg.order, 0.0);

  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto r = autocorrelation(frames.row(t), frames.frame_len, cfg.order);
    auto ld = levinson_durbin(r, cfg.order);
    if (ld.degenerate) {
      ++out.n_flagged;
      continue;  // row stays zero
    }
    double* dst = out.features.row(t);
    for (std::size_t k = 0; k < cfg.order; ++k) dst[k] = -ld.coeffs[k];
  }
  return out;
}

// ---------------------------------------------------------------------------
// DCT features: orthonormal DCT-II applied to the raw windowed time-domain
// frame, keeping the first n_coeffs coefficients.
// ---------------------------------------------------------------------------

struct DctConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  std::size_t n_coeffs = 13;
};

inline FeatureMatrix dct_features(const AudioClip& clip, const DctConfig& cfg) {
  FrameMatrix frames = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, Window::kHamming);
  if (cfg.n_coeffs > frames.frame_len) {
    throw ParamError("dct_features: n_coeffs exceeds frame length");
  }
  FeatureMatrix out;
  out.n_frames = frames.n_frames;
  out.dim = cfg.n_coeffs;
  out.method = "dct";
  out.frame_ms = cfg.frame_ms;
  out.hop_ms = cfg.hop_ms;
  out.sample_rate = clip.sample_rate;
  out.data.resize(out.n_frames * out.dim);
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    auto coeffs = dct_ii(frames.row(t), frames.frame_len, cfg.n_coeffs);
    std::copy(coeffs.begin(), coeffs.end(), out.row(t));
  }
  return out;
}

}  // namespace spkid
