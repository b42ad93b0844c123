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

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "spkid/types.hpp"

namespace spkid {

enum class Window { kHamming, kRectangular };

// Frames of a signal, windowed in place. Row i starts at sample i*hop.
struct FrameMatrix {
  std::vector<double> data;  // n_frames * frame_len, row-major
  std::size_t n_frames = 0;
  std::size_t frame_len = 0;
  std::size_t hop = 0;
  int sample_rate = 0;
  double frame_ms = 0.0;
  double hop_ms = 0.0;

  const double* row(std::size_t i) const { return data.data() + i * frame_len; }
  double* row(std::size_t i) { return data.data() + i * frame_len; }
};

inline std::vector<double> hamming_window(std::size_t len) {
  std::vector<double> w(len, 1.0);
  if (len == 1) return w;
  for (std::size_t n = 0; n < len; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (len - 1));
  }
  return w;
}

inline FrameMatrix frame_signal(const AudioClip& clip, double frame_ms,
                                double hop_ms, Window window) {
  if (hop_ms <= 0.0 || frame_ms < hop_ms) {
    throw ParamError("frame_signal: require frame_ms >= hop_ms > 0");
  }
  const std::size_t frame_len =
      static_cast<std::size_t>(std::lround(frame_ms * clip.sample_rate / 1000.0));
  const std::size_t hop =
      static_cast<std::size_t>(std::lround(hop_ms * clip.sample_rate / 1000.0));
  if (frame_len == 0 || hop == 0) throw ParamError("frame_signal: zero-length frame or hop");
  if (clip.samples.size() < frame_len) {
    throw ParamError("frame_signal: clip shorter than one frame (" +
                     std::to_string(clip.samples.size()) + " < " +
                     std::to_string(frame_len) + " samples)");
  }

  FrameMatrix fm;
  fm.frame_len = frame_len;
  fm.hop = hop;
  fm.sample_rate = clip.sample_rate;
  fm.frame_ms = frame_ms;
  fm.hop_ms = hop_ms;
  fm.n_frames = (clip.samples.size() - frame_len) / hop + 1;
  fm.data.resize(fm.n_frames * frame_len);

  std::vector<double> w;
  if (window == Window::kHamming) w = hamming_window(frame_len);
  for (std::size_t i = 0; i < fm.n_frames; ++i) {
    const double* src = clip.samples.data() + i * hop;
    double* dst = fm.row(i);
    if (window == Window::kHamming) {
      for (std::size_t n = 0; n < frame_len; ++n) dst[n] = src[n] * w[n];
    } else {
      for (std::size_t n = 0; n < frame_len; ++n) dst[n] = src[n];
    }
  }
  return fm;
}

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

// In-place iterative radix-2 Cooley-Tukey, X_k = sum_n x_n e^{-2pi i nk/N}.
inline void fft_inplace(std::vector<std::complex<double>>& x) {
  const std::size_t n = x.size();
  if (!is_power_of_two(n)) throw ParamError("fft: length must be a power of two");
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(x[i], x[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> u = x[i + k];
        std::complex<double> v = x[i + k + len / 2] * w;
        x[i + k] = u + v;
        x[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

inline std::vector<std::complex<double>> fft_real(const double* frame,
                                                  std::size_t frame_len,
                                                  std::size_t n_fft) {
  if (!is_power_of_two(n_fft)) {
    throw ParamError("fft_real: n_fft must be a power of two");
  }
  if (n_fft < frame_len) throw ParamError("fft_real: n_fft < frame length");
  std::vector<std::complex<double>> x(n_fft, {0.0, 0.0});
  for (std::size_t i = 0; i < frame_len; ++i) x[i] = {frame[i], 0.0};
  fft_inplace(x);
  return x;
}

// |FFT_k|^2 for k = 0..n_fft/2, zero-padding the frame to n_fft.
inline std::vector<double> power_spectrum(const double* frame,
                                          std::size_t frame_len,
                                          std::size_t n_fft) {
  auto x = fft_real(frame, frame_len, n_fft);
  std::vector<double> p(n_fft / 2 + 1);
  for (std::size_t k = 0; k <= n_fft / 2; ++k) p[k] = std::norm(x[k]);
  return p;
}

inline std::vector<double> power_spectrum(const std::vector<double>& frame,
                                          std::size_t n_fft) {
  return power_spectrum(frame.data(), frame.size(), n_fft);
}

// Biased autocorrelation r(tau) = sum_n s(n) s(n+tau), tau = 0..max_lag.
// Biased so the Toeplitz system handed to Levinson-Durbin is PSD.
inline std::vector<double> autocorrelation(const double* frame, std::size_t len,
                                           std::size_t max_lag) {
  if (max_lag >= len) throw ParamError("autocorrelation: max_lag >= frame length");
  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) {
    double acc = 0.0;
    for (std::size_t n = 0; n + tau < len; ++n) acc += frame[n] * frame[n + tau];
    r[tau] = acc;
  }
  return r;
}

inline std::vector<double> autocorrelation(const std::vector<double>& frame,
                                           std::size_t max_lag) {
  return autocorrelation(frame.data(), frame.size(), max_lag);
}

}  // namespace spkid
