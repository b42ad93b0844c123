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
#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "spkid/dsp.hpp"
#include "spkid/types.hpp"

namespace spkid {

enum class Wavelet { kHaar, kDb4 };

inline std::string to_string(Wavelet w) {
  switch (w) {
    case Wavelet::kHaar: return "haar";
    case Wavelet::kDb4: return "db4";
  }
  throw ParamError("unknown wavelet");
}

inline Wavelet wavelet_from_string(const std::string& s) {
  if (s == "haar") return Wavelet::kHaar;
  if (s == "db4") return Wavelet::kDb4;
  throw ParamError("unknown wavelet: " + s);
}

// Orthonormal scaling (lowpass) filters; the analysis convention is
// correlation: a[k] = sum_n h[n] x[(2k+n) mod N].
inline const std::vector<double>& scaling_filter(Wavelet w) {
  static const std::vector<double> haar = {std::numbers::sqrt2 / 2.0,
                                           std::numbers::sqrt2 / 2.0};
  // Daubechies-4 (8 taps, 4 vanishing moments), spectral factorization of
  // the degree-3 Daubechies polynomial, rounded to double.
  static const std::vector<double> db4 = {
      0.2303778133088965008632912,   0.7148465705529156470899220,
      0.6308807679298589078817163,   -0.0279837694168598542114137,
      -0.1870348117190930840795707,  0.0308413818355607636272194,
      0.0328830116668851997354075,   -0.0105974017850690321048832};
  switch (w) {
    case Wavelet::kHaar: return haar;
    case Wavelet::kDb4: return db4;
  }
  throw ParamError("unknown wavelet");
}

// Quadrature mirror: g[n] = (-1)^n h[L-1-n].
inline std::vector<double> wavelet_filter(Wavelet w) {
  const auto& h = scaling_filter(w);
  const std::size_t L = h.size();
  std::vector<double> g(L);
  for (std::size_t n = 0; n < L; ++n) {
    g[n] = ((n % 2 == 0) ? 1.0 : -1.0) * h[L - 1 - n];
  }
  return g;
}

// One analysis step of the periodized orthonormal transform. Odd-length
// input is zero-padded by one sample first (flagged in `padded`).
struct DwtStep {
  std::vector<double> approx;
  std::vector<double> detail;
  bool padded = false;
};

inline DwtStep dwt_step(const std::vector<double>& signal, Wavelet wavelet) {
  DwtStep out;
  std::vector<double> x = signal;
  if (x.size() % 2 != 0) {
    x.push_back(0.0);
    out.padded = true;
  }
  if (x.empty()) throw ParamError("dwt_step: empty signal");

  const auto& h = scaling_filter(wavelet);
  const auto g = wavelet_filter(wavelet);
  const std::size_t N = x.size();
  const std::size_t half = N / 2;
  const std::size_t L = h.size();

  out.approx.resize(half);
  out.detail.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0, d = 0.0;
    for (std::size_t n = 0; n < L; ++n) {
      const double v = x[(2 * k + n) % N];
      a += h[n] * v;
      d += g[n] * v;
    }
    out.approx[k] = a;
    out.detail[k] = d;
  }
  return out;
}

// Full wavelet packet tree: both branches are split at every level.
// Leaves are ordered by tree path (approx branch first at each split).
inline std::vector<std::vector<double>> wpd_decompose(
    const std::vector<double>& signal, int depth, Wavelet wavelet) {
  if (depth < 1) throw ParamError("wpd_decompose: depth < 1");
  if (signal.size() < (std::size_t{1} << depth)) {
    throw ParamError("wpd_decompose: signal too short for depth " +
                     std::to_string(depth));
  }
  std::vector<std::vector<double>> level = {signal};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::vector<double>> next;
    next.reserve(level.size() * 2);
    for (const auto& node : level) {
      DwtStep s = dwt_step(node, wavelet);
      next.push_back(std::move(s.approx));
      next.push_back(std::move(s.detail));
    }
    level = std::move(next);
  }
  return level;
}

// DWT chain: recurse on the approximation branch only. Returns the detail
// of each level followed by the final approximation (depth+1 nodes).
inline std::vector<std::vector<double>> dwt_chain(const std::vector<double>& signal,
                                                  int depth, Wavelet wavelet) {
  if (depth < 1) throw ParamError("dwt_chain: depth < 1");
  if (signal.size() < (std::size_t{1} << depth)) {
    throw ParamError("dwt_chain: signal too short for depth " +
                     std::to_string(depth));
  }
  std::vector<std::vector<double>> nodes;
  std::vector<double> approx = signal;
  for (int d = 0; d < depth; ++d) {
    DwtStep s = dwt_step(approx, wavelet);
    nodes.push_back(std::move(s.detail));
    approx = std::move(s.approx);
  }
  nodes.push_back(std::move(approx));
  return nodes;
}

struct DwpdConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int depth = 3;
  Wavelet wavelet = Wavelet::kDb4;
  double log_floor = 1e-10;
};

// Hybrid features: log-energies of the DWT-chain nodes concatenated with
// log-energies of the wavelet packet leaves; dim = (depth+1) + 2^depth.
inline FeatureMatrix dwpd_features(const AudioClip& clip, const DwpdConfig& cfg) {
  FrameMatrix frames = frame_signal(clip, cfg.frame_ms, cfg.hop_ms, Window::kHamming);
  const std::size_t dim = static_cast<std::size_t>(cfg.depth + 1) +
                          (std::size_t{1} << cfg.depth);
  FeatureMatrix out;
  out.n_frames = frames.n_frames;
  out.dim = dim;
  out.method = "dwpd";
  out.frame_ms = cfg.frame_ms;
  out.hop_ms = cfg.hop_ms;
  out.sample_rate = clip.sample_rate;
  out.data.resize(out.n_frames * dim);

  auto log_energy = [&](const std::vector<double>& v) {
    double e = 0.0;
    for (double x : v) e += x * x;
    return std::log(std::max(e, cfg.log_floor));
  };

  std::vector<double> frame(frames.frame_len);
  for (std::size_t t = 0; t < frames.n_frames; ++t) {
    std::copy(frames.row(t), frames.row(t) + frames.frame_len, frame.begin());
    double* dst = out.row(t);
    std::size_t i = 0;
    for (const auto& node : dwt_chain(frame, cfg.depth, cfg.wavelet)) {
      dst[i++] = log_energy(node);
    }
    for (const auto& leaf : wpd_decompose(frame, cfg.depth, cfg.wavelet)) {
      dst[i++] = log_energy(leaf);
    }
  }
  return out;
}

}  // namespace spkid
