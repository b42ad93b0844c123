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

// Release gate for the toolkit. Runs ten numbered checks covering the mel
// scale, delta regression, LPC recovery, wavelet transforms, DCT, PLDA
// scoring, the disguise effects, corpus protocol counts, a full 10-speaker
// experiment grid, and report determinism. One PASS/FAIL line per check;
// exit status 0 only when all ten pass.
//
// Usage: spkid_acceptance <path-to-spkid-cli>
// The CLI path is exercised by check 10 (byte-identical `evaluate` reruns).

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spkid/audio_io.hpp"
#include "spkid/classifier.hpp"
#include "spkid/disguise.hpp"
#include "spkid/dsp.hpp"
#include "spkid/eval.hpp"
#include "spkid/features.hpp"
#include "spkid/plda.hpp"
#include "spkid/synth.hpp"
#include "spkid/types.hpp"
#include "spkid/wavelet.hpp"

namespace fs = std::filesystem;

namespace {

struct CheckFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool cond, const std::string& msg) {
  if (!cond) throw CheckFailure(msg);
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- check 1: mel scale ----------------------------------------------------

std::string check_mel_scale() {
  auto t0 = std::chrono::steady_clock::now();
  const long double ref =
      2595.0L * std::log10(1.0L + 1000.0L / 700.0L);
  const double err = std::fabs(spkid::hz_to_mel(1000.0) - static_cast<double>(ref));
  require(err <= 1e-2, "hz_to_mel(1000) off by " + num(err));

  double prev = spkid::hz_to_mel(0.0);
  for (int i = 1; i < 10000; ++i) {
    const double f = 8000.0 * i / 9999.0;
    const double m = spkid::hz_to_mel(f);
    require(m > prev, "mel scale not strictly increasing at " + num(f) + " Hz");
    prev = m;
  }
  const double dt = seconds_since(t0);
  require(dt < 1.0, "mel check took " + num(dt) + " s, budget 1 s");
  return "hz_to_mel(1000) err " + num(err) + ", monotone over 10000 pts, " +
         num(dt) + " s";
}

// ---- check 2: delta regression ---------------------------------------------

std::string check_delta() {
  require(spkid::MfccConfig{}.delta_window == 2, "delta window default is not 2");

  spkid::FeatureMatrix constant;
  constant.n_frames = 12;
  constant.dim = 4;
  constant.data.resize(constant.n_frames * constant.dim);
  for (std::size_t t = 0; t < constant.n_frames; ++t) {
    for (std::size_t d = 0; d < constant.dim; ++d) {
      constant.at(t, d) = 3.5 - static_cast<double>(d);
    }
  }
  auto dc = spkid::delta(constant, 2);
  for (double v : dc.data) {
    require(v == 0.0, "delta of constant sequence is not exactly zero");
  }

  spkid::FeatureMatrix ramp;
  ramp.n_frames = 20;
  ramp.dim = 3;
  ramp.data.resize(ramp.n_frames * ramp.dim);
  const double slopes[3] = {0.25, -1.5, 7.0};
  for (std::size_t t = 0; t < ramp.n_frames; ++t) {
    for (std::size_t d = 0; d < ramp.dim; ++d) {
      ramp.at(t, d) = slopes[d] * static_cast<double>(t) + 0.3;
    }
  }
  auto dr = spkid::delta(ramp, 2);
  double worst = 0.0;
  for (std::size_t t = 2; t + 2 < ramp.n_frames; ++t) {
    for (std::size_t d = 0; d < ramp.dim; ++d) {
      worst = std::max(worst, std::fabs(dr.at(t, d) - slopes[d]));
    }
  }
  require(worst <= 1e-10, "ramp delta off slope by " + num(worst));
  return "constant -> exact 0, ramp slope err " + num(worst) +
         ", window defaults to 2";
}

// ---- check 3: LPC recovery -------------------------------------------------

// Step-up recursion: reflection coefficients (all |k|<1, hence stable) to
// one-step predictor coefficients alpha_1..alpha_p.
std::vector<double> reflection_to_predictor(const std::vector<double>& k) {
  const std::size_t p = k.size();
  std::vector<double> a(p, 0.0);
  for (std::size_t i = 1; i <= p; ++i) {
    std::vector<double> prev = a;
    a[i - 1] = k[i - 1];
    for (std::size_t j = 1; j < i; ++j) {
      a[j - 1] = prev[j - 1] - k[i - 1] * prev[i - j - 1];
    }
  }
  return a;
}

std::string check_lpc() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20250815);
  std::uniform_int_distribution<int> order_dist(1, 12);
  std::uniform_real_distribution<double> k_dist(-0.9, 0.9);

  const std::size_t frame_len = 4096;
  double worst = 0.0;
  int accepted = 0;
  while (accepted < 200) {
    const int p = order_dist(rng);
    std::vector<double> k(p);
    for (double& v : k) v = k_dist(rng);
    auto alpha = reflection_to_predictor(k);

    // Noiseless AR frame: the impulse response of 1/A(z).
    std::vector<double> h(frame_len, 0.0);
    h[0] = 1.0;
    for (std::size_t n = 1; n < frame_len; ++n) {
      double acc = 0.0;
      for (int j = 1; j <= p && static_cast<std::size_t>(j) <= n; ++j) {
        acc += alpha[j - 1] * h[n - j];
      }
      h[n] = acc;
    }
    // Slow-decaying draws would leave truncation bias; redraw those.
    double tail = 0.0;
    for (std::size_t n = frame_len - 128; n < frame_len; ++n) {
      tail = std::max(tail, std::fabs(h[n]));
    }
    if (tail > 1e-8) continue;
    ++accepted;

    auto r = spkid::autocorrelation(h, static_cast<std::size_t>(p));
    auto res = spkid::levinson_durbin(r, static_cast<std::size_t>(p));
    require(!res.degenerate, "levinson_durbin degenerate on stable AR frame");
    for (int j = 0; j < p; ++j) {
      // Stored features negate the predictor; compare in that convention.
      worst = std::max(worst, std::fabs(-res.coeffs[j] - (-alpha[j])));
    }
  }
  require(worst <= 1e-3, "AR recovery off by " + num(worst));

  // Levinson-Durbin against a direct dense solve of the same Toeplitz system.
  std::uniform_int_distribution<int> p_dist(1, 20);
  std::normal_distribution<double> noise(0.0, 1.0);
  double worst_solve = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int p = p_dist(rng);
    std::vector<double> x(256);
    for (double& v : x) v = noise(rng);
    auto r = spkid::autocorrelation(x, static_cast<std::size_t>(p));
    auto res = spkid::levinson_durbin(r, static_cast<std::size_t>(p));
    require(!res.degenerate, "levinson_durbin degenerate on white-noise frame");

    Eigen::MatrixXd T(p, p);
    Eigen::VectorXd rhs(p);
    for (int i = 0; i < p; ++i) {
      rhs(i) = r[static_cast<std::size_t>(i) + 1];
      for (int j = 0; j < p; ++j) T(i, j) = r[static_cast<std::size_t>(std::abs(i - j))];
    }
    Eigen::VectorXd direct = T.ldlt().solve(rhs);
    for (int j = 0; j < p; ++j) {
      worst_solve = std::max(worst_solve, std::fabs(res.coeffs[j] - direct(j)));
    }
  }
  require(worst_solve <= 1e-8,
          "Levinson vs direct solve off by " + num(worst_solve));

  const double dt = seconds_since(t0);
  require(dt < 10.0, "LPC check took " + num(dt) + " s, budget 10 s");
  return "200 AR frames err " + num(worst) + " (negated predictor sign), " +
         "1000 Toeplitz solves err " + num(worst_solve) + ", " + num(dt) + " s";
}

// ---- check 4: wavelets -----------------------------------------------------

// Adjoint of the periodized analysis step; the inverse for an orthonormal
// filter pair.
std::vector<double> wavelet_synthesize(const std::vector<double>& approx,
                                       const std::vector<double>& detail,
                                       spkid::Wavelet wavelet) {
  const auto h = spkid::scaling_filter(wavelet);
  const auto g = spkid::wavelet_filter(wavelet);
  const std::size_t n = 2 * approx.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t k = 0; k < approx.size(); ++k) {
    for (std::size_t i = 0; i < h.size(); ++i) {
      x[(2 * k + i) % n] += approx[k] * h[i] + detail[k] * g[i];
    }
  }
  return x;
}

std::string check_wavelets() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);

  double worst_pr = 0.0;
  for (auto w : {spkid::Wavelet::kHaar, spkid::Wavelet::kDb4}) {
    for (std::size_t n : {16u, 64u, 400u}) {
      std::vector<double> x(n);
      for (double& v : x) v = dist(rng);
      auto step = spkid::dwt_step(x, w);
      auto back = wavelet_synthesize(step.approx, step.detail, w);
      for (std::size_t i = 0; i < n; ++i) {
        worst_pr = std::max(worst_pr, std::fabs(back[i] - x[i]));
      }
    }
  }
  require(worst_pr <= 1e-10, "perfect reconstruction off by " + num(worst_pr));

  std::vector<double> x(512);
  for (double& v : x) v = dist(rng);
  double in_energy = 0.0;
  for (double v : x) in_energy += v * v;
  auto leaves = spkid::wpd_decompose(x, 3, spkid::Wavelet::kDb4);
  require(leaves.size() == 8, "depth-3 WPD did not yield 8 leaves");
  double out_energy = 0.0;
  for (const auto& leaf : leaves) {
    for (double v : leaf) out_energy += v * v;
  }
  const double energy_err = std::fabs(out_energy - in_energy);
  require(energy_err <= 1e-8,
          "WPD leaf energy differs from input by " + num(energy_err));

  spkid::AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.assign(16000, 0.0);
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    clip.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 220.0 * i / 16000.0);
  }
  for (int depth : {2, 3}) {
    spkid::DwpdConfig cfg;
    cfg.depth = depth;
    auto feats = spkid::dwpd_features(clip, cfg);
    const std::size_t expect =
        static_cast<std::size_t>(depth + 1) + (std::size_t{1} << depth);
    require(feats.dim == expect,
            "DWPD dim at depth " + std::to_string(depth) + " is " +
                std::to_string(feats.dim) + ", expected " + std::to_string(expect));
  }
  return "reconstruction err " + num(worst_pr) + ", leaf energy err " +
         num(energy_err) + ", dim = (depth+1)+2^depth";
}

// ---- check 5: DCT ----------------------------------------------------------

std::string check_dct() {
  const std::size_t n = 32;
  std::vector<double> ones(n, 1.0);
  auto X = spkid::dct_ii(ones, n);
  const double dc_err = std::fabs(X[0] - std::sqrt(static_cast<double>(n)));
  require(dc_err <= 1e-10, "DCT of constant: X(0) off sqrt(N) by " + num(dc_err));
  for (std::size_t i = 1; i < n; ++i) {
    require(std::fabs(X[i]) < 1e-10, "DCT of constant leaks into bin " +
                                         std::to_string(i));
  }

  double worst = 0.0;
  for (std::size_t size = 1; size <= 64; ++size) {
    // Rows of the transform applied to unit vectors give the matrix; C C^T
    // must be the identity.
    std::vector<std::vector<double>> rows(size);
    for (std::size_t j = 0; j < size; ++j) {
      std::vector<double> e(size, 0.0);
      e[j] = 1.0;
      rows[j] = spkid::dct_ii(e, size);
    }
    for (std::size_t a = 0; a < size; ++a) {
      for (std::size_t b = 0; b < size; ++b) {
        double dot = 0.0;
        for (std::size_t j = 0; j < size; ++j) dot += rows[j][a] * rows[j][b];
        worst = std::max(worst, std::fabs(dot - (a == b ? 1.0 : 0.0)));
      }
    }
  }
  require(worst <= 1e-10, "DCT orthonormality off by " + num(worst));
  return "X(0)=sqrt(N) err " + num(dc_err) + ", orthonormal to " + num(worst) +
         " for N<=64";
}

// ---- check 6: PLDA scoring -------------------------------------------------

std::string check_plda() {
  const int d = 16;
  std::mt19937_64 rng(6);
  std::normal_distribution<double> noise(0.0, 1.0);
  auto random_spd = [&](double ridge) {
    Eigen::MatrixXd a(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) a(i, j) = noise(rng);
    }
    return Eigen::MatrixXd(a * a.transpose() / d +
                           ridge * Eigen::MatrixXd::Identity(d, d));
  };

  spkid::PldaModel model;
  model.mu = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < d; ++i) model.mu(i) = noise(rng);
  model.phi_b = random_spd(0.1);
  model.phi_w = random_spd(0.2);

  double worst_sym = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a(i) = noise(rng);
      b(i) = noise(rng);
    }
    const double s_ab = spkid::plda_score(model, a, b);
    const double s_ba = spkid::plda_score(model, b, a);
    worst_sym = std::max(worst_sym, std::fabs(s_ab - s_ba));
  }
  require(worst_sym <= 1e-9, "score asymmetry " + num(worst_sym));

  spkid::PldaModel flat = model;
  flat.phi_b = Eigen::MatrixXd::Zero(d, d);
  double worst_flat = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::VectorXd a(d), b(d);
    for (int i = 0; i < d; ++i) {
      a(i) = noise(rng);
      b(i) = noise(rng);
    }
    worst_flat = std::max(worst_flat, std::fabs(spkid::plda_score(flat, a, b)));
  }
  require(worst_flat <= 1e-9,
          "phi_b = 0 should zero all scores, got " + num(worst_flat));

  // Two Gaussian speaker clusters: same-speaker pairs must outscore
  // cross-speaker pairs after EM training.
  std::vector<Eigen::VectorXd> embeddings;
  std::vector<std::string> labels;
  Eigen::VectorXd centers[2] = {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Zero(d)};
  for (int i = 0; i < d; ++i) {
    centers[0](i) = noise(rng) * 3.0;
    centers[1](i) = noise(rng) * 3.0;
  }
  for (int s = 0; s < 2; ++s) {
    for (int i = 0; i < 40; ++i) {
      Eigen::VectorXd v = centers[s];
      for (int j = 0; j < d; ++j) v(j) += 0.5 * noise(rng);
      embeddings.push_back(v);
      labels.push_back(s == 0 ? "spk_a" : "spk_b");
    }
  }
  auto trained = spkid::train_plda(embeddings, labels, spkid::PldaOptions{});
  double same = 0.0, cross = 0.0;
  int n_same = 0, n_cross = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      const double s = spkid::plda_score(trained, embeddings[i], embeddings[j]);
      if (labels[i] == labels[j]) {
        same += s;
        ++n_same;
      } else {
        cross += s;
        ++n_cross;
      }
    }
  }
  same /= n_same;
  cross /= n_cross;
  require(same > cross, "mean same-speaker score " + num(same) +
                            " not above cross-speaker " + num(cross));
  return "symmetry " + num(worst_sym) + ", phi_b=0 scores " + num(worst_flat) +
         ", same " + num(same) + " > cross " + num(cross);
}

// ---- check 7: disguise effects ---------------------------------------------

// Damped-oscillator pulse train: a voiced-like signal with unambiguous f0.
spkid::AudioClip pulse_train(double f0, double seconds) {
  spkid::AudioClip clip;
  clip.sample_rate = 16000;
  const auto n = static_cast<std::size_t>(seconds * clip.sample_rate);
  clip.samples.assign(n, 0.0);
  const double period = clip.sample_rate / f0;
  for (double pos = 0.0; pos < static_cast<double>(n); pos += period) {
    const auto start = static_cast<std::size_t>(pos);
    for (std::size_t i = 0; i < 48 && start + i < n; ++i) {
      clip.samples[start + i] +=
          std::exp(-0.12 * static_cast<double>(i)) *
          std::cos(2.0 * std::numbers::pi * 0.05 * static_cast<double>(i));
    }
  }
  double peak = 0.0;
  for (double v : clip.samples) peak = std::max(peak, std::fabs(v));
  for (double& v : clip.samples) v *= 0.5 / peak;
  return clip;
}

std::string check_disguise() {
  auto clip = pulse_train(140.0, 1.0);
  const double base_f0 = spkid::estimate_f0(clip);
  double worst_ratio = 0.0;
  for (double semis : {4.0, -4.0, 12.0, -12.0}) {
    auto shifted = spkid::pitch_shift(clip, semis);
    const double target = std::pow(2.0, semis / 12.0);
    const double ratio = spkid::estimate_f0(shifted) / base_f0;
    const double rel = std::fabs(ratio / target - 1.0);
    require(rel <= 0.03, "f0 ratio after " + num(semis) + " semitones off by " +
                             num(100.0 * rel) + "%");
    worst_ratio = std::max(worst_ratio, rel);
    const double dur_rel =
        std::fabs(static_cast<double>(shifted.samples.size()) /
                      static_cast<double>(clip.samples.size()) -
                  1.0);
    require(dur_rel <= 0.01, "pitch shift changed duration by " +
                                 num(100.0 * dur_rel) + "%");
  }

  // Ring modulation of a pure tone: energy moves to f0 +/- carrier.
  spkid::AudioClip tone;
  tone.sample_rate = 16000;
  tone.samples.resize(16384);
  for (std::size_t i = 0; i < tone.samples.size(); ++i) {
    tone.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 300.0 * i / 16000.0);
  }
  auto evc = spkid::evc_transform(tone, 50.0);
  require(evc.samples.size() == tone.samples.size(),
          "EVC changed the sample count");
  auto spec = spkid::power_spectrum(evc.samples.data(), evc.samples.size(),
                                    evc.samples.size());
  const double bin_hz = 16000.0 / 16384.0;
  auto argmax = [&](std::size_t skip_lo, std::size_t skip_hi) {
    std::size_t best = 0;
    double best_v = -1.0;
    for (std::size_t i = 1; i < spec.size(); ++i) {
      if (i >= skip_lo && i <= skip_hi) continue;
      if (spec[i] > best_v) {
        best_v = spec[i];
        best = i;
      }
    }
    return best;
  };
  const std::size_t first = argmax(spec.size(), spec.size());
  const std::size_t second = argmax(first - 3, first + 3);
  const double f_low = std::min(first, second) * bin_hz;
  const double f_high = std::max(first, second) * bin_hz;
  require(std::fabs(f_low - 250.0) <= bin_hz,
          "lower sideband at " + num(f_low) + " Hz, expected 250");
  require(std::fabs(f_high - 350.0) <= bin_hz,
          "upper sideband at " + num(f_high) + " Hz, expected 350");
  return "worst f0 ratio err " + num(100.0 * worst_ratio) +
         "%, sidebands at " + num(f_low) + "/" + num(f_high) +
         " Hz, durations preserved";
}

// ---- check 8: corpus protocol counts ---------------------------------------

std::string check_protocol(const fs::path& scratch) {
  const fs::path dir = scratch / "corpus50";
  auto manifest = spkid::build_corpus(50, dir.string(), 42);
  auto records = spkid::load_manifest(manifest);
  std::size_t train = 0, test = 0;
  for (const auto& r : records) {
    ++(r.sentence_id <= 4 ? train : test);
  }
  std::error_code ec;
  fs::remove_all(dir, ec);  // ~630 MB; reclaim before the grid run
  require(train == 1800, "train partition " + std::to_string(train) +
                             ", expected 1800");
  require(test == 10800, "test partition " + std::to_string(test) +
                             ", expected 10800");
  require(records.size() == 12600, "total " + std::to_string(records.size()) +
                                       ", expected 12600");
  return "50 speakers -> 1800 train / 10800 test / 12600 total";
}

// ---- check 9: end-to-end grid ----------------------------------------------

std::string check_grid(const fs::path& scratch, std::string* manifest_out) {
  auto t0 = std::chrono::steady_clock::now();
  const fs::path dir = scratch / "corpus10";
  auto manifest = spkid::build_corpus(10, dir.string(), 42);
  *manifest_out = manifest;

  spkid::ExperimentConfig cfg;
  cfg.manifest_path = manifest;
  auto report = spkid::run_experiment(cfg);

  std::cout << "        method      ";
  for (auto e : cfg.effects) std::cout << "  " << spkid::to_string(e);
  std::cout << "\n";
  for (const auto& m : cfg.methods) {
    std::printf("        %-12s", m.c_str());
    for (auto e : cfg.effects) {
      std::printf("  %5.1f", report.cell(m, e).accuracy * 100.0);
    }
    std::printf("\n");
  }

  const auto& clean_mfcc = report.cell("mfcc_dd", spkid::DisguiseEffect::kNone);
  require(clean_mfcc.accuracy >= 0.90,
          "clean mfcc_dd accuracy " + num(clean_mfcc.accuracy) + " below 0.90");
  for (const auto& c : report.cells) {
    require(c.n_total == 2160, "cell n_total " + std::to_string(c.n_total) +
                                   ", expected 2160");
    require(c.accuracy >= 0.30, "cell (" + c.method + ", " +
                                    spkid::to_string(c.effect) +
                                    ") accuracy " + num(c.accuracy) +
                                    " below 0.30");
  }
  for (const auto& m : cfg.methods) {
    const double clean = report.cell(m, spkid::DisguiseEffect::kNone).accuracy;
    for (auto e : cfg.effects) {
      if (e == spkid::DisguiseEffect::kNone) continue;
      const double disguised = report.cell(m, e).accuracy;
      require(clean >= disguised - 0.02,
              "method " + m + ": clean " + num(clean) + " below " +
                  spkid::to_string(e) + " " + num(disguised) + " - 0.02");
    }
  }
  const double dt = seconds_since(t0);
  require(dt < 600.0, "grid took " + num(dt) + " s, budget 600 s");
  return "clean mfcc_dd " + num(clean_mfcc.accuracy * 100.0) +
         "%, all 20 cells >= 30%, clean >= disguised - 2pts, " + num(dt) + " s";
}

// ---- check 10: determinism -------------------------------------------------

std::string check_determinism(const fs::path& scratch, const std::string& cli,
                              const std::string& manifest10) {
  require(!cli.empty(), "CLI path argument missing (argv[1])");
  require(!manifest10.empty(), "10-speaker corpus unavailable (check 9 ran?)");

  // Reduced grid so two full CLI runs stay cheap.
  auto records = spkid::load_manifest(manifest10);
  std::vector<spkid::UtteranceRecord> subset;
  for (const auto& r : records) {
    const bool train = r.sentence_id <= 2 && r.repetition <= 3;
    const bool test = r.sentence_id == 5 && r.repetition <= 2 &&
                      (r.emotion == spkid::Emotion::kNeutral ||
                       r.emotion == spkid::Emotion::kSad);
    if (train || test) subset.push_back(r);
  }
  const fs::path corpus_dir = fs::path(manifest10).parent_path();
  const std::string small = (corpus_dir / "manifest_small.csv").string();
  spkid::save_manifest(subset, small);

  const std::string r1 = (scratch / "run1.json").string();
  const std::string r2 = (scratch / "run2.json").string();
  const std::string base = "\"" + cli + "\" evaluate --manifest \"" + small +
                           "\" --methods mfcc_dd,dct --effects none,evc"
                           " --seed 42 --format json --out ";
  for (const auto& out : {r1, r2}) {
    const int rc = std::system((base + "\"" + out + "\"").c_str());
    require(rc == 0, "evaluate exited with status " + std::to_string(rc));
  }
  require(read_file(r1) == read_file(r2),
          "two evaluate runs with identical config+seed differ");

  // Same property for the in-process API across all formats.
  spkid::ExperimentConfig cfg;
  cfg.manifest_path = small;
  cfg.methods = {"mfcc_dd", "dct"};
  cfg.effects = {spkid::DisguiseEffect::kNone, spkid::DisguiseEffect::kEvc};
  auto a = spkid::run_experiment(cfg);
  auto b = spkid::run_experiment(cfg);
  for (auto fmt : {spkid::ReportFormat::kMarkdown, spkid::ReportFormat::kCsv,
                   spkid::ReportFormat::kJson}) {
    require(spkid::emit_report(a, fmt) == spkid::emit_report(b, fmt),
            "in-process reruns differ");
  }
  return "CLI evaluate reruns byte-identical; in-process reruns identical in "
         "all formats";
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";

  const fs::path scratch =
      fs::temp_directory_path() / ("spkid_acceptance_" + std::to_string(::getpid()));
  std::error_code ec;
  fs::remove_all(scratch, ec);
  fs::create_directories(scratch);

  std::string manifest10;
  const std::vector<std::pair<std::string, std::function<std::string()>>> checks = {
      {"mel scale", check_mel_scale},
      {"delta regression", check_delta},
      {"LPC recovery", check_lpc},
      {"wavelet transforms", check_wavelets},
      {"DCT orthonormality", check_dct},
      {"PLDA scoring", check_plda},
      {"disguise effects", check_disguise},
      {"corpus protocol", [&] { return check_protocol(scratch); }},
      {"end-to-end grid", [&] { return check_grid(scratch, &manifest10); }},
      {"determinism", [&] { return check_determinism(scratch, cli, manifest10); }},
  };

  int passed = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    std::string verdict, detail;
    try {
      detail = checks[i].second();
      verdict = "PASS";
      ++passed;
    } catch (const std::exception& e) {
      verdict = "FAIL";
      detail = e.what();
    }
    std::printf("[%2zu/10] %s  %s: %s\n", i + 1, verdict.c_str(),
                checks[i].first.c_str(), detail.c_str());
    std::fflush(stdout);
  }

  fs::remove_all(scratch, ec);
  std::printf("ACCEPTANCE: %d/10 checks passed\n", passed);
  return passed == static_cast<int>(checks.size()) ? 0 : 1;
}
