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
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace spkid {

inline constexpr const char* kVersion = "0.1.0";

// Error hierarchy. Callers that care about the failure class catch the
// specific type; everything derives from Error for catch-all handling.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Structurally broken input (bad RIFF header, truncated chunk, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Well-formed input in an encoding we do not handle (float WAV, 24-bit, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

// Text record parsing; messages carry the offending line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Invalid argument or violated precondition.
class ParamError : public Error {
 public:
  using Error::Error;
};

class TrainError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

// estimate_f0 found no usable periodicity.
class UnvoicedError : public Error {
 public:
  using Error::Error;
};

// Mono audio in [-1, 1] plus its sample rate. The unit of ingestion,
// synthesis and disguise.
struct AudioClip {
  std::vector<double> samples;
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

enum class FeatureMethod { kMfccDd, kLpc, kDwpd, kDct };

inline std::string to_string(FeatureMethod m) {
  switch (m) {
    case FeatureMethod::kMfccDd: return "mfcc_dd";
    case FeatureMethod::kLpc: return "lpc";
    case FeatureMethod::kDwpd: return "dwpd";
    case FeatureMethod::kDct: return "dct";
  }
  throw ParamError("unknown feature method");
}

inline FeatureMethod feature_method_from_string(const std::string& s) {
  if (s == "mfcc_dd") return FeatureMethod::kMfccDd;
  if (s == "lpc") return FeatureMethod::kLpc;
  if (s == "dwpd") return FeatureMethod::kDwpd;
  if (s == "dct") return FeatureMethod::kDct;
  throw ParamError("unknown feature method: " + s);
}

// Per-frame feature vectors, row-major, tagged with the extraction method
// and the frame geometry they were computed under.
struct FeatureMatrix {
  std::vector<double> data;  // n_frames * dim, row-major
  std::size_t n_frames = 0;
  std::size_t dim = 0;
  std::string method;
  double frame_ms = 0.0;
  double hop_ms = 0.0;
  int sample_rate = 0;

  double& at(std::size_t frame, std::size_t d) { return data[frame * dim + d]; }
  double at(std::size_t frame, std::size_t d) const {
    return data[frame * dim + d];
  }
  const double* row(std::size_t frame) const { return data.data() + frame * dim; }
  double* row(std::size_t frame) { return data.data() + frame * dim; }
};

inline bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace spkid
