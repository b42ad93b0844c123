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

#ifndef SPKID_CLASSIFIER_HPP_
#define SPKID_CLASSIFIER_HPP_

// Utterance-level backend: statistics pooling to a fixed-length embedding,
// then a one-vs-rest SVM trained with sequential minimal optimization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "spkid/types.hpp"

namespace spkid {

struct UtteranceEmbedding {
  std::vector<double> values;  // per-dim mean followed by per-dim std
  std::string source_method;
};

// Mean and population standard deviation over frames, concatenated.
inline UtteranceEmbedding pool_utterance(const FeatureMatrix& features) {
  if (features.n_frames == 0) throw ParamError("pool_utterance: empty matrix");
  const std::size_t d = features.dim;
  UtteranceEmbedding out;
  out.source_method = features.method;
  out.values.assign(2 * d, 0.0);
  for (std::size_t f = 0; f < features.n_frames; ++f) {
    const double* row = features.row(f);
    for (std::size_t j = 0; j < d; ++j) out.values[j] += row[j];
  }
  const double n = static_cast<double>(features.n_frames);
  for (std::size_t j = 0; j < d; ++j) out.values[j] /= n;
  for (std::size_t f = 0; f < features.n_frames; ++f) {
    const double* row = features.row(f);
    for (std::size_t j = 0; j < d; ++j) {
      double c = row[j] - out.values[j];
      out.values[d + j] += c * c;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    out.values[d + j] = std::sqrt(out.values[d + j] / n);
  }
  return out;
}

enum class Kernel { kLinear, kRbf };

inline std::string to_string(Kernel k) {
  return k == Kernel::kLinear ? "linear" : "rbf";
}

inline Kernel kernel_from_string(const std::string& s) {
  if (s == "linear") return Kernel::kLinear;
  if (s == "rbf") return Kernel::kRbf;
  throw ParamError("unknown kernel: " + s);
}

struct SvmConfig {
  Kernel kernel = Kernel::kRbf;
  double c = 10.0;
  double gamma = 0.0;  // 0 selects 1 / (dim * variance of standardized data)
  double tol = 1e-3;
  int max_passes = 10000;
  std::uint64_t seed = 42;
};

struct Scaler {
  std::vector<double> mean;
  std::vector<double> std_dev;  // floored at 1e-12

  std::vector<double> apply(const std::vector<double>& x) const {
    if (x.size() != mean.size()) throw ParamError("scaler: dimension mismatch");
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = (x[i] - mean[i]) / std_dev[i];
    }
    return out;
  }
};

struct BinarySvm {
  std::vector<double> alpha;  // dual weights in [0, C]
  double bias = 0.0;
};

struct SvmModel {
  std::vector<std::string> classes;  // lexicographically sorted
  Scaler scaler;
  Kernel kernel = Kernel::kRbf;
  double gamma = 0.0;
  double c = 10.0;
  std::size_t n_train = 0;
  std::size_t dim = 0;
  std::vector<double> train_data;  // standardized, row-major n_train x dim
  std::vector<int> train_class;    // class index per training row
  std::vector<BinarySvm> machines;  // one per class, one-vs-rest

  const double* train_row(std::size_t i) const { return &train_data[i * dim]; }

  double kernel_eval(const double* a, const double* b) const {
    if (kernel == Kernel::kLinear) {
      double dot = 0.0;
      for (std::size_t j = 0; j < dim; ++j) dot += a[j] * b[j];
      return dot;
    }
    double dist = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      double c2 = a[j] - b[j];
      dist += c2 * c2;
    }
    return std::exp(-gamma * dist);
  }

  // One-vs-rest decision value for class ci on a standardized input.
  double decision(std::size_t ci, const double* x) const {
    const BinarySvm& m = machines[ci];
    double u = m.bias;
    for (std::size_t i = 0; i < n_train; ++i) {
      if (m.alpha[i] == 0.0) continue;
      double y = train_class[i] == static_cast<int>(ci) ? 1.0 : -1.0;
      u += m.alpha[i] * y * kernel_eval(train_row(i), x);
    }
    return u;
  }
};

namespace detail {

// Platt's SMO over a precomputed Gram matrix. The threshold convention is
// u(x) = sum alpha_i y_i K(x_i, x) - b; the stored model flips the sign so
// decision values read u = sum + bias.
class SmoSolver {
 public:
  SmoSolver(const std::vector<double>& gram, const std::vector<double>& y,
            double c, double tol, int max_passes, std::uint64_t seed)
      : gram_(gram),
        y_(y),
        n_(y.size()),
        c_(c),
        tol_(tol),
        max_passes_(max_passes),
        rng_(seed),
        alpha_(y.size(), 0.0),
        error_(y.size()) {
    // With all alphas zero, u_i = 0 and E_i = -y_i.
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];
  }

  void solve() {
    bool examine_all = true;
    int passes = 0;
    while (passes < max_passes_) {
      int changed = 0;
      if (examine_all) {
        for (std::size_t i = 0; i < n_; ++i) changed += examine(i);
      } else {
        for (std::size_t i = 0; i < n_; ++i) {
          if (is_free(i)) changed += examine(i);
        }
      }
      ++passes;
      if (examine_all) {
        if (changed == 0) break;
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
    }
  }

  const std::vector<double>& alpha() const { return alpha_; }
  double bias() const { return -b_; }

 private:
  double k(std::size_t i, std::size_t j) const { return gram_[i * n_ + j]; }
  bool is_free(std::size_t i) const {
    return alpha_[i] > 0.0 && alpha_[i] < c_;
  }

  int examine(std::size_t i2) {
    const double y2 = y_[i2];
    const double a2 = alpha_[i2];
    const double e2 = error_[i2];
    const double r2 = e2 * y2;
    if (!((r2 < -tol_ && a2 < c_) || (r2 > tol_ && a2 > 0.0))) return 0;

    // Second choice: largest |E1 - E2| among free points.
    std::ptrdiff_t best = -1;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!is_free(i)) continue;
      double gap = std::fabs(error_[i] - e2);
      if (gap > best_gap) {
        best_gap = gap;
        best = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (best >= 0 && take_step(static_cast<std::size_t>(best), i2)) return 1;

    std::size_t start = rng_() % n_;
    for (std::size_t off = 0; off < n_; ++off) {
      std::size_t i1 = (start + off) % n_;
      if (is_free(i1) && take_step(i1, i2)) return 1;
    }
    start = rng_() % n_;
    for (std::size_t off = 0; off < n_; ++off) {
      std::size_t i1 = (start + off) % n_;
      if (take_step(i1, i2)) return 1;
    }
    return 0;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1_old = alpha_[i1];
    const double a2_old = alpha_[i2];
    const double y1 = y_[i1];
    const double y2 = y_[i2];
    const double e1 = error_[i1];
    const double e2 = error_[i2];
    const double s = y1 * y2;

    double lo, hi;
    if (s < 0.0) {
      lo = std::max(0.0, a2_old - a1_old);
      hi = std::min(c_, c_ + a2_old - a1_old);
    } else {
      lo = std::max(0.0, a1_old + a2_old - c_);
      hi = std::min(c_, a1_old + a2_old);
    }
    if (lo >= hi) return false;

    const double k11 = k(i1, i1);
    const double k12 = k(i1, i2);
    const double k22 = k(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;

    double a2_new;
    if (eta > 0.0) {
      a2_new = std::clamp(a2_old + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      // Objective is flat or concave along the constraint; test both ends.
      const double f1 = y1 * (e1 + b_) - a1_old * k11 - s * a2_old * k12;
      const double f2 = y2 * (e2 + b_) - s * a1_old * k12 - a2_old * k22;
      const double l1 = a1_old + s * (a2_old - lo);
      const double h1 = a1_old + s * (a2_old - hi);
      const double obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * k11 +
                            0.5 * lo * lo * k22 + s * lo * l1 * k12;
      const double obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * k11 +
                            0.5 * hi * hi * k22 + s * hi * h1 * k12;
      if (obj_lo < obj_hi - 1e-12) {
        a2_new = lo;
      } else if (obj_lo > obj_hi + 1e-12) {
        a2_new = hi;
      } else {
        a2_new = a2_old;
      }
    }
    if (std::fabs(a2_new - a2_old) < 1e-12 * (a2_new + a2_old + 1e-12)) {
      return false;
    }
    // The pair update is inside the box analytically; clamp away fp drift.
    const double a1_new =
        std::clamp(a1_old + s * (a2_old - a2_new), 0.0, c_);

    const double b1 = e1 + y1 * (a1_new - a1_old) * k11 +
                      y2 * (a2_new - a2_old) * k12 + b_;
    const double b2 = e2 + y1 * (a1_new - a1_old) * k12 +
                      y2 * (a2_new - a2_old) * k22 + b_;
    double b_new;
    if (a1_new > 0.0 && a1_new < c_) {
      b_new = b1;
    } else if (a2_new > 0.0 && a2_new < c_) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }

    const double d1 = y1 * (a1_new - a1_old);
    const double d2 = y2 * (a2_new - a2_old);
    const double db = b_new - b_;
    for (std::size_t i = 0; i < n_; ++i) {
      error_[i] += d1 * k(i1, i) + d2 * k(i2, i) - db;
    }
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    b_ = b_new;
    return true;
  }

  const std::vector<double>& gram_;
  const std::vector<double>& y_;
  std::size_t n_;
  double c_;
  double tol_;
  int max_passes_;
  std::mt19937_64 rng_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  double b_ = 0.0;
};

}  // namespace detail

inline SvmModel train_svm(const std::vector<UtteranceEmbedding>& embeddings,
                          const std::vector<std::string>& labels,
                          const SvmConfig& cfg = {}) {
  if (embeddings.size() != labels.size()) {
    throw ParamError("train_svm: embeddings/labels size mismatch");
  }
  if (embeddings.empty()) throw TrainError("train_svm: no training data");
  if (cfg.c <= 0.0) throw ParamError("train_svm: require C > 0");
  const std::size_t dim = embeddings[0].values.size();
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    if (embeddings[i].values.size() != dim) {
      throw ParamError("train_svm: inconsistent embedding dims");
    }
    if (!all_finite(embeddings[i].values)) {
      throw ParamError("train_svm: non-finite embedding at row " +
                       std::to_string(i));
    }
  }

  SvmModel model;
  model.kernel = cfg.kernel;
  model.c = cfg.c;
  model.dim = dim;
  model.n_train = embeddings.size();

  std::map<std::string, int> class_index;
  for (const auto& l : labels) class_index.emplace(l, 0);
  if (class_index.size() < 2) throw TrainError("train_svm: need >= 2 classes");
  for (auto& [id, idx] : class_index) {
    idx = static_cast<int>(model.classes.size());
    model.classes.push_back(id);
  }
  model.train_class.reserve(labels.size());
  for (const auto& l : labels) model.train_class.push_back(class_index[l]);

  const double n = static_cast<double>(model.n_train);
  model.scaler.mean.assign(dim, 0.0);
  model.scaler.std_dev.assign(dim, 0.0);
  for (const auto& e : embeddings) {
    for (std::size_t j = 0; j < dim; ++j) model.scaler.mean[j] += e.values[j];
  }
  for (std::size_t j = 0; j < dim; ++j) model.scaler.mean[j] /= n;
  for (const auto& e : embeddings) {
    for (std::size_t j = 0; j < dim; ++j) {
      double c2 = e.values[j] - model.scaler.mean[j];
      model.scaler.std_dev[j] += c2 * c2;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    model.scaler.std_dev[j] = std::max(std::sqrt(model.scaler.std_dev[j] / n), 1e-12);
  }

  model.train_data.resize(model.n_train * dim);
  for (std::size_t i = 0; i < model.n_train; ++i) {
    auto z = model.scaler.apply(embeddings[i].values);
    std::copy(z.begin(), z.end(), model.train_data.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }

  if (cfg.gamma > 0.0) {
    model.gamma = cfg.gamma;
  } else {
    // 1 / (dim * variance of the standardized matrix); the variance is ~1 by
    // construction but is computed rather than assumed.
    double mean_all = 0.0;
    for (double v : model.train_data) mean_all += v;
    mean_all /= static_cast<double>(model.train_data.size());
    double var_all = 0.0;
    for (double v : model.train_data) var_all += (v - mean_all) * (v - mean_all);
    var_all /= static_cast<double>(model.train_data.size());
    if (var_all <= 0.0) var_all = 1.0;
    model.gamma = 1.0 / (static_cast<double>(dim) * var_all);
  }

  std::vector<double> gram(model.n_train * model.n_train);
  for (std::size_t i = 0; i < model.n_train; ++i) {
    for (std::size_t j = i; j < model.n_train; ++j) {
      double v = model.kernel_eval(model.train_row(i), model.train_row(j));
      gram[i * model.n_train + j] = v;
      gram[j * model.n_train + i] = v;
    }
  }

  model.machines.resize(model.classes.size());
  for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
    std::vector<double> y(model.n_train);
    for (std::size_t i = 0; i < model.n_train; ++i) {
      y[i] = model.train_class[i] == static_cast<int>(ci) ? 1.0 : -1.0;
    }
    detail::SmoSolver solver(gram, y, cfg.c, cfg.tol, cfg.max_passes,
                             cfg.seed + ci);
    solver.solve();
    model.machines[ci].alpha = solver.alpha();
    model.machines[ci].bias = solver.bias();
  }
  return model;
}

struct SvmDecision {
  std::string speaker_id;
  std::vector<std::pair<std::string, double>> decisions;
};

inline SvmDecision svm_predict(const SvmModel& model,
                               const UtteranceEmbedding& embedding) {
  if (embedding.values.size() != model.dim) {
    throw ParamError("svm_predict: embedding length mismatch");
  }
  auto z = model.scaler.apply(embedding.values);
  SvmDecision out;
  out.decisions.reserve(model.classes.size());
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t ci = 0; ci < model.classes.size(); ++ci) {
    double u = model.decision(ci, z.data());
    out.decisions.emplace_back(model.classes[ci], u);
    // classes are sorted, so strict > keeps the smallest id on ties.
    if (u > best) {
      best = u;
      out.speaker_id = model.classes[ci];
    }
  }
  return out;
}

// ---- persistence -----------------------------------------------------------
//
//   spkid-svm,1,<dim>,<n_classes>,<n_train>,<kernel>,<gamma>,<C>
//   classes line, scaler mean, scaler std, training class indices,
//   n_train standardized rows, then per class "bias,alpha...".

inline void save_svm(const SvmModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("save_svm: cannot open " + path);
  f.precision(17);
  f << "spkid-svm,1," << model.dim << ',' << model.classes.size() << ','
    << model.n_train << ',' << to_string(model.kernel) << ',' << model.gamma
    << ',' << model.c << '\n';
  for (std::size_t i = 0; i < model.classes.size(); ++i) {
    f << (i ? "," : "") << model.classes[i];
  }
  f << '\n';
  auto row = [&f](const double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) f << (i ? "," : "") << p[i];
    f << '\n';
  };
  row(model.scaler.mean.data(), model.dim);
  row(model.scaler.std_dev.data(), model.dim);
  for (std::size_t i = 0; i < model.n_train; ++i) {
    f << (i ? "," : "") << model.train_class[i];
  }
  f << '\n';
  for (std::size_t i = 0; i < model.n_train; ++i) {
    row(model.train_row(i), model.dim);
  }
  for (const auto& m : model.machines) {
    f << m.bias;
    for (double a : m.alpha) f << ',' << a;
    f << '\n';
  }
  if (!f) throw IoError("save_svm: write failed for " + path);
}

inline SvmModel load_svm(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_svm: cannot open " + path);
  std::string line;
  auto next = [&](const char* what) {
    if (!std::getline(f, line)) {
      throw ParseError(std::string("load_svm: truncated at ") + what);
    }
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    return out;
  };
  auto head = next("header");
  if (head.size() != 8 || head[0] != "spkid-svm" || head[1] != "1") {
    throw ParseError("load_svm: bad header in " + path);
  }
  auto to_num = [](const std::string& s, const char* what) {
    try {
      return std::stod(s);
    } catch (const std::exception&) {
      throw ParseError(std::string("load_svm: bad number in ") + what);
    }
  };
  SvmModel model;
  model.dim = static_cast<std::size_t>(to_num(head[2], "dim"));
  const std::size_t n_classes = static_cast<std::size_t>(to_num(head[3], "classes"));
  model.n_train = static_cast<std::size_t>(to_num(head[4], "n_train"));
  model.kernel = kernel_from_string(head[5]);
  model.gamma = to_num(head[6], "gamma");
  model.c = to_num(head[7], "C");
  if (model.dim == 0 || n_classes < 2 || model.n_train == 0) {
    throw ParseError("load_svm: degenerate header in " + path);
  }

  model.classes = next("classes");
  if (model.classes.size() != n_classes) {
    throw ParseError("load_svm: class count mismatch");
  }
  auto parse_row = [&](const char* what) {
    auto fields = next(what);
    if (fields.size() != model.dim) {
      throw ParseError(std::string("load_svm: dimension mismatch in ") + what);
    }
    std::vector<double> v(model.dim);
    for (std::size_t i = 0; i < model.dim; ++i) v[i] = to_num(fields[i], what);
    return v;
  };
  model.scaler.mean = parse_row("scaler mean");
  model.scaler.std_dev = parse_row("scaler std");
  auto idx = next("train classes");
  if (idx.size() != model.n_train) {
    throw ParseError("load_svm: training index count mismatch");
  }
  model.train_class.reserve(model.n_train);
  for (const auto& s : idx) {
    int v = static_cast<int>(to_num(s, "train classes"));
    if (v < 0 || v >= static_cast<int>(n_classes)) {
      throw ParseError("load_svm: class index out of range");
    }
    model.train_class.push_back(v);
  }
  model.train_data.resize(model.n_train * model.dim);
  for (std::size_t i = 0; i < model.n_train; ++i) {
    auto v = parse_row("train data");
    std::copy(v.begin(), v.end(), model.train_data.begin() + static_cast<std::ptrdiff_t>(i * model.dim));
  }
  model.machines.resize(n_classes);
  for (std::size_t ci = 0; ci < n_classes; ++ci) {
    auto fields = next("machine");
    if (fields.size() != model.n_train + 1) {
      throw ParseError("load_svm: alpha count mismatch");
    }
    model.machines[ci].bias = to_num(fields[0], "machine");
    model.machines[ci].alpha.resize(model.n_train);
    for (std::size_t i = 0; i < model.n_train; ++i) {
      model.machines[ci].alpha[i] = to_num(fields[i + 1], "machine");
    }
  }
  return model;
}

}  // namespace spkid

#endif  // SPKID_CLASSIFIER_HPP_
