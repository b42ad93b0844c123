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

#ifndef SPKID_PLDA_HPP_
#define SPKID_PLDA_HPP_

// Two-covariance PLDA backend.
//
// Generative model:  w = mu + y + eps,  y ~ N(0, Phi_b),  eps ~ N(0, Phi_w),
// where y is the speaker factor shared by all of a speaker's embeddings and
// eps is per-utterance noise. Both covariances are full; embeddings here are
// small (dim <= 80), so the low-rank factor form buys nothing.
//
// Verification score between a target and a test embedding is the
// log-likelihood ratio
//
//   ln p(w_t, w_s | same speaker) - ln p(w_t) - ln p(w_s).
//
// With u = w_t - mu, v = w_s - mu, the same-speaker joint of (u; v) has
// covariance [[T, B], [B, T]] with T = Phi_b + Phi_w, B = Phi_b. Rotating by
// the orthogonal map p = (u+v)/sqrt2, q = (u-v)/sqrt2 block-diagonalizes it
// into cov(p) = T + B and cov(q) = T - B = Phi_w, so
//
//   score = lnN(p | 0, T+B) + lnN(q | 0, Phi_w) - lnN(u | 0, T) - lnN(v | 0, T).
//
// The 2*pi constants cancel (2d dims on each side). The form is symmetric in
// (u, v) by construction, and collapses to exactly zero when Phi_b = 0. All
// three covariances are factorized once, making one score O(d^2).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spkid/types.hpp"

namespace spkid {

struct PldaModel {
  Eigen::VectorXd mu;
  Eigen::MatrixXd phi_b;  // between-speaker covariance, PSD
  Eigen::MatrixXd phi_w;  // within-speaker covariance, PD after flooring
  std::map<std::string, Eigen::VectorXd> enrolled;

  Eigen::Index dim() const { return mu.size(); }
};

struct PldaOptions {
  int n_iters = 20;
  double ridge = 1e-6;       // added to a singular sample covariance
  double eig_floor = 1e-8;   // smallest allowed eigenvalue of phi_w
};

namespace detail {

inline Eigen::MatrixXd floor_eigenvalues(const Eigen::MatrixXd& m, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(floor);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

// Marginal log-likelihood of one speaker's embeddings under the current
// model. With n observations, speaker mean deviation mbar and scatter about
// the speaker mean C:
//
//   -0.5 [ n d ln 2pi + (n-1) ln|Phi_w| + ln|Phi_w + n Phi_b|
//          + tr(Phi_w^-1 C) + n mbar^T (Phi_w + n Phi_b)^-1 mbar ]
inline double speaker_loglik(const Eigen::MatrixXd& phi_b,
                             const Eigen::MatrixXd& phi_w,
                             const Eigen::VectorXd& mbar,
                             const Eigen::MatrixXd& scatter, double n) {
  const double d = static_cast<double>(mbar.size());
  Eigen::LLT<Eigen::MatrixXd> llt_w(phi_w);
  Eigen::MatrixXd mixed = phi_w + n * phi_b;
  Eigen::LLT<Eigen::MatrixXd> llt_m(mixed);
  auto logdet = [](const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  };
  double quad_within = llt_w.solve(scatter).trace();
  double quad_mean = n * mbar.dot(llt_m.solve(mbar));
  return -0.5 * (n * d * std::log(2.0 * std::numbers::pi) +
                 (n - 1.0) * logdet(llt_w) + logdet(llt_m) + quad_within +
                 quad_mean);
}

}  // namespace detail

struct PldaTrainStats {
  std::vector<double> loglik_per_iter;
  bool ridge_applied = false;
};

inline PldaModel train_plda(const std::vector<Eigen::VectorXd>& embeddings,
                            const std::vector<std::string>& labels,
                            const PldaOptions& opts = {},
                            PldaTrainStats* stats = nullptr) {
  if (embeddings.size() != labels.size()) {
    throw ParamError("train_plda: embeddings/labels size mismatch");
  }
  if (embeddings.empty()) throw TrainError("train_plda: no embeddings");
  const Eigen::Index d = embeddings[0].size();
  if (d < 1) throw TrainError("train_plda: embedding dim < 1");
  for (const auto& e : embeddings) {
    if (e.size() != d) throw ParamError("train_plda: inconsistent embedding dims");
  }

  // Group by speaker; std::map keeps label order stable across runs.
  std::map<std::string, std::vector<Eigen::Index>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    groups[labels[i]].push_back(static_cast<Eigen::Index>(i));
  }
  if (groups.size() < 2) throw TrainError("train_plda: need >= 2 speakers");
  for (const auto& [id, idx] : groups) {
    if (idx.size() < 2) {
      throw TrainError("train_plda: speaker " + id + " has < 2 embeddings");
    }
  }
  const double n_total = static_cast<double>(embeddings.size());
  const double n_speakers = static_cast<double>(groups.size());

  Eigen::VectorXd mu = Eigen::VectorXd::Zero(d);
  for (const auto& e : embeddings) mu += e;
  mu /= n_total;

  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (const auto& e : embeddings) {
    Eigen::VectorXd c = e - mu;
    cov += c * c.transpose();
  }
  cov /= n_total;
  // Singular start would make the first E-step inversion blow up.
  Eigen::LLT<Eigen::MatrixXd> probe(cov);
  bool ridged = false;
  if (probe.info() != Eigen::Success ||
      probe.matrixL().toDenseMatrix().diagonal().minCoeff() < 1e-9) {
    cov += opts.ridge * Eigen::MatrixXd::Identity(d, d);
    ridged = true;
  }
  if (stats) stats->ridge_applied = ridged;

  Eigen::MatrixXd phi_b = cov / 2.0;
  Eigen::MatrixXd phi_w = cov / 2.0;

  // Per-speaker sufficient statistics, fixed across iterations.
  struct Group {
    double n;
    Eigen::VectorXd mbar;      // speaker mean minus mu
    Eigen::MatrixXd scatter;   // sum (w_i - speaker mean)(..)^T
  };
  std::vector<Group> gs;
  gs.reserve(groups.size());
  for (const auto& [id, idx] : groups) {
    Group g;
    g.n = static_cast<double>(idx.size());
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    for (Eigen::Index i : idx) mean += embeddings[static_cast<std::size_t>(i)];
    mean /= g.n;
    g.mbar = mean - mu;
    g.scatter = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i : idx) {
      Eigen::VectorXd c = embeddings[static_cast<std::size_t>(i)] - mean;
      g.scatter += c * c.transpose();
    }
    gs.push_back(std::move(g));
  }

  for (int iter = 0; iter < opts.n_iters; ++iter) {
    if (stats) {
      double ll = 0.0;
      for (const auto& g : gs) {
        ll += detail::speaker_loglik(phi_b, phi_w, g.mbar, g.scatter, g.n);
      }
      stats->loglik_per_iter.push_back(ll);
    }
    Eigen::MatrixXd phi_b_inv = phi_b.llt().solve(Eigen::MatrixXd::Identity(d, d));
    Eigen::MatrixXd phi_w_inv = phi_w.llt().solve(Eigen::MatrixXd::Identity(d, d));

    Eigen::MatrixXd acc_b = Eigen::MatrixXd::Zero(d, d);
    Eigen::MatrixXd acc_w = Eigen::MatrixXd::Zero(d, d);
    for (const auto& g : gs) {
      // Posterior of the speaker factor given the speaker's embeddings.
      Eigen::MatrixXd prec = phi_b_inv + g.n * phi_w_inv;
      Eigen::MatrixXd post = prec.llt().solve(Eigen::MatrixXd::Identity(d, d));
      Eigen::VectorXd yhat = post * (phi_w_inv * (g.n * g.mbar));
      acc_b += yhat * yhat.transpose() + post;
      // E[sum_i eps_i eps_i^T] = scatter + n ((mbar - yhat)(..)^T + post).
      Eigen::VectorXd r = g.mbar - yhat;
      acc_w += g.scatter + g.n * (r * r.transpose() + post);
    }
    phi_b = acc_b / n_speakers;
    phi_w = acc_w / n_total;
    // Keep phi_w invertible for the next E-step on degenerate data.
    if (phi_w.llt().info() != Eigen::Success) {
      phi_w += opts.ridge * Eigen::MatrixXd::Identity(d, d);
    }
  }

  PldaModel model;
  model.mu = std::move(mu);
  model.phi_b = detail::floor_eigenvalues(phi_b, 0.0);
  model.phi_w = detail::floor_eigenvalues(phi_w, opts.eig_floor);

  // Enroll training speakers by their mean embedding.
  std::size_t gi = 0;
  for (const auto& [id, idx] : groups) {
    model.enrolled[id] = gs[gi].mbar + model.mu;
    ++gi;
  }
  return model;
}

// Precomputed factorizations for repeated scoring against one model.
class PldaScorer {
 public:
  explicit PldaScorer(const PldaModel& model)
      : mu_(model.mu),
        llt_sum_(Eigen::MatrixXd(model.phi_w + 2.0 * model.phi_b)),
        llt_w_(model.phi_w),
        llt_t_(Eigen::MatrixXd(model.phi_w + model.phi_b)) {
    if (llt_sum_.info() != Eigen::Success || llt_w_.info() != Eigen::Success ||
        llt_t_.info() != Eigen::Success) {
      throw ParamError("PldaScorer: covariance not positive definite");
    }
    logdet_sum_ = logdet(llt_sum_);
    logdet_w_ = logdet(llt_w_);
    logdet_t_ = logdet(llt_t_);
  }

  double score(const Eigen::VectorXd& w_target, const Eigen::VectorXd& w_test) const {
    if (w_target.size() != mu_.size() || w_test.size() != mu_.size()) {
      throw ParamError("plda_score: embedding dim mismatch");
    }
    Eigen::VectorXd u = w_target - mu_;
    Eigen::VectorXd v = w_test - mu_;
    Eigen::VectorXd p = (u + v) / std::numbers::sqrt2;
    Eigen::VectorXd q = (u - v) / std::numbers::sqrt2;
    double h1 = logdet_sum_ + p.dot(llt_sum_.solve(p)) + logdet_w_ +
                q.dot(llt_w_.solve(q));
    double h0 = 2.0 * logdet_t_ + u.dot(llt_t_.solve(u)) + v.dot(llt_t_.solve(v));
    return -0.5 * (h1 - h0);
  }

 private:
  static double logdet(const Eigen::LLT<Eigen::MatrixXd>& llt) {
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }

  Eigen::VectorXd mu_;
  Eigen::LLT<Eigen::MatrixXd> llt_sum_;  // phi_w + 2 phi_b  (cov of p)
  Eigen::LLT<Eigen::MatrixXd> llt_w_;    // phi_w            (cov of q)
  Eigen::LLT<Eigen::MatrixXd> llt_t_;    // phi_w + phi_b    (marginal)
  double logdet_sum_ = 0.0;
  double logdet_w_ = 0.0;
  double logdet_t_ = 0.0;
};

inline double plda_score(const PldaModel& model, const Eigen::VectorXd& w_target,
                         const Eigen::VectorXd& w_test) {
  return PldaScorer(model).score(w_target, w_test);
}

struct PldaDecision {
  std::string speaker_id;
  std::vector<std::pair<std::string, double>> scores;
};

inline PldaDecision plda_identify(const PldaModel& model,
                                  const Eigen::VectorXd& w_test) {
  if (model.enrolled.empty()) throw StateError("plda_identify: no enrolled speakers");
  PldaScorer scorer(model);
  PldaDecision out;
  out.scores.reserve(model.enrolled.size());
  bool first = true;
  double best = 0.0;
  // map iteration is lexicographic, so strict > keeps the smallest id on ties.
  for (const auto& [id, mean] : model.enrolled) {
    double s = scorer.score(mean, w_test);
    out.scores.emplace_back(id, s);
    if (first || s > best) {
      best = s;
      out.speaker_id = id;
      first = false;
    }
  }
  return out;
}

// ---- persistence -----------------------------------------------------------
//
// Text format, one matrix row per line:
//   spkid-plda,1,<dim>,<n_enrolled>
//   mu values...
//   dim rows of phi_b
//   dim rows of phi_w
//   n_enrolled lines: speaker_id,values...

inline void save_plda(const PldaModel& model, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw IoError("save_plda: cannot open " + path);
  const Eigen::Index d = model.dim();
  f << "spkid-plda,1," << d << ',' << model.enrolled.size() << '\n';
  f.precision(17);
  auto row = [&f](const double* p, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) f << (i ? "," : "") << p[i];
    f << '\n';
  };
  row(model.mu.data(), d);
  for (Eigen::Index r = 0; r < d; ++r) {
    Eigen::VectorXd v = model.phi_b.row(r);
    row(v.data(), d);
  }
  for (Eigen::Index r = 0; r < d; ++r) {
    Eigen::VectorXd v = model.phi_w.row(r);
    row(v.data(), d);
  }
  for (const auto& [id, mean] : model.enrolled) {
    f << id;
    for (Eigen::Index i = 0; i < d; ++i) f << ',' << mean(i);
    f << '\n';
  }
  if (!f) throw IoError("save_plda: write failed for " + path);
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(ctx + ": bad number '" + s + "'");
  }
}

}  // namespace detail

inline PldaModel load_plda(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("load_plda: cannot open " + path);
  std::string line;
  if (!std::getline(f, line)) throw ParseError("load_plda: empty file " + path);
  auto head = detail::split_csv(line);
  if (head.size() != 4 || head[0] != "spkid-plda" || head[1] != "1") {
    throw ParseError("load_plda: bad header in " + path);
  }
  const long d = std::strtol(head[2].c_str(), nullptr, 10);
  const long n_enrolled = std::strtol(head[3].c_str(), nullptr, 10);
  if (d < 1) throw ParseError("load_plda: bad dimension in " + path);

  auto read_row = [&](Eigen::Index n, const char* what) {
    if (!std::getline(f, line)) {
      throw ParseError(std::string("load_plda: truncated at ") + what);
    }
    auto fields = detail::split_csv(line);
    if (static_cast<Eigen::Index>(fields.size()) != n) {
      throw ParseError(std::string("load_plda: dimension mismatch in ") + what);
    }
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      v(i) = detail::parse_double(fields[static_cast<std::size_t>(i)], "load_plda");
    }
    return v;
  };

  PldaModel model;
  model.mu = read_row(d, "mu");
  model.phi_b.resize(d, d);
  for (long r = 0; r < d; ++r) model.phi_b.row(r) = read_row(d, "phi_b");
  model.phi_w.resize(d, d);
  for (long r = 0; r < d; ++r) model.phi_w.row(r) = read_row(d, "phi_w");
  for (long e = 0; e < n_enrolled; ++e) {
    if (!std::getline(f, line)) throw ParseError("load_plda: truncated enrollment");
    auto fields = detail::split_csv(line);
    if (static_cast<long>(fields.size()) != d + 1) {
      throw ParseError("load_plda: enrollment dimension mismatch");
    }
    Eigen::VectorXd mean(d);
    for (long i = 0; i < d; ++i) {
      mean(i) = detail::parse_double(fields[static_cast<std::size_t>(i + 1)],
                                     "load_plda");
    }
    model.enrolled[fields[0]] = std::move(mean);
  }
  return model;
}

}  // namespace spkid

#endif  // SPKID_PLDA_HPP_
