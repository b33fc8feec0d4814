// SPDX-License-Identifier: Apache-2.0
// Helpers shared by the unit and acceptance tests: random instances and
// finite-difference oracles that only call forward (never backward) code.
#ifndef UISRNN_TESTS_TEST_UTIL_H_
#define UISRNN_TESTS_TEST_UTIL_H_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "uisrnn/model.h"

namespace uisrnn::testing {

/// Random restricted-growth labels with at most `max_speakers` speakers.
inline LabelSequence random_labels(std::mt19937_64 &rng, int length, int max_speakers,
                                   double stay_prob = 0.4) {
  std::vector<int> y{1};
  int k = 1;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 1; t < length; ++t) {
    if (u(rng) < stay_prob) {
      y.push_back(y.back());
      continue;
    }
    std::uniform_int_distribution<int> pick(1, std::min(k + 1, max_speakers));
    const int next = pick(rng);
    y.push_back(next);
    k = std::max(k, next);
  }
  return LabelSequence(y);
}

inline EmbeddingSequence random_embeddings(std::mt19937_64 &rng, int length, int dim,
                                           double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::MatrixXd x(length, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = n(rng);
  return EmbeddingSequence(x);
}

inline ModelParams random_model(std::uint64_t seed, NetDims dims, double gain = 1.0,
                                double sigma2 = 0.5, double p0 = 0.6, double alpha = 1.0) {
  ModelParams p;
  p.net = NetParams::random(dims, seed, gain);
  p.emission.log_sigma2 = std::log(sigma2);
  p.prior = {p0, alpha};
  return p;
}

/// Central-difference gradient of ln p(X | Y) with respect to every network
/// parameter (flattened in NetParams order).
inline Eigen::VectorXd fd_net_gradient(const EmbeddingSequence &x, const LabelSequence &y,
                                       const NetParams &net, const EmissionParams &em,
                                       double step) {
  NetParams probe = net;
  const Eigen::VectorXd base = net.flatten();
  Eigen::VectorXd grad(base.size());
  for (Eigen::Index i = 0; i < base.size(); ++i) {
    Eigen::VectorXd v = base;
    v(i) = base(i) + step;
    probe.unflatten(v);
    const double up = forward_log_likelihood(x, y, probe, em).log_likelihood;
    v(i) = base(i) - step;
    probe.unflatten(v);
    const double down = forward_log_likelihood(x, y, probe, em).log_likelihood;
    grad(i) = (up - down) / (2.0 * step);
  }
  return grad;
}

inline double fd_log_sigma2_gradient(const EmbeddingSequence &x, const LabelSequence &y,
                                     const NetParams &net, const EmissionParams &em,
                                     double step) {
  EmissionParams up = em, down = em;
  up.log_sigma2 += step;
  down.log_sigma2 -= step;
  return (forward_log_likelihood(x, y, net, up).log_likelihood -
          forward_log_likelihood(x, y, net, down).log_likelihood) /
         (2.0 * step);
}

/// ||a - b|| / max(||a||, ||b||), with exact zeros treated as agreement.
inline double relative_error(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  const double scale = std::max(a.norm(), b.norm());
  if (scale == 0.0) return 0.0;
  return (a - b).norm() / scale;
}

}  // namespace uisrnn::testing

#endif  // UISRNN_TESTS_TEST_UTIL_H_
