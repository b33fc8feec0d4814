// SPDX-License-Identifier: Apache-2.0
/**
 * @file   sequence_net.h
 * @brief  Emission model: one GRU shared by every speaker, a two-layer
 *         output network, and isotropic Gaussian emissions around the running
 *         mean of each speaker's network outputs.
 *
 * GRU convention (checkpoints depend on it, do not change):
 *
 *   u  = logistic(W_u x + U_u h + b_u)
 *   r  = logistic(W_r x + U_r h + b_r)
 *   c  = tanh(W_c x + U_c (r * h) + b_c)
 *   h' = (1 - u) * h + u * c
 *
 * Output network: m = W_2 relu(W_1 h + b_1) + b_2, with an optional
 * rectifier on m when `final_relu` is set.
 *
 * Each speaker owns a thread of GRU state. The state used to explain x_t is
 * GRU(x_{t'}, h_{t'}) where t' is the previous segment of the same speaker
 * (zeros on first appearance), so the emission mean for x_t never depends
 * on x_t itself.
 */
#ifndef UISRNN_SEQUENCE_NET_H_
#define UISRNN_SEQUENCE_NET_H_

#include <cstdint>
#include <string_view>

#include <Eigen/Dense>

#include "uisrnn/labels.h"

namespace uisrnn {

inline constexpr std::string_view kGruConvention =
    "u=sigm(Wu*x+Uu*h+bu);r=sigm(Wr*x+Ur*h+br);"
    "c=tanh(Wc*x+Uc*(r.*h)+bc);h'=(1-u).*h+u.*c";

struct NetDims {
  int input = 0;   ///< d, embedding dimension
  int hidden = 0;  ///< H, GRU width
  int fc = 0;      ///< F, width of the hidden fully-connected layer

  bool operator==(const NetDims &) const = default;
};

/// Every trainable tensor of the emission network. Also used as the
/// container for gradients of the same shape.
struct NetParams {
  NetDims dims;
  bool final_relu = false;

  Eigen::MatrixXd w_update, u_update;
  Eigen::VectorXd b_update;
  Eigen::MatrixXd w_reset, u_reset;
  Eigen::VectorXd b_reset;
  Eigen::MatrixXd w_cand, u_cand;
  Eigen::VectorXd b_cand;
  Eigen::MatrixXd fc1_weight;
  Eigen::VectorXd fc1_bias;
  Eigen::MatrixXd fc2_weight;
  Eigen::VectorXd fc2_bias;

  static NetParams zeros(NetDims dims);
  /// Uniform in [-gain/sqrt(fan_in), gain/sqrt(fan_in)], where fan_in is the
  /// column count for matrices and the layer input width for biases.
  static NetParams random(NetDims dims, std::uint64_t seed, double gain = 1.0);

  /// Visits (name, tensor) for all tensors in a fixed order.
  template <typename F>
  void for_each_tensor(F &&f) {
    visit(*this, f);
  }
  template <typename F>
  void for_each_tensor(F &&f) const {
    visit(*this, f);
  }

  /// Throws std::invalid_argument on inconsistent shapes or non-finite
  /// entries.
  void validate() const;

  Eigen::Index num_parameters() const;
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd &flat);

  void axpy(double a, const NetParams &x);  ///< this += a * x
  double squared_norm() const;
  bool all_finite() const;

  bool operator==(const NetParams &other) const;

 private:
  template <typename Self, typename F>
  static void visit(Self &self, F &f) {
    f("gru.w_update", self.w_update);
    f("gru.u_update", self.u_update);
    f("gru.b_update", self.b_update);
    f("gru.w_reset", self.w_reset);
    f("gru.u_reset", self.u_reset);
    f("gru.b_reset", self.b_reset);
    f("gru.w_cand", self.w_cand);
    f("gru.u_cand", self.u_cand);
    f("gru.b_cand", self.b_cand);
    f("fc1.weight", self.fc1_weight);
    f("fc1.bias", self.fc1_bias);
    f("fc2.weight", self.fc2_weight);
    f("fc2.bias", self.fc2_bias);
  }
};

struct EmissionParams {
  double log_sigma2 = 0.0;
  double sigma2() const;
};

/// GRU state and running output statistics of one speaker.
struct SpeakerThread {
  Eigen::VectorXd hidden;      ///< h_{t'}
  Eigen::VectorXd last_input;  ///< x_{t'}
  Eigen::VectorXd mean_sum;    ///< sum of m over this speaker's segments
  int count = 0;

  static SpeakerThread fresh(const NetDims &dims);
};

/// What a thread would look like after explaining one more segment.
struct ThreadProposal {
  Eigen::VectorXd hidden;
  Eigen::VectorXd output;  ///< m
  Eigen::VectorXd mean;    ///< (mean_sum + m) / (count + 1)
};

Eigen::VectorXd gru_forward(const Eigen::VectorXd &x, const Eigen::VectorXd &h,
                            const NetParams &net);

Eigen::VectorXd output_forward(const Eigen::VectorXd &h, const NetParams &net);

/// Log density of N(mu, sigma2 I) at x.
double gaussian_log_pdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mu,
                        double sigma2);

ThreadProposal propose(const SpeakerThread &thread, const NetParams &net);

/// Appends a segment with observation x to the thread using `proposal`.
void commit(SpeakerThread &thread, ThreadProposal proposal,
            const Eigen::VectorXd &x);

struct ForwardResult {
  double log_likelihood = 0.0;
  Eigen::MatrixXd means;  ///< T x d, row t is mu_t
};

/// ln p(X | Y, theta, sigma2) with labels fixed (teacher forcing).
ForwardResult forward_log_likelihood(const EmbeddingSequence &x,
                                     const LabelSequence &y,
                                     const NetParams &net,
                                     const EmissionParams &em);

struct NetGradients {
  NetParams net;
  double log_sigma2 = 0.0;
  double log_likelihood = 0.0;
};

/// Exact gradients of forward_log_likelihood with respect to every network
/// tensor and log sigma2.
NetGradients backward_gradients(const EmbeddingSequence &x,
                                const LabelSequence &y, const NetParams &net,
                                const EmissionParams &em);

}  // namespace uisrnn

#endif  // UISRNN_SEQUENCE_NET_H_
