// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/sequence_net.h"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace uisrnn {

namespace {

Eigen::VectorXd logistic(const Eigen::VectorXd &a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

Eigen::VectorXd relu(const Eigen::VectorXd &a) { return a.cwiseMax(0.0); }

Eigen::VectorXd relu_mask(const Eigen::VectorXd &pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

struct GruCache {
  Eigen::VectorXd x, h, u, r, cand;
};

struct OutputCache {
  Eigen::VectorXd a1_pre, m_pre;
};

Eigen::VectorXd gru_forward_cached(const Eigen::VectorXd &x,
                                   const Eigen::VectorXd &h,
                                   const NetParams &net, GruCache *cache) {
  Eigen::VectorXd u = logistic(net.w_update * x + net.u_update * h + net.b_update);
  Eigen::VectorXd r = logistic(net.w_reset * x + net.u_reset * h + net.b_reset);
  Eigen::VectorXd cand =
      (net.w_cand * x + net.u_cand * r.cwiseProduct(h) + net.b_cand).array().tanh().matrix();
  Eigen::VectorXd out = h + u.cwiseProduct(cand - h);
  if (cache) *cache = {x, h, std::move(u), std::move(r), std::move(cand)};
  return out;
}

Eigen::VectorXd output_forward_cached(const Eigen::VectorXd &h,
                                      const NetParams &net,
                                      OutputCache *cache) {
  Eigen::VectorXd a1_pre = net.fc1_weight * h + net.fc1_bias;
  Eigen::VectorXd m_pre = net.fc2_weight * relu(a1_pre) + net.fc2_bias;
  Eigen::VectorXd m = net.final_relu ? relu(m_pre) : m_pre;
  if (cache) *cache = {std::move(a1_pre), std::move(m_pre)};
  return m;
}

// Accumulates parameter gradients for one output-network call and returns
// the gradient with respect to its input h.
Eigen::VectorXd output_backward(const Eigen::VectorXd &h, const OutputCache &c,
                                Eigen::VectorXd dm, const NetParams &net,
                                NetParams &grad) {
  if (net.final_relu) dm = dm.cwiseProduct(relu_mask(c.m_pre));
  grad.fc2_weight.noalias() += dm * relu(c.a1_pre).transpose();
  grad.fc2_bias += dm;
  Eigen::VectorXd da1 = (net.fc2_weight.transpose() * dm).cwiseProduct(relu_mask(c.a1_pre));
  grad.fc1_weight.noalias() += da1 * h.transpose();
  grad.fc1_bias += da1;
  return net.fc1_weight.transpose() * da1;
}

// Same contract for one GRU step; returns the gradient with respect to the
// incoming state h.
Eigen::VectorXd gru_backward(const GruCache &c, const Eigen::VectorXd &dout,
                             const NetParams &net, NetParams &grad) {
  const auto one = Eigen::VectorXd::Ones(c.u.size()).array();
  Eigen::VectorXd dh = dout.cwiseProduct((one - c.u.array()).matrix());

  Eigen::VectorXd du = dout.cwiseProduct(c.cand - c.h);
  Eigen::VectorXd dcand = dout.cwiseProduct(c.u);

  Eigen::VectorXd dcand_pre = (dcand.array() * (one - c.cand.array().square())).matrix();
  const Eigen::VectorXd rh = c.r.cwiseProduct(c.h);
  grad.w_cand.noalias() += dcand_pre * c.x.transpose();
  grad.u_cand.noalias() += dcand_pre * rh.transpose();
  grad.b_cand += dcand_pre;
  Eigen::VectorXd drh = net.u_cand.transpose() * dcand_pre;
  Eigen::VectorXd dr = drh.cwiseProduct(c.h);
  dh += drh.cwiseProduct(c.r);

  Eigen::VectorXd du_pre = (du.array() * c.u.array() * (one - c.u.array())).matrix();
  grad.w_update.noalias() += du_pre * c.x.transpose();
  grad.u_update.noalias() += du_pre * c.h.transpose();
  grad.b_update += du_pre;
  dh.noalias() += net.u_update.transpose() * du_pre;

  Eigen::VectorXd dr_pre = (dr.array() * c.r.array() * (one - c.r.array())).matrix();
  grad.w_reset.noalias() += dr_pre * c.x.transpose();
  grad.u_reset.noalias() += dr_pre * c.h.transpose();
  grad.b_reset += dr_pre;
  dh.noalias() += net.u_reset.transpose() * dr_pre;
  return dh;
}

void check_inputs(const EmbeddingSequence &x, const LabelSequence &y,
                  const NetParams &net) {
  if (x.length() != y.length())
    throw std::invalid_argument("embedding and label sequences differ in length");
  if (x.dim() != net.dims.input)
    throw std::invalid_argument("embedding dimension does not match network");
}

}  // namespace

NetParams NetParams::zeros(NetDims dims) {
  if (dims.input < 1 || dims.hidden < 1 || dims.fc < 1)
    throw std::invalid_argument("network dimensions must be positive");
  const int d = dims.input, h = dims.hidden, f = dims.fc;
  NetParams p;
  p.dims = dims;
  for (auto *w : {&p.w_update, &p.w_reset, &p.w_cand}) w->setZero(h, d);
  for (auto *u : {&p.u_update, &p.u_reset, &p.u_cand}) u->setZero(h, h);
  for (auto *b : {&p.b_update, &p.b_reset, &p.b_cand}) b->setZero(h);
  p.fc1_weight.setZero(f, h);
  p.fc1_bias.setZero(f);
  p.fc2_weight.setZero(d, f);
  p.fc2_bias.setZero(d);
  return p;
}

NetParams NetParams::random(NetDims dims, std::uint64_t seed, double gain) {
  NetParams p = zeros(dims);
  std::mt19937_64 rng(seed);
  auto fill = [&](auto &tensor, int fan_in) {
    std::uniform_real_distribution<double> dist(-gain / std::sqrt(fan_in),
                                                gain / std::sqrt(fan_in));
    for (Eigen::Index i = 0; i < tensor.size(); ++i) tensor.data()[i] = dist(rng);
  };
  p.for_each_tensor([&](std::string_view name, auto &tensor) {
    int fan_in = static_cast<int>(tensor.cols());
    if constexpr (std::is_same_v<std::decay_t<decltype(tensor)>, Eigen::VectorXd>)
      fan_in = name.starts_with("fc2") ? dims.fc : dims.hidden;
    fill(tensor, fan_in);
  });
  return p;
}

void NetParams::validate() const {
  const NetParams ref = zeros(dims);
  bool shapes_ok = true;
  const NetParams &self = *this;
  auto check = [&](const auto &a, const auto &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) shapes_ok = false;
  };
  check(self.w_update, ref.w_update);
  check(self.u_update, ref.u_update);
  check(self.b_update, ref.b_update);
  check(self.w_reset, ref.w_reset);
  check(self.u_reset, ref.u_reset);
  check(self.b_reset, ref.b_reset);
  check(self.w_cand, ref.w_cand);
  check(self.u_cand, ref.u_cand);
  check(self.b_cand, ref.b_cand);
  check(self.fc1_weight, ref.fc1_weight);
  check(self.fc1_bias, ref.fc1_bias);
  check(self.fc2_weight, ref.fc2_weight);
  check(self.fc2_bias, ref.fc2_bias);
  if (!shapes_ok) throw std::invalid_argument("network tensor shapes inconsistent with dims");
  if (!all_finite()) throw std::invalid_argument("network has non-finite weights");
}

Eigen::Index NetParams::num_parameters() const {
  Eigen::Index n = 0;
  for_each_tensor([&](std::string_view, const auto &t) { n += t.size(); });
  return n;
}

Eigen::VectorXd NetParams::flatten() const {
  Eigen::VectorXd flat(num_parameters());
  Eigen::Index offset = 0;
  for_each_tensor([&](std::string_view, const auto &t) {
    flat.segment(offset, t.size()) = Eigen::Map<const Eigen::VectorXd>(t.data(), t.size());
    offset += t.size();
  });
  return flat;
}

void NetParams::unflatten(const Eigen::VectorXd &flat) {
  if (flat.size() != num_parameters())
    throw std::invalid_argument("flat parameter vector has wrong size");
  Eigen::Index offset = 0;
  for_each_tensor([&](std::string_view, auto &t) {
    Eigen::Map<Eigen::VectorXd>(t.data(), t.size()) = flat.segment(offset, t.size());
    offset += t.size();
  });
}

void NetParams::axpy(double a, const NetParams &x) {
  if (!(dims == x.dims)) throw std::invalid_argument("axpy on mismatched networks");
  w_update += a * x.w_update;
  u_update += a * x.u_update;
  b_update += a * x.b_update;
  w_reset += a * x.w_reset;
  u_reset += a * x.u_reset;
  b_reset += a * x.b_reset;
  w_cand += a * x.w_cand;
  u_cand += a * x.u_cand;
  b_cand += a * x.b_cand;
  fc1_weight += a * x.fc1_weight;
  fc1_bias += a * x.fc1_bias;
  fc2_weight += a * x.fc2_weight;
  fc2_bias += a * x.fc2_bias;
}

double NetParams::squared_norm() const {
  double s = 0.0;
  for_each_tensor([&](std::string_view, const auto &t) { s += t.squaredNorm(); });
  return s;
}

bool NetParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&](std::string_view, const auto &t) { ok = ok && t.allFinite(); });
  return ok;
}

bool NetParams::operator==(const NetParams &other) const {
  return dims == other.dims && final_relu == other.final_relu &&
         flatten() == other.flatten();
}

double EmissionParams::sigma2() const { return std::exp(log_sigma2); }

SpeakerThread SpeakerThread::fresh(const NetDims &dims) {
  return {Eigen::VectorXd::Zero(dims.hidden), Eigen::VectorXd::Zero(dims.input),
          Eigen::VectorXd::Zero(dims.input), 0};
}

Eigen::VectorXd gru_forward(const Eigen::VectorXd &x, const Eigen::VectorXd &h,
                            const NetParams &net) {
  if (x.size() != net.dims.input || h.size() != net.dims.hidden)
    throw std::invalid_argument("gru_forward: dimension mismatch");
  return gru_forward_cached(x, h, net, nullptr);
}

Eigen::VectorXd output_forward(const Eigen::VectorXd &h, const NetParams &net) {
  if (h.size() != net.dims.hidden)
    throw std::invalid_argument("output_forward: dimension mismatch");
  return output_forward_cached(h, net, nullptr);
}

double gaussian_log_pdf(const Eigen::VectorXd &x, const Eigen::VectorXd &mu,
                        double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("sigma2 must be positive");
  if (x.size() != mu.size()) throw std::invalid_argument("gaussian_log_pdf: dimension mismatch");
  const double d = static_cast<double>(x.size());
  return -0.5 * d * std::log(2.0 * std::numbers::pi * sigma2) -
         (x - mu).squaredNorm() / (2.0 * sigma2);
}

ThreadProposal propose(const SpeakerThread &thread, const NetParams &net) {
  ThreadProposal p;
  p.hidden = gru_forward_cached(thread.last_input, thread.hidden, net, nullptr);
  p.output = output_forward_cached(p.hidden, net, nullptr);
  p.mean = (thread.mean_sum + p.output) / static_cast<double>(thread.count + 1);
  return p;
}

void commit(SpeakerThread &thread, ThreadProposal proposal,
            const Eigen::VectorXd &x) {
  thread.hidden = std::move(proposal.hidden);
  thread.mean_sum += proposal.output;
  thread.last_input = x;
  ++thread.count;
}

ForwardResult forward_log_likelihood(const EmbeddingSequence &x,
                                     const LabelSequence &y,
                                     const NetParams &net,
                                     const EmissionParams &em) {
  check_inputs(x, y, net);
  const double sigma2 = em.sigma2();
  std::vector<SpeakerThread> threads(y.num_speakers(), SpeakerThread::fresh(net.dims));
  ForwardResult result;
  result.means.resize(x.length(), x.dim());
  for (int t = 0; t < x.length(); ++t) {
    SpeakerThread &thread = threads[y[t] - 1];
    ThreadProposal p = propose(thread, net);
    const Eigen::VectorXd xt = x.frame(t);
    result.log_likelihood += gaussian_log_pdf(xt, p.mean, sigma2);
    result.means.row(t) = p.mean.transpose();
    commit(thread, std::move(p), xt);
  }
  return result;
}

NetGradients backward_gradients(const EmbeddingSequence &x,
                                const LabelSequence &y, const NetParams &net,
                                const EmissionParams &em) {
  check_inputs(x, y, net);
  const int steps = x.length();
  const double sigma2 = em.sigma2();
  const double d = static_cast<double>(x.dim());

  std::vector<GruCache> gru_caches(steps);
  std::vector<OutputCache> out_caches(steps);
  std::vector<Eigen::VectorXd> hiddens(steps);
  std::vector<Eigen::VectorXd> residuals(steps);  // x_t - mu_t
  std::vector<int> counts(steps);

  NetGradients g;
  g.net = NetParams::zeros(net.dims);
  g.net.final_relu = net.final_relu;

  std::vector<SpeakerThread> threads(y.num_speakers(), SpeakerThread::fresh(net.dims));
  for (int t = 0; t < steps; ++t) {
    SpeakerThread &thread = threads[y[t] - 1];
    hiddens[t] = gru_forward_cached(thread.last_input, thread.hidden, net, &gru_caches[t]);
    Eigen::VectorXd m = output_forward_cached(hiddens[t], net, &out_caches[t]);
    thread.mean_sum += m;
    counts[t] = ++thread.count;
    const Eigen::VectorXd xt = x.frame(t);
    residuals[t] = xt - thread.mean_sum / static_cast<double>(counts[t]);
    const double sq = residuals[t].squaredNorm();
    g.log_likelihood += -0.5 * d * std::log(2.0 * std::numbers::pi * sigma2) - sq / (2.0 * sigma2);
    g.log_sigma2 += sq / (2.0 * sigma2) - 0.5 * d;
    thread.hidden = hiddens[t];
    thread.last_input = xt;
  }

  // Reverse sweep. For each speaker: mean_grad accumulates d/dmu over later
  // segments (each m_s feeds every mu_t, t >= s, with weight 1/count_t), and
  // state_grad carries d/dh back along that speaker's GRU chain.
  const int num_speakers = y.num_speakers();
  std::vector<Eigen::VectorXd> mean_grad(num_speakers, Eigen::VectorXd::Zero(x.dim()));
  std::vector<Eigen::VectorXd> state_grad(num_speakers, Eigen::VectorXd::Zero(net.dims.hidden));
  for (int t = steps - 1; t >= 0; --t) {
    const int k = y[t] - 1;
    mean_grad[k] += residuals[t] / (sigma2 * counts[t]);
    Eigen::VectorXd dh = state_grad[k] +
                         output_backward(hiddens[t], out_caches[t], mean_grad[k], net, g.net);
    state_grad[k] = gru_backward(gru_caches[t], dh, net, g.net);
  }
  return g;
}

}  // namespace uisrnn
