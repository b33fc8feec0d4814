// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "uisrnn/error.h"

namespace uisrnn {

using nlohmann::json;

namespace {

json matrix_to_json(const Eigen::MatrixXd &m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json tensor_to_json(const Eigen::MatrixXd &m) { return matrix_to_json(m); }

json tensor_to_json(const Eigen::VectorXd &v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::MatrixXd matrix_from_json(const json &j, Eigen::Index rows, Eigen::Index cols,
                                 const std::string &what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows)
    throw std::invalid_argument(what + ": expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json &row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw std::invalid_argument(what + ": expected " + std::to_string(cols) + " columns");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!row[c].is_number()) throw std::invalid_argument(what + ": non-numeric entry");
      m(i, c) = row[c].get<double>();
    }
  }
  return m;
}

void tensor_from_json(const json &j, Eigen::MatrixXd &out, const std::string &what) {
  out = matrix_from_json(j, out.rows(), out.cols(), what);
}

void tensor_from_json(const json &j, Eigen::VectorXd &out, const std::string &what) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != out.size())
    throw std::invalid_argument(what + ": expected " + std::to_string(out.size()) + " entries");
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (!j[i].is_number()) throw std::invalid_argument(what + ": non-numeric entry");
    out(i) = j[i].get<double>();
  }
}

LabelSequence labels_from_json(const json &j) {
  if (!j.is_array() || j.empty()) throw std::invalid_argument("\"labels\" must be a nonempty array");
  std::vector<std::string> raw;
  raw.reserve(j.size());
  for (const auto &v : j) {
    if (v.is_number_integer()) raw.push_back(std::to_string(v.get<long long>()));
    else if (v.is_string()) raw.push_back(v.get<std::string>());
    else throw std::invalid_argument("labels must be integers or strings");
  }
  return canonicalize(raw);
}

CorpusEntry entry_from_json(const json &j) {
  if (!j.is_object()) throw std::invalid_argument("expected a JSON object");
  if (!j.contains("utt") || !j["utt"].is_string())
    throw std::invalid_argument("missing string field \"utt\"");
  if (!j.contains("embeddings") || !j["embeddings"].is_array() || j["embeddings"].empty())
    throw std::invalid_argument("missing nonempty array \"embeddings\"");
  const json &emb = j["embeddings"];
  if (!emb[0].is_array() || emb[0].empty())
    throw std::invalid_argument("embeddings must be an array of nonempty arrays");
  CorpusEntry e;
  e.id = j["utt"].get<std::string>();
  e.embeddings = EmbeddingSequence(
      matrix_from_json(emb, static_cast<Eigen::Index>(emb.size()),
                       static_cast<Eigen::Index>(emb[0].size()), "embeddings"));
  if (j.contains("labels") && !j["labels"].is_null()) {
    e.labels = labels_from_json(j["labels"]);
    if (e.labels->length() != e.embeddings.length())
      throw std::invalid_argument("labels and embeddings differ in length");
  }
  return e;
}

}  // namespace

std::vector<CorpusEntry> read_corpus(std::istream &in, const std::string &source_name) {
  std::vector<CorpusEntry> out;
  std::set<std::string> ids;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      CorpusEntry e = entry_from_json(json::parse(line));
      if (!out.empty() && e.embeddings.dim() != out.front().embeddings.dim())
        throw std::invalid_argument("embedding dimension differs from earlier lines");
      if (!ids.insert(e.id).second) throw std::invalid_argument("duplicate utterance id '" + e.id + "'");
      out.push_back(std::move(e));
    } catch (const json::exception &err) {
      throw FormatError(source_name, line_no, err.what());
    } catch (const std::invalid_argument &err) {
      throw FormatError(source_name, line_no, err.what());
    }
  }
  return out;
}

std::vector<CorpusEntry> read_corpus_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, "cannot open file");
  return read_corpus(in, path);
}

void write_corpus(std::ostream &out, std::span<const CorpusEntry> corpus) {
  for (const auto &e : corpus) {
    json j;
    j["utt"] = e.id;
    j["embeddings"] = matrix_to_json(e.embeddings.values());
    if (e.labels) j["labels"] = e.labels->values();
    out << j.dump() << '\n';
  }
}

std::vector<Utterance> to_utterances(std::span<const CorpusEntry> corpus,
                                     const std::string &source_name) {
  std::vector<Utterance> out;
  out.reserve(corpus.size());
  for (size_t i = 0; i < corpus.size(); ++i) {
    if (!corpus[i].labels)
      throw FormatError(source_name, static_cast<long>(i + 1),
                        "utterance '" + corpus[i].id + "' has no labels");
    out.push_back({corpus[i].id, corpus[i].embeddings, *corpus[i].labels});
  }
  return out;
}

json train_config_to_json(const TrainConfig &c) {
  json j;
  j["step_size"] = c.step_size;
  j["batch_size"] = c.batch_size;
  j["max_iterations"] = c.max_iterations;
  j["grad_clip_norm"] = c.grad_clip_norm ? json(*c.grad_clip_norm) : json(nullptr);
  j["seed"] = c.seed;
  j["convergence_tol"] = c.convergence_tol;
  j["smoothing_window"] = c.smoothing_window;
  j["log_every"] = c.log_every;
  j["hidden_dim"] = c.hidden_dim;
  j["fc_dim"] = c.fc_dim;
  j["final_relu"] = c.final_relu;
  j["init_gain"] = c.init_gain;
  return j;
}

TrainConfig train_config_from_json(const json &j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be a JSON object");
  TrainConfig c;
  const json defaults = train_config_to_json(c);
  for (const auto &[key, value] : j.items())
    if (!defaults.contains(key)) throw std::invalid_argument("unknown train config key '" + key + "'");
  auto get = [&](const char *key, auto &field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("step_size", c.step_size);
  get("batch_size", c.batch_size);
  get("max_iterations", c.max_iterations);
  if (j.contains("grad_clip_norm")) {
    if (j["grad_clip_norm"].is_null()) c.grad_clip_norm.reset();
    else c.grad_clip_norm = j["grad_clip_norm"].get<double>();
  }
  get("seed", c.seed);
  get("convergence_tol", c.convergence_tol);
  get("smoothing_window", c.smoothing_window);
  get("log_every", c.log_every);
  get("hidden_dim", c.hidden_dim);
  get("fc_dim", c.fc_dim);
  get("final_relu", c.final_relu);
  get("init_gain", c.init_gain);
  return c;
}

json checkpoint_to_json(const Checkpoint &ckpt) {
  const ModelParams &p = ckpt.params;
  json j;
  j["format_version"] = kCheckpointVersion;
  j["dims"] = {{"input", p.net.dims.input}, {"hidden", p.net.dims.hidden}, {"fc", p.net.dims.fc}};
  j["gru_convention"] = std::string(kGruConvention);
  j["final_relu"] = p.net.final_relu;
  json tensors = json::object();
  p.net.for_each_tensor([&](std::string_view name, const auto &t) {
    tensors[std::string(name)] = tensor_to_json(t);
  });
  j["tensors"] = std::move(tensors);
  j["log_sigma2"] = p.emission.log_sigma2;
  j["alpha"] = p.prior.alpha;
  j["p0"] = p.prior.p0;
  j["train_config"] = ckpt.train_config;
  j["seed"] = ckpt.seed;
  return j;
}

Checkpoint checkpoint_from_json(const json &j, const std::string &source_name) {
  try {
    if (j.at("format_version").get<int>() != kCheckpointVersion)
      throw std::invalid_argument("unsupported checkpoint format version");
    if (j.at("gru_convention").get<std::string>() != kGruConvention)
      throw std::invalid_argument("checkpoint uses a different GRU convention");
    const json &dims = j.at("dims");
    Checkpoint ckpt;
    ModelParams &p = ckpt.params;
    p.net = NetParams::zeros({dims.at("input").get<int>(), dims.at("hidden").get<int>(),
                              dims.at("fc").get<int>()});
    p.net.final_relu = j.at("final_relu").get<bool>();
    const json &tensors = j.at("tensors");
    p.net.for_each_tensor([&](std::string_view name, auto &t) {
      const std::string key(name);
      tensor_from_json(tensors.at(key), t, key);
    });
    p.emission.log_sigma2 = j.at("log_sigma2").get<double>();
    p.prior.alpha = j.at("alpha").get<double>();
    p.prior.p0 = j.at("p0").get<double>();
    p.validate();
    if (j.contains("train_config")) ckpt.train_config = j["train_config"];
    if (j.contains("seed")) ckpt.seed = j["seed"].get<std::uint64_t>();
    return ckpt;
  } catch (const json::exception &err) {
    throw FormatError(source_name, 1, err.what());
  } catch (const std::invalid_argument &err) {
    throw FormatError(source_name, 1, err.what());
  }
}

void save_checkpoint(const std::string &path, const Checkpoint &ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  out << checkpoint_to_json(ckpt).dump(1) << '\n';
  if (!out) throw std::runtime_error("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw FormatError(path, 0, "cannot open file");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &err) {
    throw FormatError(path, 1, err.what());
  }
  return checkpoint_from_json(j, path);
}

SampledUtterance sample_utterance(const ModelParams &params, int length,
                                  std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("sample length must be >= 1");
  params.validate();
  const NetParams &net = params.net;
  const double sigma2 = params.emission.sigma2();
  const double sigma = std::sqrt(sigma2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::bernoulli_distribution change(1.0 - params.prior.p0);

  Eigen::MatrixXd x(length, net.dims.input);
  std::vector<SpeakerId> labels;
  labels.reserve(length);
  std::vector<SpeakerThread> threads;
  BlockCounts blocks;
  double log_prob = 0.0;

  for (int t = 0; t < length; ++t) {
    SpeakerId y = 1;
    if (t > 0) {
      if (change(rng)) {
        const auto candidates = assignment_candidates(blocks, params.prior);
        std::vector<double> weights;
        for (const auto &c : candidates) weights.push_back(c.z ? std::exp(c.log_prior) : 0.0);
        std::discrete_distribution<size_t> pick(weights.begin(), weights.end());
        const auto &c = candidates[pick(rng)];
        y = c.speaker;
        log_prob += c.log_prior;
      } else {
        y = blocks.last_speaker();
        log_prob += change_log_prob(false, params.prior.p0);
      }
    }
    if (y > static_cast<int>(threads.size())) threads.push_back(SpeakerThread::fresh(net.dims));
    ThreadProposal p = propose(threads[y - 1], net);
    Eigen::VectorXd xt(net.dims.input);
    for (Eigen::Index i = 0; i < xt.size(); ++i) xt(i) = p.mean(i) + sigma * noise(rng);
    log_prob += gaussian_log_pdf(xt, p.mean, sigma2);
    commit(threads[y - 1], std::move(p), xt);
    blocks.push(y);
    labels.push_back(y);
    x.row(t) = xt.transpose();
  }
  return {EmbeddingSequence(std::move(x)), LabelSequence(std::move(labels)), log_prob};
}

std::vector<Fold> kfold_split(int corpus_size, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("k must be >= 2");
  if (k > corpus_size) throw std::invalid_argument("k exceeds corpus size");
  std::vector<int> order(corpus_size);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Fold> folds(k);
  for (int f = 0; f < k; ++f) {
    const int begin = static_cast<int>(static_cast<long>(f) * corpus_size / k);
    const int end = static_cast<int>(static_cast<long>(f + 1) * corpus_size / k);
    for (int i = 0; i < corpus_size; ++i)
      (i >= begin && i < end ? folds[f].eval : folds[f].train).push_back(order[i]);
    std::sort(folds[f].eval.begin(), folds[f].eval.end());
    std::sort(folds[f].train.begin(), folds[f].train.end());
  }
  return folds;
}

}  // namespace uisrnn
