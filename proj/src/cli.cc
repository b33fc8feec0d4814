// SPDX-License-Identifier: Apache-2.0
#include "uisrnn/cli.h"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>

#include "CLI11.hpp"
#include "json.hpp"
#include "uisrnn/error.h"
#include "uisrnn/io.h"
#include "uisrnn/kernels.h"
#include "uisrnn/metrics.h"
#include "uisrnn/trainer.h"

namespace uisrnn {

namespace {

struct TrainArgs {
  std::string corpus, out, config, log;
  std::optional<std::uint64_t> seed;
};

struct DecodeArgs {
  std::string corpus, ckpt, out, rttm, ref_rttm;
  int beam = 10;
  std::optional<int> max_speakers;
  int look_ahead = 0;
  double segment_duration = 0.4;
  int workers = 0;
};

struct EvalArgs {
  std::string ref, hyp;
  double collar = 0.25;
  bool keep_overlap = false;
};

struct SampleArgs {
  std::string ckpt, out;
  int num = 0;
  int len = 0;
  std::uint64_t seed = 0;
};

std::ofstream open_output(const std::string &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

int run_train(const TrainArgs &a, std::ostream &out) {
  TrainConfig config;
  if (!a.config.empty()) {
    std::ifstream in(a.config);
    if (!in) throw FormatError(a.config, 0, "cannot open file");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      config = train_config_from_json(j);
    } catch (const nlohmann::json::exception &e) {
      throw FormatError(a.config, 1, e.what());
    } catch (const std::invalid_argument &e) {
      throw FormatError(a.config, 1, e.what());
    }
  }
  if (a.seed) config.seed = *a.seed;

  const auto entries = read_corpus_file(a.corpus);
  const auto corpus = to_utterances(entries, a.corpus);
  const std::string log_path = a.log.empty() ? a.out + ".log" : a.log;
  std::ofstream log = open_output(log_path);
  TrainResult result = train(corpus, config, &log);
  save_checkpoint(a.out, {result.params, train_config_to_json(config), config.seed});
  out << "trained " << corpus.size() << " utterances, " << result.report.iterations
      << " iterations (" << result.report.stop_reason << ")\n";
  return 0;
}

int run_decode(const DecodeArgs &a, std::ostream &out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const auto entries = read_corpus_file(a.corpus);
  if (!entries.empty() && entries.front().embeddings.dim() != ckpt.params.net.dims.input)
    throw FormatError(a.corpus, 1, "embedding dimension does not match checkpoint");
  std::vector<EmbeddingSequence> inputs;
  inputs.reserve(entries.size());
  for (const auto &e : entries) inputs.push_back(e.embeddings);

  DecodeConfig config;
  config.beam_width = a.beam;
  config.max_speakers = a.max_speakers;
  config.look_ahead = a.look_ahead;
  const auto results = decode_corpus(inputs, ckpt.params, config, a.workers);

  std::ofstream labels_out = open_output(a.out);
  std::ofstream rttm_out = open_output(a.rttm.empty() ? a.out + ".rttm" : a.rttm);
  std::optional<std::ofstream> ref_out;
  if (!a.ref_rttm.empty()) ref_out = open_output(a.ref_rttm);
  for (size_t i = 0; i < entries.size(); ++i) {
    nlohmann::json j;
    j["utt"] = entries[i].id;
    j["labels"] = results[i].labels.values();
    labels_out << j.dump() << '\n';
    write_rttm(rttm_out, labels_to_timeline(results[i].labels, a.segment_duration, entries[i].id));
    if (ref_out && entries[i].labels)
      write_rttm(*ref_out, labels_to_timeline(*entries[i].labels, a.segment_duration, entries[i].id));
  }
  out << "decoded " << entries.size() << " utterances\n";
  return 0;
}

int run_eval(const EvalArgs &a, std::ostream &out, std::ostream &err) {
  const auto refs = read_rttm_file(a.ref);
  const auto hyps = read_rttm_file(a.hyp);
  double confusion = 0.0, scored = 0.0;
  char buf[256];
  for (const auto &ref : refs) {
    Timeline hyp{ref.utt, {}};
    for (const auto &h : hyps)
      if (h.utt == ref.utt) hyp = h;
    DerResult r;
    try {
      r = der(ref, hyp, a.collar, !a.keep_overlap);
    } catch (const std::invalid_argument &e) {
      err << "skipping " << ref.utt << ": " << e.what() << '\n';
      continue;
    }
    confusion += r.confusion_time;
    scored += r.scored_time;
    std::snprintf(buf, sizeof(buf), "%s DER=%.6f confusion=%.6f scored=%.6f", ref.utt.c_str(),
                  r.der, r.confusion_time, r.scored_time);
    out << buf << '\n';
  }
  if (scored <= 0.0) throw std::runtime_error("nothing to score");
  std::snprintf(buf, sizeof(buf), "DER=%.6f", confusion / scored);
  out << buf << '\n';
  return 0;
}

int run_sample(const SampleArgs &a, std::ostream &out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  if (a.num < 1 || a.len < 1) throw std::invalid_argument("--num and --len must be >= 1");
  std::seed_seq seq{a.seed};
  std::vector<std::uint32_t> seeds(2 * static_cast<size_t>(a.num));
  seq.generate(seeds.begin(), seeds.end());
  std::vector<CorpusEntry> corpus;
  corpus.reserve(a.num);
  char id[32];
  for (int i = 0; i < a.num; ++i) {
    const std::uint64_t s = (std::uint64_t{seeds[2 * i]} << 32) | seeds[2 * i + 1];
    SampledUtterance u = sample_utterance(ckpt.params, a.len, s);
    std::snprintf(id, sizeof(id), "sample-%06d", i);
    corpus.push_back({id, std::move(u.embeddings), std::move(u.labels)});
  }
  std::ofstream file = open_output(a.out);
  write_corpus(file, corpus);
  out << "sampled " << a.num << " utterances\n";
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Supervised sequence segmentation and clustering with interleaved-state RNNs",
               "uisrnn"};
  app.require_subcommand(1);

  TrainArgs ta;
  auto *train_cmd = app.add_subcommand("train", "Train a model on a labeled corpus");
  train_cmd->add_option("--corpus", ta.corpus, "Labeled corpus (JSON lines)")->required();
  train_cmd->add_option("--out", ta.out, "Checkpoint to write")->required();
  train_cmd->add_option("--config", ta.config, "Training config (JSON)");
  train_cmd->add_option("--seed", ta.seed, "Overrides the config seed");
  train_cmd->add_option("--log", ta.log, "Training log path (default: <out>.log)");

  DecodeArgs da;
  auto *decode_cmd = app.add_subcommand("decode", "Infer speaker labels for a corpus");
  decode_cmd->add_option("--corpus", da.corpus, "Corpus (JSON lines)")->required();
  decode_cmd->add_option("--ckpt", da.ckpt, "Checkpoint")->required();
  decode_cmd->add_option("--out", da.out, "Labels output (JSON lines)")->required();
  decode_cmd->add_option("--rttm", da.rttm, "RTTM output (default: <out>.rttm)");
  decode_cmd->add_option("--ref-rttm", da.ref_rttm, "Also write corpus labels as RTTM");
  decode_cmd->add_option("--beam", da.beam, "Beam width")->check(CLI::PositiveNumber);
  decode_cmd->add_option("--max-speakers", da.max_speakers, "Speaker cap")
      ->check(CLI::PositiveNumber);
  decode_cmd->add_option("--look-ahead", da.look_ahead, "Commit delay in frames")
      ->check(CLI::NonNegativeNumber);
  decode_cmd->add_option("--segment-duration", da.segment_duration, "Seconds per segment")
      ->check(CLI::PositiveNumber);
  decode_cmd->add_option("--workers", da.workers, "Parallel workers (0 = default)")
      ->check(CLI::NonNegativeNumber);

  EvalArgs ea;
  auto *eval_cmd = app.add_subcommand("eval", "Score hypothesis RTTM against reference");
  eval_cmd->add_option("--ref", ea.ref, "Reference RTTM")->required();
  eval_cmd->add_option("--hyp", ea.hyp, "Hypothesis RTTM")->required();
  eval_cmd->add_option("--collar", ea.collar, "Seconds excluded around each boundary")
      ->check(CLI::NonNegativeNumber);
  eval_cmd->add_flag("--keep-overlap", ea.keep_overlap, "Score overlapped speech");

  SampleArgs sa;
  auto *sample_cmd = app.add_subcommand("sample", "Sample a synthetic corpus from a checkpoint");
  sample_cmd->add_option("--ckpt", sa.ckpt, "Checkpoint")->required();
  sample_cmd->add_option("--num", sa.num, "Number of utterances")->required();
  sample_cmd->add_option("--len", sa.len, "Segments per utterance")->required();
  sample_cmd->add_option("--out", sa.out, "Corpus to write")->required();
  sample_cmd->add_option("--seed", sa.seed, "Random seed")->required();

  std::vector<std::string> argv_storage{"uisrnn"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char *> argv;
  for (const auto &s : argv_storage) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError &e) {
    err << e.what() << '\n';
    CLI::App *sub = nullptr;
    for (auto *cmd : {train_cmd, decode_cmd, eval_cmd, sample_cmd})
      if (cmd->parsed()) sub = cmd;
    err << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(ta, out);
    if (decode_cmd->parsed()) return run_decode(da, out);
    if (eval_cmd->parsed()) return run_eval(ea, out, err);
    if (sample_cmd->parsed()) return run_sample(sa, out);
  } catch (const std::exception &e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace uisrnn
