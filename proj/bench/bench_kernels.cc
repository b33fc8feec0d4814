// SPDX-License-Identifier: Apache-2.0
//
// Compares the serial reference kernels with their OpenMP versions on a
// sampled corpus. Usage:
//   uisrnn_bench [--utts N] [--len T] [--dim d] [--hidden H] [--beam B] [--reps R]

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "CLI11.hpp"
#include "uisrnn/io.h"
#include "uisrnn/kernels.h"

namespace {

template <typename F>
double best_seconds(int reps, F &&f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

void report(const char *name, double serial, double parallel) {
  std::printf("%-22s serial %9.4f s   openmp %9.4f s   speedup %5.2fx\n", name, serial,
              parallel, serial / parallel);
}

}  // namespace

int main(int argc, char *argv[]) {
  int utts = 64, len = 100, dim = 8, hidden = 64, beam = 10, reps = 3;
  CLI::App app{"Serial vs OpenMP kernel benchmark"};
  app.add_option("--utts", utts, "Utterances in the synthetic corpus");
  app.add_option("--len", len, "Segments per utterance");
  app.add_option("--dim", dim, "Embedding dimension");
  app.add_option("--hidden", hidden, "GRU and FC width");
  app.add_option("--beam", beam, "Decoder beam width");
  app.add_option("--reps", reps, "Repetitions; the best time is reported");
  CLI11_PARSE(app, argc, argv);

  using namespace uisrnn;
  ModelParams params;
  params.net = NetParams::random({dim, hidden, hidden}, 11, 2.0);
  params.emission.log_sigma2 = std::log(0.05);
  params.prior = {0.8, 1.0};

  std::vector<Utterance> corpus;
  std::vector<EmbeddingSequence> inputs;
  for (int i = 0; i < utts; ++i) {
    SampledUtterance s = sample_utterance(params, len, 1000 + i);
    inputs.push_back(s.embeddings);
    corpus.push_back({"u" + std::to_string(i), std::move(s.embeddings), std::move(s.labels)});
  }
  std::vector<int> all(utts);
  std::iota(all.begin(), all.end(), 0);

  std::printf("threads=%d utts=%d len=%d d=%d H=%d beam=%d\n", omp_get_max_threads(), utts,
              len, dim, hidden, beam);

  report("batch_gradients",
         best_seconds(reps, [&] { batch_gradients_serial(corpus, all, params); }),
         best_seconds(reps, [&] { batch_gradients(corpus, all, params); }));
  report("corpus_log_likelihood",
         best_seconds(reps, [&] { corpus_log_likelihood_serial(corpus, params); }),
         best_seconds(reps, [&] { corpus_log_likelihood(corpus, params); }));

  DecodeConfig config;
  config.beam_width = beam;
  config.max_speakers = 8;
  report("decode_corpus",
         best_seconds(reps, [&] { decode_corpus_serial(inputs, params, config); }),
         best_seconds(reps, [&] { decode_corpus(inputs, params, config); }));
  return 0;
}
