// SPDX-License-Identifier: Apache-2.0
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.h"
#include "uisrnn/cli.h"
#include "uisrnn/io.h"

using namespace uisrnn;
using namespace uisrnn::testing;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli_main(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path &p, const std::string &text) {
  std::ofstream(p, std::ios::binary) << text;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string &name)
      : path(fs::temp_directory_path() / ("uisrnn_cli_test_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string &f) const { return (path / f).string(); }
};

// A small separable labeled corpus sampled from a known model.
void write_sampled_corpus(const std::string &ckpt, const std::string &corpus, int num, int len) {
  ModelParams p = random_model(21, {4, 6, 6}, 3.0, 0.01, 0.8);
  save_checkpoint(ckpt, {p, nullptr, 0});
  REQUIRE(run({"sample", "--ckpt", ckpt, "--num", std::to_string(num), "--len",
               std::to_string(len), "--out", corpus, "--seed", "3"})
              .code == 0);
}

}  // namespace

TEST_CASE("eval on identical rttm prints zero") {
  TempDir dir("eval");
  spit(dir / "ref.rttm",
       "SPEAKER a 1 0.00 4.00 <NA> <NA> A <NA> <NA>\n"
       "SPEAKER a 1 4.00 4.00 <NA> <NA> B <NA> <NA>\n"
       "SPEAKER b 1 0.00 2.00 <NA> <NA> X <NA> <NA>\n");
  const Run r = run({"eval", "--ref", dir / "ref.rttm", "--hyp", dir / "ref.rttm"});
  CHECK(r.code == 0);
  CHECK(r.out.find("\nDER=0.000000\n") != std::string::npos);
  CHECK(r.out.rfind("a DER=0.000000", 0) == 0);

  spit(dir / "hyp.rttm", "SPEAKER a 1 0.00 8.00 <NA> <NA> S <NA> <NA>\n");
  const Run half = run({"eval", "--ref", dir / "ref.rttm", "--hyp", dir / "hyp.rttm",
                        "--collar", "0"});
  CHECK(half.code == 0);
  CHECK(half.out.find("a DER=0.500000") != std::string::npos);
}

TEST_CASE("usage errors exit with status 2") {
  const Run unknown = run({"eval", "--ref", "x", "--hyp", "y", "--bogus"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"decode", "--corpus", "c"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("malformed input files name file and line") {
  TempDir dir("malformed");
  spit(dir / "bad.rttm",
       "SPEAKER a 1 0.00 4.00 <NA> <NA> A <NA> <NA>\n"
       "SPEAKER a 1 oops 4.00 <NA> <NA> B <NA> <NA>\n");
  const Run r = run({"eval", "--ref", dir / "bad.rttm", "--hyp", dir / "bad.rttm"});
  CHECK(r.code == 1);
  CHECK(r.err.find(dir / "bad.rttm" + ":2:") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);

  spit(dir / "bad.jsonl", "{\"utt\":\"a\",\"embeddings\":[[0]],\"labels\":[1]}\n[1,2\n");
  const Run t = run({"train", "--corpus", dir / "bad.jsonl", "--out", dir / "m.json"});
  CHECK(t.code == 1);
  CHECK(t.err.find(dir / "bad.jsonl" + ":2:") != std::string::npos);

  const Run missing = run({"decode", "--corpus", dir / "nope.jsonl", "--ckpt", dir / "nope.json",
                           "--out", dir / "o.jsonl"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("nope.json") != std::string::npos);
}

TEST_CASE("train is byte-identical for a fixed seed") {
  TempDir dir("train");
  write_sampled_corpus(dir / "gen.json", dir / "corpus.jsonl", 12, 10);
  spit(dir / "config.json",
       R"({"step_size": 0.001, "batch_size": 4, "max_iterations": 15, "hidden_dim": 5,
           "fc_dim": 5, "log_every": 5})");
  for (const char *out : {"a.json", "b.json"})
    REQUIRE(run({"train", "--corpus", dir / "corpus.jsonl", "--out", dir / out, "--config",
                 dir / "config.json", "--seed", "7"})
                .code == 0);
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
  CHECK(slurp(dir / "a.json.log") == slurp(dir / "b.json.log"));
  CHECK(slurp(dir / "a.json.log").rfind("iter=5 objective=", 0) == 0);

  const Checkpoint ckpt = load_checkpoint(dir / "a.json");
  CHECK(ckpt.seed == 7);
  CHECK(ckpt.params.net.dims.hidden == 5);
  CHECK(ckpt.train_config.at("max_iterations") == 15);

  REQUIRE(run({"train", "--corpus", dir / "corpus.jsonl", "--out", dir / "c.json", "--config",
               dir / "config.json", "--seed", "8"})
              .code == 0);
  CHECK(slurp(dir / "a.json") != slurp(dir / "c.json"));
}

TEST_CASE("sample, decode and eval end to end") {
  TempDir dir("e2e");
  write_sampled_corpus(dir / "gen.json", dir / "corpus.jsonl", 6, 30);
  const auto corpus = read_corpus_file(dir / "corpus.jsonl");
  REQUIRE(corpus.size() == 6);
  CHECK(corpus[0].id == "sample-000000");
  CHECK(corpus[0].labels.has_value());

  const Run d = run({"decode", "--corpus", dir / "corpus.jsonl", "--ckpt", dir / "gen.json",
                     "--out", dir / "hyp.jsonl", "--ref-rttm", dir / "ref.rttm", "--beam", "4",
                     "--workers", "3"});
  REQUIRE(d.code == 0);
  std::ifstream hyp(dir / "hyp.jsonl");
  std::string line;
  int n = 0;
  while (std::getline(hyp, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.at("utt") == corpus[n].id);
    CHECK(j.at("labels").size() == 30);
    ++n;
  }
  CHECK(n == 6);

  const Run e = run({"eval", "--ref", dir / "ref.rttm", "--hyp", dir / "hyp.jsonl.rttm"});
  REQUIRE(e.code == 0);
  const auto pos = e.out.rfind("DER=");
  const double total = std::stod(e.out.substr(pos + 4));
  CHECK(total <= 0.15);

  const Run d1 = run({"decode", "--corpus", dir / "corpus.jsonl", "--ckpt", dir / "gen.json",
                      "--out", dir / "hyp1.jsonl", "--beam", "4", "--workers", "1"});
  REQUIRE(d1.code == 0);
  CHECK(slurp(dir / "hyp1.jsonl") == slurp(dir / "hyp.jsonl"));
  CHECK(slurp(dir / "hyp1.jsonl.rttm") == slurp(dir / "hyp.jsonl.rttm"));
}

TEST_CASE("decode rejects a dimension mismatch") {
  TempDir dir("dims");
  ModelParams p = random_model(1, {2, 3, 3});
  save_checkpoint(dir / "m.json", {p, nullptr, 0});
  spit(dir / "c.jsonl", R"({"utt":"a","embeddings":[[0,1,2]]})");
  const Run r = run({"decode", "--corpus", dir / "c.jsonl", "--ckpt", dir / "m.json", "--out",
                     dir / "o.jsonl"});
  CHECK(r.code == 1);
  CHECK(r.err.find("dimension") != std::string::npos);
}
