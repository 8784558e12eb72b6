// tokenwise/tools/tokenwise_main.cc
//
// Command-line front end: generate, decode, bench, verify.
// Exit codes: 0 success, 1 property failure, 2 I/O or validation error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tokenwise/harness.h"

namespace {

using namespace tokenwise;

constexpr int kExitOk = 0;
constexpr int kExitPropertyFailure = 1;
constexpr int kExitInputError = 2;

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write output file: " + path);
  out << text;
  if (!out) throw Error("failed writing output file: " + path);
}

struct Loaded {
  std::unique_ptr<TransducerModel> model;
  std::vector<Utterance> corpus;
};

Loaded LoadInputs(const std::string& model_path, const std::string& corpus_path) {
  Loaded in;
  in.model = LoadModel(ReadModelSpec(model_path));
  in.corpus = LoadCorpus(corpus_path, in.model->vocab_size());
  return in;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transducer beam search: token-wise segment decoding and the "
               "frame-synchronous baseline"};
  app.require_subcommand(1);

  std::string model_path, corpus_path, out_path;
  std::vector<int32_t> beam_sizes, segment_sizes;
  int32_t nbest = 0, repeats = 3, workers = 1, max_rounds = 0;
  double tolerance = 1e-9;

  // generate
  GenerateOptions gen;
  double blank_prior = 0.85;
  bool uniform = false;
  int32_t max_tokens = -1;
  auto* generate = app.add_subcommand("generate", "write a seeded model and corpus");
  generate->add_option("--model", model_path, "output model file")->required();
  generate->add_option("--corpus", corpus_path, "output corpus file")->required();
  generate->add_option("--seed", gen.seed, "generator seed");
  generate->add_option("--count", gen.count, "number of utterances");
  generate->add_option("--vocab-size", gen.vocab_size, "non-blank vocabulary size");
  generate->add_option("--min-frames", gen.min_frames, "shortest utterance");
  generate->add_option("--max-frames", gen.max_frames, "longest utterance");
  generate->add_option("--blank-prior", blank_prior,
                       "fraction of blank-dominated frames");
  generate->add_flag("--uniform", uniform,
                     "uniform random joiner instead of the peaky one");
  generate->add_option("--max-tokens", max_tokens,
                       "force blank after this many tokens");
  generate->add_option("--reference-beam", gen.reference_beam,
                       "beam used to produce references");

  // decode
  std::string algorithm = "tokenwise";
  int32_t beam_size = 4, segment_size = 1;
  auto* decode = app.add_subcommand("decode", "decode a corpus, one JSON line per utterance");
  decode->add_option("--model", model_path)->required();
  decode->add_option("--corpus", corpus_path)->required();
  decode->add_option("--beam-size", beam_size);
  decode->add_option("--segment-size", segment_size);
  decode->add_option("--nbest", nbest, "hypotheses to print (default: beam size)");
  decode->add_option("--max-rounds", max_rounds, "expansion rounds per segment");
  decode->add_option("--algorithm", algorithm)
      ->check(CLI::IsMember({"tokenwise", "standard"}));
  decode->add_option("--workers", workers);
  decode->add_option("--out", out_path, "output file (default: stdout)");

  // bench
  auto* bench = app.add_subcommand("bench", "sweep beam and segment sizes");
  bench->add_option("--model", model_path)->required();
  bench->add_option("--corpus", corpus_path)->required();
  bench->add_option("--beam-size", beam_sizes, "repeatable")->take_all();
  bench->add_option("--segment-size", segment_sizes, "repeatable; must include 1")
      ->take_all();
  bench->add_option("--nbest", nbest, "hypotheses per utterance (default: beam size)");
  bench->add_option("--repeats", repeats, "timing repetitions, median is kept");
  bench->add_option("--workers", workers);
  bench->add_option("--max-rounds", max_rounds);
  bench->add_option("--out", out_path, "report file (default: stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "run the exactness and equivalence checks");
  verify->add_option("--model", model_path)->required();
  verify->add_option("--corpus", corpus_path)->required();
  verify->add_option("--beam-size", beam_sizes, "repeatable")->take_all();
  verify->add_option("--tolerance", tolerance, "allowed defect");

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      gen.blank_prior = uniform ? std::nullopt : std::optional<double>(blank_prior);
      if (max_tokens >= 0) gen.max_tokens = max_tokens;
      GeneratedCorpus out = GenerateCorpus(gen);
      WriteModelSpec(model_path, out.model);
      SaveCorpus(corpus_path, out.utterances);
      std::fprintf(stderr, "wrote %zu utterances\n", out.utterances.size());
      return kExitOk;
    }

    if (decode->parsed()) {
      Loaded in = LoadInputs(model_path, corpus_path);
      DecodeConfig config;
      config.beam_size = beam_size;
      config.segment_size = segment_size;
      config.nbest = nbest > 0 ? nbest : beam_size;
      config.max_rounds_per_segment = max_rounds;
      CorpusDecode result = DecodeCorpus(
          *in.model, in.corpus, config,
          algorithm == "standard" ? Algorithm::kStandard : Algorithm::kTokenwise,
          workers);
      std::string text;
      for (size_t i = 0; i < in.corpus.size(); ++i) {
        const DecodeResult& r = result.results[i];
        nlohmann::ordered_json line;
        line["id"] = in.corpus[i].id;
        line["nbest"] = nlohmann::ordered_json::array();
        for (const auto& e : r.nbest) {
          line["nbest"].push_back({{"tokens", e.tokens}, {"score", e.score}});
        }
        line["calls"] = r.counters.calls;
        line["frame_joins"] = r.counters.frame_joins;
        line["frames"] = r.counters.frames_decoded;
        text += line.dump() + "\n";
      }
      WriteText(out_path, text);
      return kExitOk;
    }

    if (bench->parsed()) {
      Loaded in = LoadInputs(model_path, corpus_path);
      BenchmarkOptions options;
      if (!beam_sizes.empty()) options.beam_sizes = beam_sizes;
      if (!segment_sizes.empty()) options.segment_sizes = segment_sizes;
      options.nbest = nbest;
      options.repeats = repeats;
      options.workers = workers;
      options.max_rounds = max_rounds;
      BenchmarkReport report = RunBenchmark(*in.model, in.corpus, options);
      WriteText(out_path, report.ToJson());
      return kExitOk;
    }

    if (verify->parsed()) {
      Loaded in = LoadInputs(model_path, corpus_path);
      VerifyOptions options;
      options.tolerance = tolerance;
      if (!beam_sizes.empty()) options.beam_sizes = beam_sizes;
      bool ok = true;
      for (const PropertyResult& p : Verify(*in.model, in.corpus, options)) {
        const char* status = p.skipped ? "SKIP" : (p.passed ? "PASS" : "FAIL");
        std::printf("%-4s %-20s checks=%-7lld max_defect=%.3e  %s\n", status,
                    p.name.c_str(), static_cast<long long>(p.checks),
                    p.max_defect, p.detail.c_str());
        ok = ok && p.passed;
      }
      return ok ? kExitOk : kExitPropertyFailure;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInputError;
  }
  return kExitOk;
}
