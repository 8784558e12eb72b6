// tokenwise/tests/harness_test.cc

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_util.h"
#include "tokenwise/harness.h"

namespace tokenwise {
namespace {

namespace fs = std::filesystem;

std::string DataPath(const std::string& name) {
  return std::string(TOKENWISE_TEST_DATA) + "/" + name;
}

std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path ScratchDir() {
  fs::path dir = fs::temp_directory_path() / "tokenwise_harness_test";
  fs::create_directories(dir);
  return dir;
}

// Joiner rows scaled by 1.5 in the linear domain: no longer normalized.
class InflatedModel : public TransducerModel {
 public:
  explicit InflatedModel(const ModelSpec& spec)
      : TransducerModel(spec), inner_(LoadModel(spec)) {}
  EncoderOutput Encode(uint64_t key, int32_t frames) const override {
    return inner_->Encode(key, frames);
  }
  std::vector<SegmentLattice> Join(const EncoderOutput& encoder, int32_t t_begin,
                                   int32_t t_end,
                                   std::span<const PredictorState> states,
                                   JoinerCounters& counters) const override {
    auto out = inner_->Join(encoder, t_begin, t_end, states, counters);
    for (auto& l : out) {
      for (int32_t t = 0; t < l.frames(); ++t) {
        for (int32_t k = 0; k <= l.vocab_size(); ++k) l.At(t, k) += std::log(1.5);
      }
    }
    return out;
  }

 protected:
  void ComputeLogits(const EncoderOutput&, int32_t, const PredictorState&,
                     std::span<double>) const override {}

 private:
  std::unique_ptr<TransducerModel> inner_;
};

// Token probabilities depend on how many frames one call covers, so wide
// segments see a different distribution than single frames.
class WidthDependentModel : public TransducerModel {
 public:
  explicit WidthDependentModel(const ModelSpec& spec)
      : TransducerModel(spec), inner_(LoadModel(spec)) {}
  EncoderOutput Encode(uint64_t key, int32_t frames) const override {
    return inner_->Encode(key, frames);
  }
  std::vector<SegmentLattice> Join(const EncoderOutput& encoder, int32_t t_begin,
                                   int32_t t_end,
                                   std::span<const PredictorState> states,
                                   JoinerCounters& counters) const override {
    if (t_end - t_begin == 1) {
      return inner_->Join(encoder, t_begin, t_end, states, counters);
    }
    auto out = inner_->Join(encoder, t_begin, t_end, states, counters);
    for (auto& l : out) {
      for (int32_t t = 0; t < l.frames(); ++t) {
        double z = kLogZero;
        l.At(t, 0) += 1.0;
        for (double v : l.Row(t)) z = LogAdd(z, v);
        for (int32_t k = 0; k <= l.vocab_size(); ++k) l.At(t, k) -= z;
      }
    }
    return out;
  }

 protected:
  void ComputeLogits(const EncoderOutput&, int32_t, const PredictorState&,
                     std::span<double>) const override {}

 private:
  std::unique_ptr<TransducerModel> inner_;
};

TEST_CASE("corpus parsing") {
  std::istringstream empty("");
  CHECK(ParseCorpus(empty).empty());

  std::vector<Utterance> corpus = {{"a", 5, {1, 2}}, {"b", 0, {}}};
  std::istringstream text(SerializeCorpus(corpus) + "\n");
  CHECK(ParseCorpus(text, 3) == corpus);

  std::istringstream oov(R"({"id":"x7","frames":4,"reference":[0,9]})");
  try {
    ParseCorpus(oov, 4);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("x7") != std::string::npos);
  }

  std::istringstream bad(SerializeCorpus(corpus) + "{\"id\":\"c\"}\n");
  try {
    ParseCorpus(bad);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  std::istringstream negative(R"({"id":"n","frames":-1,"reference":[]})");
  CHECK_THROWS_AS(ParseCorpus(negative), Error);
  CHECK_THROWS_AS(LoadCorpus("/nonexistent/corpus.jsonl"), Error);
}

TEST_CASE("corpus files round-trip") {
  fs::path path = ScratchDir() / "roundtrip.jsonl";
  std::vector<Utterance> corpus = {{"u1", 3, {0}}, {"u2", 7, {2, 2, 1}}};
  SaveCorpus(path.string(), corpus);
  CHECK(LoadCorpus(path.string(), 3) == corpus);
}

TEST_CASE("generation is reproducible") {
  GenerateOptions options;
  options.count = 5;
  options.vocab_size = 6;
  options.min_frames = 20;
  options.max_frames = 30;
  GeneratedCorpus a = GenerateCorpus(options);
  GeneratedCorpus b = GenerateCorpus(options);
  CHECK(SerializeCorpus(a.utterances) == SerializeCorpus(b.utterances));
  CHECK(SerializeModelSpec(a.model) == SerializeModelSpec(b.model));
  for (const auto& utt : a.utterances) {
    CHECK(utt.frames >= 20);
    CHECK(utt.frames <= 30);
  }

  options.seed = 2;
  CHECK(SerializeCorpus(GenerateCorpus(options).utterances) !=
        SerializeCorpus(a.utterances));

  options.count = 0;
  CHECK(GenerateCorpus(options).utterances.empty());
  options.min_frames = 40;
  CHECK_THROWS_AS(GenerateCorpus(options), Error);
}

TEST_CASE("the frozen benchmark corpus regenerates byte for byte") {
  // Utterances are generated independently, so a shorter run reproduces a
  // prefix of the frozen file.
  GenerateOptions options;
  options.seed = 1;
  options.count = 40;
  options.vocab_size = 16;
  options.min_frames = 90;
  options.max_frames = 110;
  options.blank_prior = 0.85;
  GeneratedCorpus g = GenerateCorpus(options);
  std::string frozen = ReadFile(DataPath("bench_corpus.jsonl"));
  std::string fresh = SerializeCorpus(g.utterances);
  CHECK(frozen.compare(0, fresh.size(), fresh) == 0);
  CHECK(ReadModelSpec(DataPath("bench_model.json")).seed == 1);
  CHECK(SerializeModelSpec(ReadModelSpec(DataPath("bench_model.json"))) ==
        SerializeModelSpec(g.model));
}

TEST_CASE("references are reachable by a moderate beam") {
  auto model = LoadModel(ReadModelSpec(DataPath("bench_model.json")));
  auto corpus = LoadCorpus(DataPath("bench_corpus.jsonl"), 16);
  REQUIRE(corpus.size() == 200);
  DecodeConfig config;
  config.beam_size = 16;
  config.nbest = 16;
  CorpusDecode d = DecodeCorpus(*model, corpus, config);
  int found = 0;
  for (size_t i = 0; i < corpus.size(); ++i) {
    for (const auto& e : d.results[i].nbest) found += e.tokens == corpus[i].reference;
  }
  CHECK(found >= 190);
}

TEST_CASE("DecodeCorpus is independent of the worker count") {
  auto model = LoadModel(ReadModelSpec(DataPath("bench_model.json")));
  auto corpus = LoadCorpus(DataPath("bench_corpus.jsonl"), 16);
  corpus.resize(30);
  DecodeConfig config;
  config.beam_size = 3;
  config.segment_size = 3;
  config.nbest = 3;
  CorpusDecode one = DecodeCorpus(*model, corpus, config, Algorithm::kTokenwise, 1);
  CorpusDecode four = DecodeCorpus(*model, corpus, config, Algorithm::kTokenwise, 4);
  CHECK(one.counters == four.counters);
  for (size_t i = 0; i < corpus.size(); ++i) {
    CHECK(one.results[i].nbest == four.results[i].nbest);
  }
}

TEST_CASE("benchmark baseline and relative deltas") {
  auto model = LoadModel(ReadModelSpec(DataPath("bench_model.json")));
  auto corpus = LoadCorpus(DataPath("bench_corpus.jsonl"), 16);
  corpus.resize(40);
  BenchmarkOptions options;
  options.beam_sizes = {2};
  options.segment_sizes = {1, 4};
  options.repeats = 1;
  BenchmarkReport report = RunBenchmark(*model, corpus, options);
  const BenchmarkCell& base = report.Cell(2, 1);
  CHECK(base.wer_relative == 0.0);
  CHECK(base.calls_relative == 0.0);
  const BenchmarkCell& wide = report.Cell(2, 4);
  CHECK(*wide.calls_relative ==
        doctest::Approx((wide.efficiency.calls_per_frame - base.efficiency.calls_per_frame) /
                        base.efficiency.calls_per_frame));

  // The baseline cell is the standard search.
  DecodeConfig config;
  config.beam_size = 2;
  config.nbest = 2;
  CorpusDecode standard = DecodeCorpus(*model, corpus, config, Algorithm::kStandard);
  std::vector<std::pair<Transcript, Transcript>> pairs;
  for (size_t i = 0; i < corpus.size(); ++i) {
    pairs.emplace_back(corpus[i].reference, standard.results[i].nbest[0].tokens);
  }
  CHECK(base.wer == CorpusWer(pairs));
  CHECK(base.counters == standard.counters);

  auto doc = nlohmann::json::parse(report.ToJson());
  CHECK(doc.contains("N2/S1"));
  CHECK(doc["N2/S4"]["relative"].contains("calls_per_frame"));
  CHECK(doc["N2/S4"]["timing"].contains("wall_time_sec"));

  options.segment_sizes = {2, 4};
  CHECK_THROWS_AS(RunBenchmark(*model, corpus, options), Error);
}

TEST_CASE("benchmark on a blank-certain model") {
  auto model = LoadModel(testing::BlankCertainSpec(60, 4));
  std::vector<Utterance> corpus = {{"a", 60, {1, 2, 3}}, {"b", 60, {0}}};
  BenchmarkOptions options;
  options.beam_sizes = {1, 3};
  options.segment_sizes = {1, 2, 3, 5, 10};
  options.repeats = 1;
  BenchmarkReport report = RunBenchmark(*model, corpus, options);
  for (int32_t beam : options.beam_sizes) {
    for (int32_t s : options.segment_sizes) {
      const BenchmarkCell& c = report.Cell(beam, s);
      CHECK(c.efficiency.calls_per_frame == doctest::Approx(1.0 / s));
      CHECK(c.efficiency.joins_per_frame == 1.0);
      CHECK(c.wer == 1.0);  // every reference token deleted
      CHECK(c.ower == 1.0);
    }
  }
}

TEST_CASE("verify passes on a small capped corpus") {
  GenerateOptions g;
  g.count = 12;
  g.vocab_size = 3;
  g.min_frames = 1;
  g.max_frames = 5;
  g.blank_prior.reset();
  g.max_tokens = 4;
  GeneratedCorpus gen = GenerateCorpus(g);
  auto model = LoadModel(gen.model);
  for (const auto& p : Verify(*model, gen.utterances, {})) {
    INFO(p.name << ": " << p.detail);
    CHECK(p.passed);
    CHECK_FALSE(p.skipped);
    CHECK(p.checks > 0);
  }
}

TEST_CASE("verify catches broken models") {
  GenerateOptions g;
  g.count = 6;
  g.vocab_size = 3;
  g.min_frames = 3;
  g.max_frames = 5;
  g.blank_prior.reset();
  g.max_tokens = 3;
  GeneratedCorpus gen = GenerateCorpus(g);

  InflatedModel inflated(gen.model);
  std::map<std::string, PropertyResult> by_name;
  for (const auto& p : Verify(inflated, gen.utterances, {})) by_name[p.name] = p;
  CHECK_FALSE(by_name["mass_conservation"].passed);

  WidthDependentModel skewed(gen.model);
  by_name.clear();
  for (const auto& p : Verify(skewed, gen.utterances, {})) by_name[p.name] = p;
  CHECK(by_name["s1_equivalence"].passed);
  CHECK_FALSE(by_name["segment_invariance"].passed);
  CHECK_FALSE(by_name["oracle_exactness"].passed);
}

TEST_CASE("verify skips oracle checks without a token cap") {
  auto model = LoadModel(ReadModelSpec(DataPath("bench_model.json")));
  auto corpus = LoadCorpus(DataPath("bench_corpus.jsonl"), 16);
  corpus.resize(3);
  VerifyOptions options;
  options.beam_sizes = {2};
  for (const auto& p : Verify(*model, corpus, options)) {
    if (p.name == "s1_equivalence" || p.name == "mass_conservation") {
      CHECK(p.passed);
      CHECK_FALSE(p.skipped);
    } else {
      CHECK(p.skipped);
    }
  }
}

int RunCli(const std::string& args) {
  std::string cmd = std::string(TOKENWISE_CLI) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

TEST_CASE("CLI exit codes and outputs") {
  fs::path dir = ScratchDir();
  std::string model = (dir / "m.json").string();
  std::string corpus = (dir / "c.jsonl").string();
  std::string report = (dir / "r.json").string();
  std::string decoded = (dir / "d.jsonl").string();

  CHECK(RunCli("generate --model " + model + " --corpus " + corpus +
               " --count 4 --vocab-size 3 --min-frames 2 --max-frames 4"
               " --uniform --max-tokens 3") == 0);
  CHECK(LoadCorpus(corpus, 3).size() == 4);

  CHECK(RunCli("decode --model " + model + " --corpus " + corpus +
               " --beam-size 2 --segment-size 2 --out " + decoded) == 0);
  std::istringstream lines(ReadFile(decoded));
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    auto rec = nlohmann::json::parse(line);
    CHECK(rec.contains("nbest"));
    CHECK(rec["nbest"].size() <= 2);
    ++count;
  }
  CHECK(count == 4);

  CHECK(RunCli("bench --model " + model + " --corpus " + corpus +
               " --beam-size 1 2 --segment-size 1 2 --repeats 1 --out " + report) == 0);
  CHECK(nlohmann::json::parse(ReadFile(report)).contains("N2/S2"));

  CHECK(RunCli("verify --model " + model + " --corpus " + corpus) == 0);
  CHECK(RunCli("verify --model " + model + " --corpus " + corpus +
               " --tolerance 1e-300") == 1);
  CHECK(RunCli("verify --model " + (dir / "missing.json").string() + " --corpus " +
               corpus) == 2);
  std::string listing = (dir / "verify.txt").string();
  CHECK(std::system((std::string(TOKENWISE_CLI) + " verify --model " + model +
                     " --corpus " + corpus + " --tolerance 1e-15 >" + listing)
                        .c_str()) != 0);
  CHECK(ReadFile(listing).find("FAIL") != std::string::npos);
  CHECK(ReadFile(listing).find("max_defect=") != std::string::npos);

  // A payload row of all -inf cannot be normalized: load error, not a pass.
  std::string corrupt = (dir / "corrupt.json").string();
  std::ofstream(corrupt) << R"({"kind":"tabular","vocab_size":3,"payload":[[[null,null,null,null]]]})";
  CHECK(RunCli("verify --model " + corrupt + " --corpus " + corpus) == 2);
  CHECK(RunCli("bench --model " + model + " --corpus " + corpus +
               " --segment-size 2 --repeats 1") == 2);
  CHECK(RunCli("decode --model " + model + " --corpus " + corpus +
               " --beam-size 0") == 2);
}

}  // namespace
}  // namespace tokenwise
