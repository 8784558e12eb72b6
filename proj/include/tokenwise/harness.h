// tokenwise/harness.h
//
// Corpus files, synthetic corpus generation, benchmark sweeps over beam and
// segment sizes, and the end-to-end verification suite.

#ifndef TOKENWISE_HARNESS_H_
#define TOKENWISE_HARNESS_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "tokenwise/decoder.h"
#include "tokenwise/metrics.h"
#include "tokenwise/model.h"
#include "tokenwise/oracle.h"

namespace tokenwise {

struct Utterance {
  std::string id;
  int32_t frames = 0;
  Transcript reference;

  bool operator==(const Utterance&) const = default;
};

// One JSON object per line: {"id": str, "frames": int, "reference": [int]}.
// vocab_size < 0 skips the out-of-vocabulary check.
std::vector<Utterance> ParseCorpus(std::istream& in, int32_t vocab_size = -1);
std::vector<Utterance> LoadCorpus(const std::string& path,
                                  int32_t vocab_size = -1);
std::string SerializeCorpus(const std::vector<Utterance>& corpus);
void SaveCorpus(const std::string& path, const std::vector<Utterance>& corpus);

EncoderOutput EncodeUtterance(const TransducerModel& model,
                              const Utterance& utt);

struct GenerateOptions {
  uint64_t seed = 1;
  int32_t count = 10;
  int32_t vocab_size = 8;
  int32_t min_frames = 90;
  int32_t max_frames = 110;
  std::optional<double> blank_prior = 0.85;
  std::optional<int32_t> max_tokens;
  // Beam used to produce references when the oracle is out of reach.
  int32_t reference_beam = 16;
};

struct GeneratedCorpus {
  ModelSpec model;
  std::vector<Utterance> utterances;
};

// References are the exact top-1 sequence when the instance is within
// oracle limits, otherwise the top-1 of a wide token-wise search with the
// whole utterance as one segment.
GeneratedCorpus GenerateCorpus(const GenerateOptions& options);

struct CorpusDecode {
  std::vector<DecodeResult> results;  // in corpus order
  JoinerCounters counters;            // summed over utterances
  int64_t forced_finalizations = 0;
  double wall_time_sec = 0.0;
};

enum class Algorithm { kTokenwise, kStandard };

// Decodes every utterance with `workers` threads sharing the model.
CorpusDecode DecodeCorpus(const TransducerModel& model,
                          const std::vector<Utterance>& corpus,
                          const DecodeConfig& config,
                          Algorithm algorithm = Algorithm::kTokenwise,
                          int32_t workers = 1);

struct BenchmarkOptions {
  std::vector<int32_t> beam_sizes = {1};
  std::vector<int32_t> segment_sizes = {1};
  int32_t nbest = 0;  // 0: the whole beam
  int32_t repeats = 3;
  int32_t workers = 1;
  int32_t max_rounds = 0;
};

struct BenchmarkCell {
  int32_t beam_size = 0;
  int32_t segment_size = 0;
  int32_t nbest = 0;
  double wer = 0.0;
  double ower = 0.0;
  JoinerCounters counters;
  int64_t forced_finalizations = 0;
  EfficiencyStats efficiency;
  // (value - baseline) / baseline against the segment size 1 cell; empty
  // when the baseline value is zero.
  std::optional<double> wer_relative, ower_relative, calls_relative,
      joins_relative, throughput_relative;
};

struct BenchmarkReport {
  std::vector<BenchmarkCell> cells;

  const BenchmarkCell& Cell(int32_t beam_size, int32_t segment_size) const;
  // Keys "N{beam}/S{segment}"; wall-clock values live under "timing".
  std::string ToJson() const;
};

BenchmarkReport RunBenchmark(const TransducerModel& model,
                             const std::vector<Utterance>& corpus,
                             const BenchmarkOptions& options);

struct PropertyResult {
  std::string name;
  bool passed = true;
  bool skipped = false;
  int64_t checks = 0;
  double max_defect = 0.0;
  std::string detail;
};

struct VerifyOptions {
  double tolerance = 1e-9;
  std::vector<int32_t> beam_sizes = {1, 2, 5, 8};
  // Beam size treated as unbounded for the exactness properties.
  int32_t unbounded_beam = 4096;
  OracleLimits limits;
};

// S=1 equivalence, oracle exactness, S-invariance, mass conservation and
// agreement of the two oracles, over every utterance of the corpus.
std::vector<PropertyResult> Verify(const TransducerModel& model,
                                   const std::vector<Utterance>& corpus,
                                   const VerifyOptions& options);

}  // namespace tokenwise

#endif  // TOKENWISE_HARNESS_H_
