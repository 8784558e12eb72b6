// tokenwise/metrics.h
//
// Word error rate, oracle (best-in-list) word error rate and joiner
// efficiency statistics.

#ifndef TOKENWISE_METRICS_H_
#define TOKENWISE_METRICS_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "tokenwise/core.h"
#include "tokenwise/decoder.h"
#include "tokenwise/model.h"

namespace tokenwise {

struct ErrorCounts {
  int64_t substitutions = 0;
  int64_t insertions = 0;
  int64_t deletions = 0;
  int64_t reference_length = 0;

  int64_t errors() const { return substitutions + insertions + deletions; }
  ErrorCounts& operator+=(const ErrorCounts& o);
  bool operator==(const ErrorCounts&) const = default;
};

// Levenshtein alignment. Among minimal alignments the backtrace prefers
// substitution, then insertion, then deletion.
ErrorCounts EditDistance(std::span<const TokenId> reference,
                         std::span<const TokenId> hypothesis);

using Transcript = std::vector<TokenId>;

// Pooled over the corpus: total errors / total reference length.
double CorpusWer(std::span<const std::pair<Transcript, Transcript>> pairs);

// Per utterance the list entry with the fewest errors is scored; ties go to
// the entry ranked first by the decoder.
double CorpusOracleWer(std::span<const std::pair<Transcript, NBestList>> pairs);

struct EfficiencyStats {
  double calls_per_frame = 0.0;
  double joins_per_frame = 0.0;
  double throughput_frames_per_sec = 0.0;
  double wall_time_sec = 0.0;
};

EfficiencyStats ComputeEfficiency(const JoinerCounters& counters,
                                  double wall_time_sec);

}  // namespace tokenwise

#endif  // TOKENWISE_METRICS_H_
