// tokenwise/oracle.h
//
// Exact sequence probabilities for toy-sized instances, computed by summing
// over every alignment. Two independent routes: explicit path enumeration
// and a per-sequence forward recursion over the (frame, prefix) grid.

#ifndef TOKENWISE_ORACLE_H_
#define TOKENWISE_ORACLE_H_

#include <cstdint>
#include <map>
#include <vector>

#include "tokenwise/core.h"
#include "tokenwise/decoder.h"
#include "tokenwise/model.h"

namespace tokenwise {

struct OracleLimits {
  int32_t max_frames = 6;
  int32_t max_vocab = 4;
  int32_t max_tokens = 5;
};

struct ExactMarginals {
  // p(y | x) for every sequence with at most max_tokens tokens.
  std::map<std::vector<TokenId>, LogProb> marginals;
  // Mass of alignments that would emit more than max_tokens tokens.
  LogProb excluded = kLogZero;
};

// Walks every alignment path. `reverse_token_order` changes only the
// enumeration order.
ExactMarginals ExactMarginalsByEnumeration(const TransducerModel& model,
                                           const EncoderOutput& encoder,
                                           int32_t max_tokens,
                                           bool reverse_token_order = false,
                                           const OracleLimits& limits = {});

// Forward recursion per candidate sequence; does not enumerate alignments.
// Frame count is not bounded by limits.max_frames.
ExactMarginals ExactMarginalsByForward(const TransducerModel& model,
                                       const EncoderOutput& encoder,
                                       int32_t max_tokens,
                                       const OracleLimits& limits = {});

// Probability of one sequence by the forward recursion.
LogProb SequenceLogProb(const TransducerModel& model,
                        const EncoderOutput& encoder,
                        const std::vector<TokenId>& tokens);

NBestList RankMarginals(const ExactMarginals& exact, size_t n);

NBestList ExactNBest(const TransducerModel& model, const EncoderOutput& encoder,
                     size_t n, int32_t max_tokens,
                     const OracleLimits& limits = {});

}  // namespace tokenwise

#endif  // TOKENWISE_ORACLE_H_
