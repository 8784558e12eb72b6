// tokenwise/decoder.h
//
// Breadth-first transducer beam search (frame by frame) and token-wise
// beam search, which batches joiner calls across a segment of frames and
// aggregates emission probabilities over all frames of the segment.

#ifndef TOKENWISE_DECODER_H_
#define TOKENWISE_DECODER_H_

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "tokenwise/core.h"
#include "tokenwise/model.h"

namespace tokenwise {

struct DecodeConfig {
  int32_t beam_size = 4;
  int32_t segment_size = 1;
  int32_t nbest = 1;
  // Expansion rounds allowed per segment before stragglers are finalized.
  // 0 selects 16 * segment_size.
  int32_t max_rounds_per_segment = 0;
  double score_tolerance = 1e-9;

  void Validate() const;
  int32_t MaxRounds() const {
    return max_rounds_per_segment > 0 ? max_rounds_per_segment
                                      : 16 * segment_size;
  }
};

struct NBestEntry {
  std::vector<TokenId> tokens;
  LogProb score = kLogZero;

  bool operator==(const NBestEntry&) const = default;
};

// Descending by score, no duplicate sequences.
using NBestList = std::vector<NBestEntry>;

struct DecodeResult {
  NBestList nbest;
  JoinerCounters counters;
  // Hypotheses finalized because the round cap was hit.
  int64_t forced_finalizations = 0;
};

// Invoked for every group-A hypothesis in every expansion round together
// with its lattice for the current segment.
using RoundObserver =
    std::function<void(const Hypothesis&, const SegmentLattice&)>;

// ---- segment arithmetic (frame indices 1-based, as t1/t2 in the math) ----

// Log-probability of emitting blank at every frame t1 .. t2-1 of the
// segment. t2 == frames()+1 means "to the end of the segment". Returns
// kLogOne for t1 == t2 and kLogZero for t1 > t2.
LogProb BlankRun(const SegmentLattice& lattice, int32_t t1, int32_t t2);

// c[t] = log sum_{t1 <= t} alpha[t1] * BlankRun(t1, t): mass of having
// emitted the last token no later than frame t and waited until t.
// Returns frames()+1 entries; the last one is the blank expansion.
std::vector<LogProb> EmissionPrefix(std::span<const LogProb> alpha,
                                    const SegmentLattice& lattice);

struct NonBlankExpansion {
  // Per-frame mass of emitting the new token at that frame (0-based).
  std::vector<LogProb> emission;
  LogProb score = kLogZero;
};

NonBlankExpansion ExpandNonBlank(std::span<const LogProb> alpha,
                                 const SegmentLattice& lattice, TokenId token);

// Score of the hypothesis after emitting blanks up to the end of the segment.
LogProb ExpandBlank(std::span<const LogProb> alpha,
                    const SegmentLattice& lattice);

// |P(blank expansion) + sum_k P(token k expansion) - P(hyp)| in linear domain.
double MassConservationDefect(const Hypothesis& hyp,
                              const SegmentLattice& lattice);

// ---- beam utilities ----

std::vector<Hypothesis> ChooseNBest(std::vector<Hypothesis> hyps, size_t n);

// n-th highest score, kLogZero when fewer than n hypotheses exist.
LogProb ChooseNthScore(std::span<const Hypothesis> hyps, size_t n);

struct Expansion {
  int32_t hyp_index = 0;
  TokenId token = 0;
  LogProb score = kLogZero;
};

// Globally top-n expansions. Ties are broken by the ranking of the sequence
// each expansion would produce.
std::vector<Expansion> ChooseNBestExpansions(
    std::vector<Expansion> candidates, std::span<const Hypothesis> parents,
    size_t n);

NBestList ToNBestList(std::span<const Hypothesis> hyps, size_t n);

// ---- searches ----

class TokenwiseDecoder {
 public:
  TokenwiseDecoder(const TransducerModel& model, DecodeConfig config,
                   RoundObserver observer = {});

  DecodeResult Decode(const EncoderOutput& encoder) const;

  // One segment [t_begin, t_end). Incoming hypotheses carry scores only.
  Beam DecodeSegment(const Beam& beam_in, const EncoderOutput& encoder,
                     int32_t t_begin, int32_t t_end, JoinerCounters& counters,
                     int64_t& forced_finalizations) const;

 private:
  const TransducerModel& model_;
  DecodeConfig config_;
  RoundObserver observer_;
};

// Frame-synchronous breadth-first search. Kept separate from the token-wise
// search so the two can check each other at segment size 1.
class StandardDecoder {
 public:
  StandardDecoder(const TransducerModel& model, DecodeConfig config);

  DecodeResult Decode(const EncoderOutput& encoder) const;

 private:
  const TransducerModel& model_;
  DecodeConfig config_;
};

DecodeResult DecodeUtteranceTokenwise(const TransducerModel& model,
                                      const EncoderOutput& encoder,
                                      const DecodeConfig& config,
                                      const RoundObserver& observer = {});

DecodeResult DecodeUtteranceStandard(const TransducerModel& model,
                                     const EncoderOutput& encoder,
                                     const DecodeConfig& config);

}  // namespace tokenwise

#endif  // TOKENWISE_DECODER_H_
