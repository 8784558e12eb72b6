// tokenwise/core.h
//
// Domain types and log-domain numerics shared by the model, decoders,
// oracle and metrics.

#ifndef TOKENWISE_CORE_H_
#define TOKENWISE_CORE_H_

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tokenwise {

using TokenId = int32_t;

// Natural-log probability. kLogZero is probability 0, kLogOne is 1.
using LogProb = double;

inline constexpr LogProb kLogZero = -std::numeric_limits<double>::infinity();
inline constexpr LogProb kLogOne = 0.0;

// Raised for malformed inputs, contract violations and I/O failures.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// log(exp(a) + exp(b)). kLogZero is the identity and is returned unchanged
// operand-wise, so LogAdd(x, kLogZero) == x bit-for-bit.
LogProb LogAdd(LogProb a, LogProb b);

// Fold of LogAdd; the empty sum is kLogZero.
LogProb LogSum(std::span<const LogProb> values);

// Non-blank tokens are 0..size-1; blank is always `size`.
struct Vocabulary {
  int32_t size = 1;
  std::vector<std::string> labels;

  explicit Vocabulary(int32_t v, std::vector<std::string> names = {});

  TokenId blank_id() const { return size; }
  bool IsToken(TokenId k) const { return k >= 0 && k < size; }
  std::string Label(TokenId k) const;
};

// Normalized joiner output for one predictor state over a contiguous run of
// encoder frames: frames() rows by (vocab + 1) columns, blank in the last
// column. Frame indices here are 0-based within the segment.
class SegmentLattice {
 public:
  SegmentLattice() = default;
  SegmentLattice(int32_t frames, int32_t vocab_size, int32_t hypothesis_id = -1);
  SegmentLattice(int32_t frames, int32_t vocab_size,
                 std::vector<LogProb> scores, int32_t hypothesis_id = -1);

  int32_t frames() const { return frames_; }
  int32_t vocab_size() const { return vocab_size_; }
  int32_t hypothesis_id() const { return hypothesis_id_; }
  void set_hypothesis_id(int32_t id) { hypothesis_id_ = id; }

  LogProb At(int32_t t, TokenId k) const {
    return scores_[static_cast<size_t>(t) * (vocab_size_ + 1) + k];
  }
  LogProb& At(int32_t t, TokenId k) {
    return scores_[static_cast<size_t>(t) * (vocab_size_ + 1) + k];
  }
  LogProb Blank(int32_t t) const { return At(t, vocab_size_); }

  std::span<const LogProb> Row(int32_t t) const {
    return {scores_.data() + static_cast<size_t>(t) * (vocab_size_ + 1),
            static_cast<size_t>(vocab_size_ + 1)};
  }
  std::span<LogProb> Row(int32_t t) {
    return {scores_.data() + static_cast<size_t>(t) * (vocab_size_ + 1),
            static_cast<size_t>(vocab_size_ + 1)};
  }

  // Largest |LogSum(row)| over all rows; 0 for a normalized lattice.
  double MaxRowDefect() const;

 private:
  int32_t frames_ = 0;
  int32_t vocab_size_ = 0;
  int32_t hypothesis_id_ = -1;
  std::vector<LogProb> scores_;
};

// Prefix-conditioned predictor output. Models interpret `key`; `length` is
// the number of tokens consumed.
struct PredictorState {
  uint64_t key = 0;
  int32_t length = 0;

  bool operator==(const PredictorState&) const = default;
};

struct Hypothesis {
  std::vector<TokenId> tokens;
  LogProb score = kLogOne;
  // Distribution over the frame of the current segment in which the last
  // token was emitted. Empty outside of a segment.
  std::vector<LogProb> alpha;
  PredictorState predictor_state;
  bool done_in_segment = false;
};

// Ranking used everywhere: higher score, then shorter sequence, then
// lexicographically smaller token ids.
bool RanksBefore(LogProb score_a, std::span<const TokenId> tokens_a,
                 LogProb score_b, std::span<const TokenId> tokens_b);
bool RanksBefore(const Hypothesis& a, const Hypothesis& b);

// Hypotheses with pairwise-distinct token sequences.
class Beam {
 public:
  explicit Beam(size_t capacity) : capacity_(capacity) {}

  // Inserts `hyp`, or sums it into the existing hypothesis with the same
  // tokens. When both carry alpha, alphas are summed elementwise and must
  // have equal length.
  void AddAndMerge(Hypothesis hyp);

  // Keeps the `capacity` best by RanksBefore, sorted.
  void Trim();

  size_t capacity() const { return capacity_; }
  size_t size() const { return hyps_.size(); }
  bool empty() const { return hyps_.empty(); }
  const std::vector<Hypothesis>& hypotheses() const { return hyps_; }
  std::vector<Hypothesis>& hypotheses() { return hyps_; }

 private:
  size_t capacity_;
  std::vector<Hypothesis> hyps_;
};

}  // namespace tokenwise

#endif  // TOKENWISE_CORE_H_
