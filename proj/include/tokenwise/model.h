// tokenwise/model.h
//
// Transducer model interface (encoder, predictor, joiner) with two
// deterministic synthetic implementations and joiner-call accounting.

#ifndef TOKENWISE_MODEL_H_
#define TOKENWISE_MODEL_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tokenwise/core.h"

namespace tokenwise {

struct EncodedFrames;  // model-private per-utterance data

struct EncoderOutput {
  int32_t frames = 0;
  uint64_t key = 0;
  std::shared_ptr<const EncodedFrames> features;
};

// Per-decode joiner accounting. Owned by a single decode; merged by summation.
struct JoinerCounters {
  int64_t calls = 0;           // batched joiner invocations
  int64_t frame_joins = 0;     // frames included, summed over invocations
  int64_t frames_decoded = 0;  // encoder frames consumed by the search

  JoinerCounters& operator+=(const JoinerCounters& o) {
    calls += o.calls;
    frame_joins += o.frame_joins;
    frames_decoded += o.frames_decoded;
    return *this;
  }
  bool operator==(const JoinerCounters&) const = default;
};

enum class ModelKind { kSeeded, kTabular };

struct ModelSpec {
  ModelKind kind = ModelKind::kSeeded;
  int32_t vocab_size = 1;
  // Default utterance length for seeded models; payload length for tabular.
  int32_t frames = 0;
  uint64_t seed = 0;
  // Seeded only. When set, the model is "peaky": a fraction blank_prior of
  // frames is blank-dominated and the rest cue the next token of a hidden
  // per-utterance transcript.
  std::optional<double> blank_prior;
  // Prefixes of at least this many tokens see a blank-certain joiner.
  std::optional<int32_t> max_tokens;
  // Tabular only: raw logits payload[t][prefix_length][k], k == vocab_size is
  // blank. -inf (JSON null) marks an impossible symbol.
  std::vector<std::vector<std::vector<double>>> payload;
};

ModelSpec ParseModelSpec(const std::string& json_text);
std::string SerializeModelSpec(const ModelSpec& spec);
ModelSpec ReadModelSpec(const std::string& path);
void WriteModelSpec(const std::string& path, const ModelSpec& spec);

class TransducerModel {
 public:
  virtual ~TransducerModel() = default;

  int32_t vocab_size() const { return vocab_size_; }
  const ModelSpec& spec() const { return spec_; }

  // `utterance_key` selects the synthetic acoustics; `frames` is ignored by
  // models with a fixed length (pass -1 to use the model default).
  virtual EncoderOutput Encode(uint64_t utterance_key, int32_t frames) const = 0;

  PredictorState InitPredictor() const;
  PredictorState AdvancePredictor(const PredictorState& state,
                                  TokenId token) const;

  // One batched joiner invocation over frames [t_begin, t_end) for every
  // state. Counts one call and (t_end - t_begin) frame joins.
  virtual std::vector<SegmentLattice> Join(
      const EncoderOutput& encoder, int32_t t_begin, int32_t t_end,
      std::span<const PredictorState> states, JoinerCounters& counters) const;

 protected:
  explicit TransducerModel(ModelSpec spec);

  // Raw logits for one frame and one state; logits.size() == vocab + 1.
  virtual void ComputeLogits(const EncoderOutput& encoder, int32_t t,
                             const PredictorState& state,
                             std::span<double> logits) const = 0;

  ModelSpec spec_;
  int32_t vocab_size_;
};

std::unique_ptr<TransducerModel> LoadModel(const ModelSpec& spec);

// 64-bit FNV-1a of a string; used to derive utterance keys from ids.
uint64_t HashString(const std::string& s);

}  // namespace tokenwise

#endif  // TOKENWISE_MODEL_H_
