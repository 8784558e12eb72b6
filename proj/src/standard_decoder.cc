// tokenwise/src/standard_decoder.cc
//
// Frame-synchronous breadth-first search. A frame is left only once every
// hypothesis in the beam has emitted blank on it.

#include <algorithm>
#include <utility>

#include "tokenwise/decoder.h"

namespace tokenwise {

StandardDecoder::StandardDecoder(const TransducerModel& model,
                                 DecodeConfig config)
    : model_(model), config_(config) {
  config_.Validate();
}

DecodeResult StandardDecoder::Decode(const EncoderOutput& encoder) const {
  const size_t n = static_cast<size_t>(config_.beam_size);
  const int32_t vocab = model_.vocab_size();
  const int32_t max_rounds = config_.max_rounds_per_segment > 0
                                 ? config_.max_rounds_per_segment
                                 : 16;
  DecodeResult result;

  std::vector<Hypothesis> beam(1);
  beam[0].score = kLogOne;
  beam[0].predictor_state = model_.InitPredictor();

  for (int32_t t = 0; t < encoder.frames; ++t) {
    std::vector<Hypothesis> active = std::move(beam);
    Beam finished(n);
    int32_t round = 0;
    for (; !active.empty(); ++round) {
      std::vector<PredictorState> states;
      for (const auto& h : active) states.push_back(h.predictor_state);
      std::vector<SegmentLattice> lattices =
          model_.Join(encoder, t, t + 1, states, result.counters);

      // Out of rounds: close every remaining hypothesis with blank.
      const bool last = round == max_rounds;
      std::vector<Expansion> candidates;
      for (size_t i = 0; i < active.size(); ++i) {
        Hypothesis blank;
        blank.tokens = active[i].tokens;
        blank.score = active[i].score + lattices[i].Blank(0);
        blank.predictor_state = active[i].predictor_state;
        finished.AddAndMerge(std::move(blank));
        if (last) continue;
        for (TokenId k = 0; k < vocab; ++k) {
          candidates.push_back({static_cast<int32_t>(i), k,
                                active[i].score + lattices[i].At(0, k)});
        }
      }
      if (last) {
        result.forced_finalizations += static_cast<int64_t>(active.size());
        break;
      }

      const LogProb threshold = ChooseNthScore(finished.hypotheses(), n);
      std::erase_if(candidates, [threshold](const Expansion& e) {
        return e.score <= threshold;
      });
      std::vector<Expansion> chosen =
          ChooseNBestExpansions(std::move(candidates), active, n);

      Beam next(n);
      for (const Expansion& e : chosen) {
        Hypothesis child;
        child.tokens = active[e.hyp_index].tokens;
        child.tokens.push_back(e.token);
        child.score = e.score;
        child.predictor_state =
            model_.AdvancePredictor(active[e.hyp_index].predictor_state, e.token);
        next.AddAndMerge(std::move(child));
      }
      active = std::move(next.hypotheses());
    }
    finished.Trim();
    beam = std::move(finished.hypotheses());
    result.counters.frames_decoded += 1;
  }

  result.nbest = ToNBestList(beam, static_cast<size_t>(config_.nbest));
  return result;
}

DecodeResult DecodeUtteranceStandard(const TransducerModel& model,
                                     const EncoderOutput& encoder,
                                     const DecodeConfig& config) {
  return StandardDecoder(model, config).Decode(encoder);
}

}  // namespace tokenwise
