// tokenwise/src/tokenwise_decoder.cc

#include <algorithm>
#include <utility>

#include "tokenwise/decoder.h"

namespace tokenwise {

namespace {

std::vector<PredictorState> StatesOf(std::span<const Hypothesis> hyps) {
  std::vector<PredictorState> states;
  states.reserve(hyps.size());
  for (const auto& h : hyps) states.push_back(h.predictor_state);
  return states;
}

Hypothesis Finished(const Hypothesis& h, LogProb score) {
  Hypothesis out;
  out.tokens = h.tokens;
  out.score = score;
  out.predictor_state = h.predictor_state;
  out.done_in_segment = true;
  return out;
}

}  // namespace

TokenwiseDecoder::TokenwiseDecoder(const TransducerModel& model,
                                   DecodeConfig config, RoundObserver observer)
    : model_(model), config_(config), observer_(std::move(observer)) {
  config_.Validate();
}

Beam TokenwiseDecoder::DecodeSegment(const Beam& beam_in,
                                     const EncoderOutput& encoder,
                                     int32_t t_begin, int32_t t_end,
                                     JoinerCounters& counters,
                                     int64_t& forced_finalizations) const {
  const int32_t s = t_end - t_begin;
  const size_t n = static_cast<size_t>(config_.beam_size);
  const int32_t vocab = model_.vocab_size();

  // Group A: every incoming hypothesis, its mass on the first frame.
  std::vector<Hypothesis> active;
  active.reserve(beam_in.size());
  for (const auto& h : beam_in.hypotheses()) {
    Hypothesis a = h;
    a.alpha.assign(s, kLogZero);
    a.alpha[0] = h.score;
    a.done_in_segment = false;
    active.push_back(std::move(a));
  }
  Beam finished(n);  // group B

  std::vector<Expansion> candidates;
  std::vector<std::vector<LogProb>> prefixes;
  for (int32_t round = 0;
       !active.empty() && round < config_.MaxRounds(); ++round) {
    std::vector<SegmentLattice> lattices = model_.Join(
        encoder, t_begin, t_end, StatesOf(active), counters);

    candidates.clear();
    prefixes.clear();
    for (size_t i = 0; i < active.size(); ++i) {
      const Hypothesis& hyp = active[i];
      const SegmentLattice& lattice = lattices[i];
      if (observer_) observer_(hyp, lattice);

      std::vector<LogProb> c = EmissionPrefix(hyp.alpha, lattice);
      finished.AddAndMerge(Finished(hyp, c.back()));

      std::vector<LogProb> d(s);
      for (TokenId k = 0; k < vocab; ++k) {
        for (int32_t t = 0; t < s; ++t) d[t] = c[t] + lattice.At(t, k);
        candidates.push_back({static_cast<int32_t>(i), k, LogSum(d)});
      }
      prefixes.push_back(std::move(c));
    }

    const LogProb threshold = ChooseNthScore(finished.hypotheses(), n);
    std::erase_if(candidates,
                  [threshold](const Expansion& e) { return e.score <= threshold; });
    std::vector<Expansion> chosen =
        ChooseNBestExpansions(std::move(candidates), active, n);
    candidates = {};

    Beam next(n);
    for (const Expansion& e : chosen) {
      const Hypothesis& parent = active[e.hyp_index];
      const SegmentLattice& lattice = lattices[e.hyp_index];
      const std::vector<LogProb>& c = prefixes[e.hyp_index];
      Hypothesis child;
      child.tokens = parent.tokens;
      child.tokens.push_back(e.token);
      child.alpha.resize(s);
      for (int32_t t = 0; t < s; ++t) child.alpha[t] = c[t] + lattice.At(t, e.token);
      child.score = e.score;
      child.predictor_state = model_.AdvancePredictor(parent.predictor_state, e.token);
      next.AddAndMerge(std::move(child));
    }
    active = std::move(next.hypotheses());
  }

  if (!active.empty()) {
    std::vector<SegmentLattice> lattices = model_.Join(
        encoder, t_begin, t_end, StatesOf(active), counters);
    for (size_t i = 0; i < active.size(); ++i) {
      finished.AddAndMerge(
          Finished(active[i], ExpandBlank(active[i].alpha, lattices[i])));
    }
    forced_finalizations += static_cast<int64_t>(active.size());
  }

  finished.Trim();
  for (auto& h : finished.hypotheses()) h.done_in_segment = false;
  return finished;
}

DecodeResult TokenwiseDecoder::Decode(const EncoderOutput& encoder) const {
  DecodeResult result;
  Beam beam(static_cast<size_t>(config_.beam_size));
  Hypothesis start;
  start.score = kLogOne;
  start.predictor_state = model_.InitPredictor();
  beam.AddAndMerge(std::move(start));

  const int32_t frames = encoder.frames;
  for (int32_t begin = 0; begin < frames; begin += config_.segment_size) {
    int32_t end = std::min(frames, begin + config_.segment_size);
    beam = DecodeSegment(beam, encoder, begin, end, result.counters,
                         result.forced_finalizations);
    result.counters.frames_decoded += end - begin;
  }
  result.nbest = ToNBestList(beam.hypotheses(),
                             static_cast<size_t>(config_.nbest));
  return result;
}

DecodeResult DecodeUtteranceTokenwise(const TransducerModel& model,
                                      const EncoderOutput& encoder,
                                      const DecodeConfig& config,
                                      const RoundObserver& observer) {
  return TokenwiseDecoder(model, config, observer).Decode(encoder);
}

}  // namespace tokenwise
