// tokenwise/src/verify.cc

#include <algorithm>
#include <cmath>
#include <map>

#include "tokenwise/harness.h"

namespace tokenwise {

namespace {

using ScoreMap = std::map<std::vector<TokenId>, LogProb>;

double ScoreGap(LogProb a, LogProb b) {
  if (a == b) return 0.0;  // also covers kLogZero on both sides
  return std::abs(a - b);
}

ScoreMap ToMap(const NBestList& list) {
  ScoreMap out;
  for (const auto& e : list) out.emplace(e.tokens, e.score);
  return out;
}

// Largest score gap between two maps over the same key set; +inf when the
// key sets differ.
double MapGap(const ScoreMap& a, const ScoreMap& b) {
  if (a.size() != b.size()) return INFINITY;
  double gap = 0.0;
  for (const auto& [tokens, score] : a) {
    auto it = b.find(tokens);
    if (it == b.end()) return INFINITY;
    gap = std::max(gap, ScoreGap(score, it->second));
  }
  return gap;
}

ScoreMap NonZero(const ExactMarginals& exact) {
  ScoreMap out;
  for (const auto& [tokens, score] : exact.marginals) {
    if (score != kLogZero) out.emplace(tokens, score);
  }
  return out;
}

void Record(PropertyResult& p, double defect, const std::string& where) {
  ++p.checks;
  if (defect > p.max_defect || std::isnan(defect)) {
    p.max_defect = defect;
    p.detail = where;
  }
}

}  // namespace

std::vector<PropertyResult> Verify(const TransducerModel& model,
                                   const std::vector<Utterance>& corpus,
                                   const VerifyOptions& options) {
  PropertyResult s1;
  s1.name = "s1_equivalence";
  PropertyResult exact;
  exact.name = "oracle_exactness";
  PropertyResult invariance;
  invariance.name = "segment_invariance";
  PropertyResult mass;
  mass.name = "mass_conservation";
  PropertyResult dual;
  dual.name = "oracle_agreement";

  std::string where;
  RoundObserver observer = [&](const Hypothesis& h, const SegmentLattice& l) {
    Record(mass, MassConservationDefect(h, l), where);
  };

  const auto& spec = model.spec();
  const OracleLimits& limits = options.limits;
  const bool capped = spec.max_tokens && *spec.max_tokens <= limits.max_tokens;

  for (const Utterance& utt : corpus) {
    EncoderOutput enc = EncodeUtterance(model, utt);

    for (int32_t beam : options.beam_sizes) {
      where = utt.id + " N=" + std::to_string(beam);
      DecodeConfig config;
      config.beam_size = beam;
      config.segment_size = 1;
      config.nbest = beam;
      DecodeResult tw = DecodeUtteranceTokenwise(model, enc, config, observer);
      DecodeResult st = DecodeUtteranceStandard(model, enc, config);
      double gap = 0.0;
      if (tw.nbest.size() != st.nbest.size()) {
        gap = INFINITY;
      } else {
        for (size_t i = 0; i < tw.nbest.size(); ++i) {
          if (tw.nbest[i].tokens != st.nbest[i].tokens) {
            gap = INFINITY;
            break;
          }
          gap = std::max(gap, ScoreGap(tw.nbest[i].score, st.nbest[i].score));
        }
      }
      Record(s1, gap, where);
    }

    if (!capped || utt.frames > limits.max_frames ||
        model.vocab_size() > limits.max_vocab) {
      continue;
    }
    const int32_t cap = *spec.max_tokens;
    ExactMarginals by_paths = ExactMarginalsByEnumeration(model, enc, cap, false, limits);
    ExactMarginals by_forward = ExactMarginalsByForward(model, enc, cap, limits);
    ScoreMap oracle = NonZero(by_paths);
    where = utt.id;
    Record(dual, MapGap(oracle, NonZero(by_forward)), where);

    std::vector<int32_t> segments = {1, 2, 3, std::max(utt.frames, 1)};
    std::sort(segments.begin(), segments.end());
    segments.erase(std::unique(segments.begin(), segments.end()), segments.end());
    std::map<int32_t, ScoreMap> by_segment;
    for (int32_t s : segments) {
      where = utt.id + " S=" + std::to_string(s);
      DecodeConfig config;
      config.beam_size = options.unbounded_beam;
      config.segment_size = s;
      config.nbest = options.unbounded_beam;
      DecodeResult r = DecodeUtteranceTokenwise(model, enc, config, observer);
      by_segment[s] = ToMap(r.nbest);
      if (s == std::max(utt.frames, 1)) {
        double gap = MapGap(oracle, by_segment[s]);
        NBestList ranked = RankMarginals(by_paths, r.nbest.size());
        for (size_t i = 0; i < ranked.size() && gap != INFINITY; ++i) {
          if (ranked[i].tokens != r.nbest[i].tokens) gap = INFINITY;
        }
        Record(exact, gap, where);
      }
    }
    for (int32_t s : segments) {
      where = utt.id + " S=1 vs S=" + std::to_string(s);
      Record(invariance, MapGap(by_segment[1], by_segment[s]), where);
    }
  }

  std::vector<PropertyResult> out = {s1, exact, invariance, mass, dual};
  for (auto& p : out) {
    if (p.checks == 0) {
      p.skipped = true;
      p.detail = capped ? "no utterance within oracle limits"
                        : "model has no token cap within oracle limits";
      continue;
    }
    p.passed = !(p.max_defect > options.tolerance) && !std::isnan(p.max_defect);
  }
  return out;
}

}  // namespace tokenwise
