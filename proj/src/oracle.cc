// tokenwise/src/oracle.cc

#include "tokenwise/oracle.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace tokenwise {

namespace {

void CheckSize(const TransducerModel& model, const EncoderOutput& encoder,
               int32_t max_tokens, const OracleLimits& limits,
               bool check_frames) {
  if (check_frames && encoder.frames > limits.max_frames) {
    throw Error("oracle instance too large: " + std::to_string(encoder.frames) +
                " frames > " + std::to_string(limits.max_frames));
  }
  if (model.vocab_size() > limits.max_vocab) {
    throw Error("oracle instance too large: vocabulary " +
                std::to_string(model.vocab_size()) + " > " +
                std::to_string(limits.max_vocab));
  }
  if (max_tokens < 0 || max_tokens > limits.max_tokens) {
    throw Error("oracle token cap out of range: " + std::to_string(max_tokens));
  }
}

// Joiner rows keyed by (frame, prefix), filled on demand.
class RowCache {
 public:
  RowCache(const TransducerModel& model, const EncoderOutput& encoder)
      : model_(model), encoder_(encoder) {}

  const std::vector<LogProb>& Row(int32_t t, const std::vector<TokenId>& prefix) {
    auto key = std::make_pair(t, prefix);
    auto it = rows_.find(key);
    if (it != rows_.end()) return it->second;
    PredictorState state = model_.InitPredictor();
    for (TokenId k : prefix) state = model_.AdvancePredictor(state, k);
    JoinerCounters scratch;
    auto lattices = model_.Join(encoder_, t, t + 1, {&state, 1}, scratch);
    auto row = lattices[0].Row(0);
    return rows_.emplace(key, std::vector<LogProb>(row.begin(), row.end()))
        .first->second;
  }

 private:
  const TransducerModel& model_;
  const EncoderOutput& encoder_;
  std::map<std::pair<int32_t, std::vector<TokenId>>, std::vector<LogProb>> rows_;
};

struct Enumerator {
  RowCache& cache;
  int32_t frames;
  int32_t vocab;
  int32_t max_tokens;
  bool reverse;
  ExactMarginals& out;

  // Extends the path that has consumed frames [0, t) and emitted `prefix`
  // on frame t so far.
  void Walk(int32_t t, std::vector<TokenId>& prefix, LogProb logp) {
    if (t == frames) {
      auto [it, inserted] = out.marginals.try_emplace(prefix, logp);
      if (!inserted) it->second = LogAdd(it->second, logp);
      return;
    }
    const std::vector<LogProb> row = cache.Row(t, prefix);
    Walk(t + 1, prefix, logp + row[vocab]);
    if (static_cast<int32_t>(prefix.size()) == max_tokens) {
      out.excluded = LogAdd(
          out.excluded, logp + LogSum(std::span<const LogProb>(row.data(), vocab)));
      return;
    }
    for (int32_t i = 0; i < vocab; ++i) {
      TokenId k = reverse ? vocab - 1 - i : i;
      prefix.push_back(k);
      Walk(t, prefix, logp + row[k]);
      prefix.pop_back();
    }
  }
};

}  // namespace

ExactMarginals ExactMarginalsByEnumeration(const TransducerModel& model,
                                           const EncoderOutput& encoder,
                                           int32_t max_tokens,
                                           bool reverse_token_order,
                                           const OracleLimits& limits) {
  CheckSize(model, encoder, max_tokens, limits, true);
  ExactMarginals out;
  if (encoder.frames == 0) {
    out.marginals[{}] = kLogOne;
    return out;
  }
  RowCache cache(model, encoder);
  Enumerator walker{cache,      encoder.frames,      model.vocab_size(),
                    max_tokens, reverse_token_order, out};
  std::vector<TokenId> prefix;
  walker.Walk(0, prefix, kLogOne);
  return out;
}

LogProb SequenceLogProb(const TransducerModel& model,
                        const EncoderOutput& encoder,
                        const std::vector<TokenId>& tokens) {
  const int32_t frames = encoder.frames;
  const int32_t blank = model.vocab_size();
  const size_t len = tokens.size();
  if (frames == 0) return len == 0 ? kLogOne : kLogZero;

  // rows[u][t]: joiner output at frame t after the first u tokens.
  std::vector<std::vector<std::vector<LogProb>>> rows(len + 1);
  PredictorState state = model.InitPredictor();
  for (size_t u = 0; u <= len; ++u) {
    JoinerCounters scratch;
    auto lattice = model.Join(encoder, 0, frames, {&state, 1}, scratch)[0];
    for (int32_t t = 0; t < frames; ++t) {
      auto row = lattice.Row(t);
      rows[u].emplace_back(row.begin(), row.end());
    }
    if (u < len) state = model.AdvancePredictor(state, tokens[u]);
  }

  // fwd[t][u]: mass of reaching frame t with u tokens emitted, before the
  // frame's own emissions.
  std::vector<std::vector<LogProb>> fwd(frames,
                                        std::vector<LogProb>(len + 1, kLogZero));
  for (int32_t t = 0; t < frames; ++t) {
    for (size_t u = 0; u <= len; ++u) {
      LogProb v = (t == 0 && u == 0) ? kLogOne : kLogZero;
      if (t > 0) v = LogAdd(v, fwd[t - 1][u] + rows[u][t - 1][blank]);
      if (u > 0) v = LogAdd(v, fwd[t][u - 1] + rows[u - 1][t][tokens[u - 1]]);
      fwd[t][u] = v;
    }
  }
  return fwd[frames - 1][len] + rows[len][frames - 1][blank];
}

ExactMarginals ExactMarginalsByForward(const TransducerModel& model,
                                       const EncoderOutput& encoder,
                                       int32_t max_tokens,
                                       const OracleLimits& limits) {
  CheckSize(model, encoder, max_tokens, limits, false);
  ExactMarginals out;
  const int32_t vocab = model.vocab_size();
  // Breadth-first over all sequences of length 0..max_tokens.
  std::vector<std::vector<TokenId>> layer = {{}};
  std::vector<LogProb> kept;
  for (int32_t len = 0; len <= max_tokens; ++len) {
    std::vector<std::vector<TokenId>> next;
    for (auto& y : layer) {
      LogProb p = SequenceLogProb(model, encoder, y);
      kept.push_back(p);
      out.marginals.emplace(y, p);
      if (len < max_tokens) {
        for (TokenId k = 0; k < vocab; ++k) {
          next.push_back(y);
          next.back().push_back(k);
        }
      }
    }
    layer = std::move(next);
  }
  // Whatever is not on a capped sequence is excluded.
  LogProb total = LogSum(kept);
  out.excluded = total >= 0.0 ? kLogZero : std::log1p(-std::exp(total));
  return out;
}

NBestList RankMarginals(const ExactMarginals& exact, size_t n) {
  NBestList all;
  for (const auto& [tokens, score] : exact.marginals) {
    if (score != kLogZero) all.push_back({tokens, score});
  }
  auto before = [](const NBestEntry& a, const NBestEntry& b) {
    return RanksBefore(a.score, a.tokens, b.score, b.tokens);
  };
  size_t keep = std::min(n, all.size());
  std::partial_sort(all.begin(), all.begin() + keep, all.end(), before);
  all.resize(keep);
  return all;
}

NBestList ExactNBest(const TransducerModel& model, const EncoderOutput& encoder,
                     size_t n, int32_t max_tokens, const OracleLimits& limits) {
  return RankMarginals(
      ExactMarginalsByEnumeration(model, encoder, max_tokens, false, limits), n);
}

}  // namespace tokenwise
