// tokenwise/src/core.cc

#include "tokenwise/core.h"

#include <algorithm>
#include <cmath>
#include <utility>

namespace tokenwise {

LogProb LogAdd(LogProb a, LogProb b) {
  if (a == kLogZero) return b;
  if (b == kLogZero) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

LogProb LogSum(std::span<const LogProb> values) {
  LogProb acc = kLogZero;
  for (LogProb v : values) acc = LogAdd(acc, v);
  return acc;
}

Vocabulary::Vocabulary(int32_t v, std::vector<std::string> names)
    : size(v), labels(std::move(names)) {
  if (v < 1) throw Error("vocabulary size must be >= 1");
  if (!labels.empty() && static_cast<int32_t>(labels.size()) != v) {
    throw Error("vocabulary label count does not match its size");
  }
}

std::string Vocabulary::Label(TokenId k) const {
  if (k == blank_id()) return "<blank>";
  if (!IsToken(k)) throw Error("token id out of range: " + std::to_string(k));
  return labels.empty() ? std::to_string(k) : labels[k];
}

SegmentLattice::SegmentLattice(int32_t frames, int32_t vocab_size,
                               int32_t hypothesis_id)
    : frames_(frames),
      vocab_size_(vocab_size),
      hypothesis_id_(hypothesis_id),
      scores_(static_cast<size_t>(frames) * (vocab_size + 1), kLogZero) {
  if (frames < 1 || vocab_size < 1) throw Error("empty segment lattice");
}

SegmentLattice::SegmentLattice(int32_t frames, int32_t vocab_size,
                               std::vector<LogProb> scores,
                               int32_t hypothesis_id)
    : frames_(frames),
      vocab_size_(vocab_size),
      hypothesis_id_(hypothesis_id),
      scores_(std::move(scores)) {
  if (frames < 1 || vocab_size < 1) throw Error("empty segment lattice");
  if (scores_.size() != static_cast<size_t>(frames) * (vocab_size + 1)) {
    throw Error("segment lattice score count does not match its shape");
  }
}

double SegmentLattice::MaxRowDefect() const {
  double worst = 0.0;
  for (int32_t t = 0; t < frames_; ++t) {
    worst = std::max(worst, std::abs(LogSum(Row(t))));
  }
  return worst;
}

bool RanksBefore(LogProb score_a, std::span<const TokenId> tokens_a,
                 LogProb score_b, std::span<const TokenId> tokens_b) {
  if (score_a != score_b) return score_a > score_b;
  if (tokens_a.size() != tokens_b.size()) {
    return tokens_a.size() < tokens_b.size();
  }
  return std::lexicographical_compare(tokens_a.begin(), tokens_a.end(),
                                      tokens_b.begin(), tokens_b.end());
}

bool RanksBefore(const Hypothesis& a, const Hypothesis& b) {
  return RanksBefore(a.score, a.tokens, b.score, b.tokens);
}

void Beam::AddAndMerge(Hypothesis hyp) {
  auto it = std::find_if(hyps_.begin(), hyps_.end(), [&](const Hypothesis& h) {
    return h.tokens == hyp.tokens;
  });
  if (it == hyps_.end()) {
    hyps_.push_back(std::move(hyp));
    return;
  }
  if (!it->alpha.empty() && !hyp.alpha.empty()) {
    if (it->alpha.size() != hyp.alpha.size()) {
      throw Error("cannot merge hypotheses with different segment lengths");
    }
    for (size_t t = 0; t < it->alpha.size(); ++t) {
      it->alpha[t] = LogAdd(it->alpha[t], hyp.alpha[t]);
    }
  } else if (it->alpha.empty() != hyp.alpha.empty()) {
    throw Error("cannot merge a hypothesis with and without alpha");
  }
  it->score = LogAdd(it->score, hyp.score);
}

void Beam::Trim() {
  size_t keep = std::min(capacity_, hyps_.size());
  std::partial_sort(hyps_.begin(), hyps_.begin() + keep, hyps_.end(),
                    [](const Hypothesis& a, const Hypothesis& b) {
                      return RanksBefore(a, b);
                    });
  hyps_.resize(keep);
}

}  // namespace tokenwise
