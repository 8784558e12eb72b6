// tokenwise/src/beam_search.cc
//
// Segment arithmetic and beam utilities shared by both searches.

#include <algorithm>
#include <cmath>
#include <string>

#include "tokenwise/decoder.h"

namespace tokenwise {

void DecodeConfig::Validate() const {
  if (beam_size < 1) throw Error("beam size must be >= 1");
  if (segment_size < 1) throw Error("segment size must be >= 1");
  if (nbest < 1 || nbest > beam_size) {
    throw Error("nbest must lie in [1, beam size]");
  }
  if (max_rounds_per_segment < 0) throw Error("max rounds must be >= 0");
}

LogProb BlankRun(const SegmentLattice& lattice, int32_t t1, int32_t t2) {
  const int32_t s = lattice.frames();
  if (t1 < 1 || t1 > s + 1 || t2 < 1 || t2 > s + 1) {
    throw Error("blank run index out of bounds");
  }
  if (t1 > t2) return kLogZero;
  LogProb acc = kLogOne;
  for (int32_t t = t1; t < t2; ++t) acc += lattice.Blank(t - 1);
  return acc;
}

std::vector<LogProb> EmissionPrefix(std::span<const LogProb> alpha,
                                    const SegmentLattice& lattice) {
  const int32_t s = lattice.frames();
  if (static_cast<int32_t>(alpha.size()) != s) {
    throw Error("alpha length does not match the segment length");
  }
  std::vector<LogProb> c(s + 1);
  c[0] = alpha[0];
  for (int32_t t = 1; t < s; ++t) {
    c[t] = LogAdd(alpha[t], c[t - 1] + lattice.Blank(t - 1));
  }
  c[s] = c[s - 1] + lattice.Blank(s - 1);
  return c;
}

NonBlankExpansion ExpandNonBlank(std::span<const LogProb> alpha,
                                 const SegmentLattice& lattice, TokenId token) {
  if (token < 0 || token >= lattice.vocab_size()) {
    throw Error("non-blank expansion needs a non-blank token");
  }
  std::vector<LogProb> c = EmissionPrefix(alpha, lattice);
  NonBlankExpansion out;
  out.emission.resize(lattice.frames());
  for (int32_t t = 0; t < lattice.frames(); ++t) {
    out.emission[t] = c[t] + lattice.At(t, token);
  }
  out.score = LogSum(out.emission);
  return out;
}

LogProb ExpandBlank(std::span<const LogProb> alpha,
                    const SegmentLattice& lattice) {
  return EmissionPrefix(alpha, lattice).back();
}

double MassConservationDefect(const Hypothesis& hyp,
                              const SegmentLattice& lattice) {
  std::vector<LogProb> c = EmissionPrefix(hyp.alpha, lattice);
  std::vector<LogProb> parts;
  parts.reserve(lattice.vocab_size() + 1);
  parts.push_back(c.back());
  std::vector<LogProb> d(lattice.frames());
  for (TokenId k = 0; k < lattice.vocab_size(); ++k) {
    for (int32_t t = 0; t < lattice.frames(); ++t) d[t] = c[t] + lattice.At(t, k);
    parts.push_back(LogSum(d));
  }
  LogProb total = LogSum(parts);
  if (total == kLogZero && hyp.score == kLogZero) return 0.0;
  // |e^a - e^b| = e^max * |1 - e^(min - max)|
  LogProb hi = std::max(total, hyp.score);
  LogProb lo = std::min(total, hyp.score);
  return std::exp(hi) * -std::expm1(lo - hi);
}

std::vector<Hypothesis> ChooseNBest(std::vector<Hypothesis> hyps, size_t n) {
  size_t keep = std::min(n, hyps.size());
  std::partial_sort(hyps.begin(), hyps.begin() + keep, hyps.end(),
                    [](const Hypothesis& a, const Hypothesis& b) {
                      return RanksBefore(a, b);
                    });
  hyps.resize(keep);
  return hyps;
}

LogProb ChooseNthScore(std::span<const Hypothesis> hyps, size_t n) {
  if (n == 0 || hyps.size() < n) return kLogZero;
  std::vector<LogProb> scores;
  scores.reserve(hyps.size());
  for (const auto& h : hyps) scores.push_back(h.score);
  std::nth_element(scores.begin(), scores.begin() + (n - 1), scores.end(),
                   std::greater<>());
  return scores[n - 1];
}

std::vector<Expansion> ChooseNBestExpansions(
    std::vector<Expansion> candidates, std::span<const Hypothesis> parents,
    size_t n) {
  auto before = [&](const Expansion& a, const Expansion& b) {
    if (a.score != b.score) return a.score > b.score;
    const auto& pa = parents[a.hyp_index].tokens;
    const auto& pb = parents[b.hyp_index].tokens;
    if (pa.size() != pb.size()) return pa.size() < pb.size();
    if (pa != pb) return pa < pb;
    return a.token < b.token;
  };
  size_t keep = std::min(n, candidates.size());
  std::partial_sort(candidates.begin(), candidates.begin() + keep,
                    candidates.end(), before);
  candidates.resize(keep);
  return candidates;
}

NBestList ToNBestList(std::span<const Hypothesis> hyps, size_t n) {
  std::vector<Hypothesis> best =
      ChooseNBest({hyps.begin(), hyps.end()}, n);
  NBestList out;
  out.reserve(best.size());
  for (auto& h : best) out.push_back({std::move(h.tokens), h.score});
  return out;
}

}  // namespace tokenwise
