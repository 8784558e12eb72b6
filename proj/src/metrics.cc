// tokenwise/src/metrics.cc

#include "tokenwise/metrics.h"

#include <algorithm>

namespace tokenwise {

ErrorCounts& ErrorCounts::operator+=(const ErrorCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  reference_length += o.reference_length;
  return *this;
}

ErrorCounts EditDistance(std::span<const TokenId> reference,
                         std::span<const TokenId> hypothesis) {
  const size_t r = reference.size();
  const size_t h = hypothesis.size();
  // cost[i][j]: distance between reference[0, i) and hypothesis[0, j).
  std::vector<std::vector<int64_t>> cost(r + 1, std::vector<int64_t>(h + 1));
  for (size_t i = 0; i <= r; ++i) cost[i][0] = static_cast<int64_t>(i);
  for (size_t j = 0; j <= h; ++j) cost[0][j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= r; ++i) {
    for (size_t j = 1; j <= h; ++j) {
      int64_t diag =
          cost[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      cost[i][j] = std::min({diag, cost[i][j - 1] + 1, cost[i - 1][j] + 1});
    }
  }

  ErrorCounts out;
  out.reference_length = static_cast<int64_t>(r);
  size_t i = r, j = h;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      bool match = reference[i - 1] == hypothesis[j - 1];
      if (cost[i][j] == cost[i - 1][j - 1] + (match ? 0 : 1)) {
        if (!match) ++out.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (j > 0 && cost[i][j] == cost[i][j - 1] + 1) {
      ++out.insertions;
      --j;
    } else {
      ++out.deletions;
      --i;
    }
  }
  return out;
}

double CorpusWer(std::span<const std::pair<Transcript, Transcript>> pairs) {
  ErrorCounts total;
  for (const auto& [ref, hyp] : pairs) total += EditDistance(ref, hyp);
  if (total.reference_length == 0) {
    throw Error("word error rate needs a non-empty reference corpus");
  }
  return static_cast<double>(total.errors()) /
         static_cast<double>(total.reference_length);
}

double CorpusOracleWer(std::span<const std::pair<Transcript, NBestList>> pairs) {
  ErrorCounts total;
  for (const auto& [ref, nbest] : pairs) {
    if (nbest.empty()) throw Error("oracle word error rate needs a non-empty n-best list");
    ErrorCounts best = EditDistance(ref, nbest[0].tokens);
    for (size_t i = 1; i < nbest.size(); ++i) {
      ErrorCounts e = EditDistance(ref, nbest[i].tokens);
      if (e.errors() < best.errors()) best = e;
    }
    total += best;
  }
  if (total.reference_length == 0) {
    throw Error("word error rate needs a non-empty reference corpus");
  }
  return static_cast<double>(total.errors()) /
         static_cast<double>(total.reference_length);
}

EfficiencyStats ComputeEfficiency(const JoinerCounters& counters,
                                  double wall_time_sec) {
  if (counters.frames_decoded <= 0) {
    throw Error("efficiency statistics need at least one decoded frame");
  }
  EfficiencyStats out;
  const double frames = static_cast<double>(counters.frames_decoded);
  out.calls_per_frame = static_cast<double>(counters.calls) / frames;
  out.joins_per_frame = static_cast<double>(counters.frame_joins) / frames;
  out.wall_time_sec = wall_time_sec;
  out.throughput_frames_per_sec = wall_time_sec > 0.0 ? frames / wall_time_sec : 0.0;
  return out;
}

}  // namespace tokenwise
