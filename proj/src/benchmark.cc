// tokenwise/src/benchmark.cc

#include <algorithm>
#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "json.hpp"
#include "tokenwise/harness.h"

namespace tokenwise {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<double> Relative(double value, double baseline) {
  if (baseline == 0.0) {
    if (value == 0.0) return 0.0;
    return std::nullopt;
  }
  return (value - baseline) / baseline;
}

ordered_json OptionalJson(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

std::string CellKey(int32_t beam, int32_t segment) {
  return "N" + std::to_string(beam) + "/S" + std::to_string(segment);
}

}  // namespace

CorpusDecode DecodeCorpus(const TransducerModel& model,
                          const std::vector<Utterance>& corpus,
                          const DecodeConfig& config, Algorithm algorithm,
                          int32_t workers) {
  config.Validate();
  CorpusDecode out;
  out.results.resize(corpus.size());

  auto decode_one = [&](size_t i) {
    EncoderOutput enc = EncodeUtterance(model, corpus[i]);
    out.results[i] = algorithm == Algorithm::kTokenwise
                         ? DecodeUtteranceTokenwise(model, enc, config)
                         : DecodeUtteranceStandard(model, enc, config);
  };

  auto start = std::chrono::steady_clock::now();
  if (workers <= 1 || corpus.size() < 2) {
    for (size_t i = 0; i < corpus.size(); ++i) decode_one(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    size_t n = std::min<size_t>(static_cast<size_t>(workers), corpus.size());
    for (size_t w = 0; w < n; ++w) {
      pool.emplace_back([&] {
        for (size_t i = next++; i < corpus.size(); i = next++) {
          try {
            decode_one(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mu);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }
  out.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  for (const auto& r : out.results) {
    out.counters += r.counters;
    out.forced_finalizations += r.forced_finalizations;
  }
  return out;
}

const BenchmarkCell& BenchmarkReport::Cell(int32_t beam_size,
                                           int32_t segment_size) const {
  for (const auto& c : cells) {
    if (c.beam_size == beam_size && c.segment_size == segment_size) return c;
  }
  throw Error("benchmark report has no cell " + CellKey(beam_size, segment_size));
}

std::string BenchmarkReport::ToJson() const {
  ordered_json doc = ordered_json::object();
  for (const auto& c : cells) {
    ordered_json cell;
    cell["beam_size"] = c.beam_size;
    cell["segment_size"] = c.segment_size;
    cell["nbest"] = c.nbest;
    cell["wer"] = c.wer;
    cell["ower"] = c.ower;
    cell["calls"] = c.counters.calls;
    cell["frame_joins"] = c.counters.frame_joins;
    cell["frames_decoded"] = c.counters.frames_decoded;
    cell["calls_per_frame"] = c.efficiency.calls_per_frame;
    cell["joins_per_frame"] = c.efficiency.joins_per_frame;
    cell["forced_finalizations"] = c.forced_finalizations;
    cell["relative"] = {{"wer", OptionalJson(c.wer_relative)},
                        {"ower", OptionalJson(c.ower_relative)},
                        {"calls_per_frame", OptionalJson(c.calls_relative)},
                        {"joins_per_frame", OptionalJson(c.joins_relative)}};
    cell["timing"] = {
        {"wall_time_sec", c.efficiency.wall_time_sec},
        {"throughput_frames_per_sec", c.efficiency.throughput_frames_per_sec},
        {"throughput_relative", OptionalJson(c.throughput_relative)}};
    doc[CellKey(c.beam_size, c.segment_size)] = std::move(cell);
  }
  return doc.dump(2) + "\n";
}

BenchmarkReport RunBenchmark(const TransducerModel& model,
                             const std::vector<Utterance>& corpus,
                             const BenchmarkOptions& options) {
  if (std::find(options.segment_sizes.begin(), options.segment_sizes.end(), 1) ==
      options.segment_sizes.end()) {
    throw Error("benchmark grid needs segment size 1 as the baseline");
  }
  if (options.beam_sizes.empty()) throw Error("benchmark grid has no beam size");
  if (options.repeats < 1) throw Error("repeats must be >= 1");

  BenchmarkReport report;
  for (int32_t beam : options.beam_sizes) {
    for (int32_t segment : options.segment_sizes) {
      DecodeConfig config;
      config.beam_size = beam;
      config.segment_size = segment;
      config.nbest = options.nbest > 0 ? std::min(options.nbest, beam) : beam;
      config.max_rounds_per_segment = options.max_rounds;

      CorpusDecode decode;
      std::vector<double> times;
      for (int32_t r = 0; r < options.repeats; ++r) {
        CorpusDecode run = DecodeCorpus(model, corpus, config,
                                        Algorithm::kTokenwise, options.workers);
        times.push_back(run.wall_time_sec);
        if (r == 0) decode = std::move(run);
      }
      std::sort(times.begin(), times.end());
      double median = times.size() % 2 == 1
                          ? times[times.size() / 2]
                          : 0.5 * (times[times.size() / 2 - 1] +
                                   times[times.size() / 2]);

      std::vector<std::pair<Transcript, Transcript>> top1;
      std::vector<std::pair<Transcript, NBestList>> lists;
      for (size_t i = 0; i < corpus.size(); ++i) {
        top1.emplace_back(corpus[i].reference, decode.results[i].nbest[0].tokens);
        lists.emplace_back(corpus[i].reference, decode.results[i].nbest);
      }

      BenchmarkCell cell;
      cell.beam_size = beam;
      cell.segment_size = segment;
      cell.nbest = config.nbest;
      cell.wer = CorpusWer(top1);
      cell.ower = CorpusOracleWer(lists);
      cell.counters = decode.counters;
      cell.forced_finalizations = decode.forced_finalizations;
      cell.efficiency = ComputeEfficiency(decode.counters, median);
      report.cells.push_back(std::move(cell));
    }
  }

  for (auto& cell : report.cells) {
    const BenchmarkCell& base = report.Cell(cell.beam_size, 1);
    cell.wer_relative = Relative(cell.wer, base.wer);
    cell.ower_relative = Relative(cell.ower, base.ower);
    cell.calls_relative = Relative(cell.efficiency.calls_per_frame,
                                   base.efficiency.calls_per_frame);
    cell.joins_relative = Relative(cell.efficiency.joins_per_frame,
                                   base.efficiency.joins_per_frame);
    cell.throughput_relative =
        Relative(cell.efficiency.throughput_frames_per_sec,
                 base.efficiency.throughput_frames_per_sec);
  }
  return report;
}

}  // namespace tokenwise
