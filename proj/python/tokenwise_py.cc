// tokenwise/python/tokenwise_py.cc
//
// Python bindings. Models are passed around as their JSON text, hypotheses
// as (tokens, score) tuples.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "tokenwise/harness.h"

namespace py = pybind11;

namespace tokenwise {
namespace {

using PyNBest = std::vector<std::pair<std::vector<TokenId>, double>>;

PyNBest ToPy(const NBestList& list) {
  PyNBest out;
  for (const auto& e : list) out.emplace_back(e.tokens, e.score);
  return out;
}

NBestList FromPy(const PyNBest& list) {
  NBestList out;
  for (const auto& [tokens, score] : list) out.push_back({tokens, score});
  return out;
}

class PyModel {
 public:
  explicit PyModel(const std::string& json_text)
      : model_(LoadModel(ParseModelSpec(json_text))) {}

  int32_t vocab_size() const { return model_->vocab_size(); }
  std::string to_json() const { return SerializeModelSpec(model_->spec()); }

  EncoderOutput Encode(const std::string& utterance_id, int32_t frames) const {
    return EncodeUtterance(*model_, {utterance_id, frames, {}});
  }

  py::dict Decode(const std::string& utterance_id, int32_t frames, int32_t beam_size,
                  int32_t segment_size, int32_t nbest, const std::string& algorithm,
                  int32_t max_rounds) const {
    DecodeConfig config;
    config.beam_size = beam_size;
    config.segment_size = segment_size;
    config.nbest = nbest > 0 ? nbest : beam_size;
    config.max_rounds_per_segment = max_rounds;
    EncoderOutput enc = Encode(utterance_id, frames);
    DecodeResult r;
    {
      py::gil_scoped_release release;
      if (algorithm == "tokenwise") {
        r = DecodeUtteranceTokenwise(*model_, enc, config);
      } else if (algorithm == "standard") {
        r = DecodeUtteranceStandard(*model_, enc, config);
      } else {
        throw Error("unknown algorithm: " + algorithm);
      }
    }
    py::dict out;
    out["nbest"] = ToPy(r.nbest);
    out["calls"] = r.counters.calls;
    out["frame_joins"] = r.counters.frame_joins;
    out["frames"] = r.counters.frames_decoded;
    out["forced_finalizations"] = r.forced_finalizations;
    return out;
  }

  PyNBest ExactNBestFor(const std::string& utterance_id, int32_t frames, size_t n,
                        int32_t max_tokens) const {
    return ToPy(ExactNBest(*model_, Encode(utterance_id, frames), n, max_tokens));
  }

  // Keys are token tuples.
  py::dict Marginals(const std::string& utterance_id, int32_t frames,
                     int32_t max_tokens) const {
    ExactMarginals exact =
        ExactMarginalsByEnumeration(*model_, Encode(utterance_id, frames), max_tokens);
    py::dict out;
    for (const auto& [tokens, score] : exact.marginals) {
      out[py::tuple(py::cast(tokens))] = score;
    }
    return out;
  }

  const TransducerModel& model() const { return *model_; }

 private:
  std::unique_ptr<TransducerModel> model_;
};

std::vector<Utterance> CorpusFromText(const std::string& jsonl, int32_t vocab) {
  std::istringstream in(jsonl);
  return ParseCorpus(in, vocab);
}

}  // namespace
}  // namespace tokenwise

PYBIND11_MODULE(tokenwise, m) {
  using namespace tokenwise;
  m.doc() = "Token-wise segment-batched transducer beam search";

  py::register_exception<Error>(m, "Error", PyExc_ValueError);

  m.def("log_add", &LogAdd, py::arg("a"), py::arg("b"));
  m.def("log_sum", [](const std::vector<double>& v) { return LogSum(v); });

  py::class_<PyModel>(m, "Model")
      .def(py::init<const std::string&>(), py::arg("json_text"))
      .def_property_readonly("vocab_size", &PyModel::vocab_size)
      .def("to_json", &PyModel::to_json)
      .def("decode", &PyModel::Decode, py::arg("utterance_id"), py::arg("frames") = -1,
           py::arg("beam_size") = 4, py::arg("segment_size") = 1, py::arg("nbest") = 0,
           py::arg("algorithm") = "tokenwise", py::arg("max_rounds") = 0)
      .def("exact_nbest", &PyModel::ExactNBestFor, py::arg("utterance_id"),
           py::arg("frames") = -1, py::arg("n") = 1, py::arg("max_tokens") = 4)
      .def("exact_marginals", &PyModel::Marginals, py::arg("utterance_id"),
           py::arg("frames") = -1, py::arg("max_tokens") = 4);

  m.def(
      "edit_distance",
      [](const std::vector<TokenId>& ref, const std::vector<TokenId>& hyp) {
        ErrorCounts e = EditDistance(ref, hyp);
        py::dict out;
        out["substitutions"] = e.substitutions;
        out["insertions"] = e.insertions;
        out["deletions"] = e.deletions;
        out["reference_length"] = e.reference_length;
        out["errors"] = e.errors();
        return out;
      },
      py::arg("reference"), py::arg("hypothesis"));
  m.def("corpus_wer", [](const std::vector<std::pair<Transcript, Transcript>>& pairs) {
    return CorpusWer(pairs);
  });
  m.def("corpus_oracle_wer",
        [](const std::vector<std::pair<Transcript, PyNBest>>& pairs) {
          std::vector<std::pair<Transcript, NBestList>> lists;
          for (const auto& [ref, nbest] : pairs) lists.emplace_back(ref, FromPy(nbest));
          return CorpusOracleWer(lists);
        });

  m.def(
      "generate",
      [](uint64_t seed, int32_t count, int32_t vocab_size, int32_t min_frames,
         int32_t max_frames, std::optional<double> blank_prior,
         std::optional<int32_t> max_tokens) {
        GenerateOptions options;
        options.seed = seed;
        options.count = count;
        options.vocab_size = vocab_size;
        options.min_frames = min_frames;
        options.max_frames = max_frames;
        options.blank_prior = blank_prior;
        options.max_tokens = max_tokens;
        GeneratedCorpus g = GenerateCorpus(options);
        return std::make_pair(SerializeModelSpec(g.model), SerializeCorpus(g.utterances));
      },
      py::arg("seed") = 1, py::arg("count") = 10, py::arg("vocab_size") = 8,
      py::arg("min_frames") = 90, py::arg("max_frames") = 110,
      py::arg("blank_prior") = 0.85, py::arg("max_tokens") = py::none(),
      "Returns (model_json, corpus_jsonl).");

  m.def(
      "bench",
      [](const PyModel& model, const std::string& corpus_jsonl,
         std::vector<int32_t> beam_sizes, std::vector<int32_t> segment_sizes,
         int32_t nbest, int32_t repeats) {
        BenchmarkOptions options;
        options.beam_sizes = std::move(beam_sizes);
        options.segment_sizes = std::move(segment_sizes);
        options.nbest = nbest;
        options.repeats = repeats;
        auto corpus = CorpusFromText(corpus_jsonl, model.vocab_size());
        py::gil_scoped_release release;
        return RunBenchmark(model.model(), corpus, options).ToJson();
      },
      py::arg("model"), py::arg("corpus_jsonl"), py::arg("beam_sizes"),
      py::arg("segment_sizes"), py::arg("nbest") = 0, py::arg("repeats") = 1,
      "Returns the benchmark report as JSON text.");

  m.def(
      "verify",
      [](const PyModel& model, const std::string& corpus_jsonl, double tolerance) {
        VerifyOptions options;
        options.tolerance = tolerance;
        auto corpus = CorpusFromText(corpus_jsonl, model.vocab_size());
        py::list out;
        for (const auto& p : Verify(model.model(), corpus, options)) {
          py::dict d;
          d["name"] = p.name;
          d["passed"] = p.passed;
          d["skipped"] = p.skipped;
          d["checks"] = p.checks;
          d["max_defect"] = p.max_defect;
          d["detail"] = p.detail;
          out.append(d);
        }
        return out;
      },
      py::arg("model"), py::arg("corpus_jsonl"), py::arg("tolerance") = 1e-9);
}
