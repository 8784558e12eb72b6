// tokenwise/src/model.cc

#include "tokenwise/model.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace tokenwise {

struct EncodedFrames {
  // cued[t]: number of transcript tokens cued at or before frame t.
  std::vector<int32_t> cued;
  std::vector<TokenId> transcript;
  std::vector<TokenId> confusion;
};

namespace {

using json = nlohmann::json;

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

uint64_t Mix(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Combine(uint64_t h, uint64_t v) { return Mix(h ^ Mix(v)); }

// Uniform in [0, 1) with 53 bits, exact on every platform.
double Unit(uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

void LogSoftmax(std::span<double> row) {
  double top = *std::max_element(row.begin(), row.end());
  if (top == kNegInf) throw Error("joiner row has no finite logit");
  double sum = 0.0;
  for (double v : row) sum += std::exp(v - top);
  double norm = top + std::log(sum);
  for (double& v : row) v -= norm;
}

class SeededModel : public TransducerModel {
 public:
  explicit SeededModel(ModelSpec spec) : TransducerModel(std::move(spec)) {
    if (spec_.blank_prior &&
        (*spec_.blank_prior < 0.0 || *spec_.blank_prior > 1.0)) {
      throw Error("blank_prior must lie in [0, 1]");
    }
  }

  EncoderOutput Encode(uint64_t utterance_key, int32_t frames) const override {
    if (frames < 0) frames = spec_.frames;
    EncoderOutput out;
    out.frames = frames;
    out.key = Combine(spec_.seed, utterance_key);
    if (!spec_.blank_prior) return out;

    auto features = std::make_shared<EncodedFrames>();
    features->cued.resize(frames);
    int32_t count = 0;
    for (int32_t t = 0; t < frames; ++t) {
      uint64_t h = Combine(Combine(out.key, 0x5eedULL), t);
      if (Unit(h) >= *spec_.blank_prior) {
        TokenId target = static_cast<TokenId>(Mix(h) % vocab_size_);
        TokenId confusion = target;
        if (vocab_size_ > 1) {
          confusion = static_cast<TokenId>(
              (target + 1 + Mix(h + 1) % (vocab_size_ - 1)) % vocab_size_);
        }
        features->transcript.push_back(target);
        features->confusion.push_back(confusion);
        ++count;
      }
      features->cued[t] = count;
    }
    out.features = std::move(features);
    return out;
  }

 protected:
  void ComputeLogits(const EncoderOutput& encoder, int32_t t,
                     const PredictorState& state,
                     std::span<double> logits) const override {
    const int32_t blank = vocab_size_;
    uint64_t base = Combine(Combine(encoder.key, t), state.key);
    bool capped = spec_.max_tokens && state.length >= *spec_.max_tokens;
    if (!spec_.blank_prior) {
      for (int32_t k = 0; k <= blank; ++k) {
        logits[k] = 4.0 * Unit(Combine(base, k)) - 2.0;
      }
      logits[blank] += 1.0;
    } else {
      for (int32_t k = 0; k <= blank; ++k) {
        logits[k] = 3.0 * Unit(Combine(base, k)) - 1.5;
      }
      const EncodedFrames& f = *encoder.features;
      if (state.length < f.cued[t]) {
        logits[f.transcript[state.length]] += 5.0;
        logits[f.confusion[state.length]] += 2.5;
        logits[blank] += 3.0;
      } else {
        logits[blank] += 6.0;
      }
    }
    if (capped) std::fill(logits.begin(), logits.begin() + blank, kNegInf);
  }
};

class TabularModel : public TransducerModel {
 public:
  explicit TabularModel(ModelSpec spec) : TransducerModel(std::move(spec)) {
    const auto& p = spec_.payload;
    if (static_cast<int32_t>(p.size()) != spec_.frames) {
      throw Error("tabular payload has " + std::to_string(p.size()) +
                  " frames, expected " + std::to_string(spec_.frames));
    }
    prefix_rows_ = p.empty() ? 0 : static_cast<int32_t>(p[0].size());
    for (size_t t = 0; t < p.size(); ++t) {
      if (static_cast<int32_t>(p[t].size()) != prefix_rows_ ||
          prefix_rows_ == 0) {
        throw Error("tabular payload frame " + std::to_string(t) +
                    " has inconsistent prefix rows");
      }
      for (size_t u = 0; u < p[t].size(); ++u) {
        const auto& row = p[t][u];
        if (static_cast<int32_t>(row.size()) != vocab_size_ + 1) {
          throw Error("tabular payload row [" + std::to_string(t) + "][" +
                      std::to_string(u) + "] has wrong width");
        }
        bool finite = false;
        for (double v : row) {
          if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw Error("tabular payload holds a non-finite logit");
          }
          finite = finite || v != kNegInf;
        }
        if (!finite) {
          throw Error("tabular payload row [" + std::to_string(t) + "][" +
                      std::to_string(u) + "] cannot be normalized");
        }
      }
    }
  }

  EncoderOutput Encode(uint64_t utterance_key, int32_t frames) const override {
    if (frames >= 0 && frames != spec_.frames) {
      throw Error("tabular model has " + std::to_string(spec_.frames) +
                  " frames, utterance asks for " + std::to_string(frames));
    }
    return {spec_.frames, utterance_key, nullptr};
  }

 protected:
  void ComputeLogits(const EncoderOutput&, int32_t t,
                     const PredictorState& state,
                     std::span<double> logits) const override {
    bool capped = spec_.max_tokens && state.length >= *spec_.max_tokens;
    if (state.length >= prefix_rows_ || capped) {
      std::fill(logits.begin(), logits.end(), kNegInf);
      logits[vocab_size_] = 0.0;
      return;
    }
    const auto& row = spec_.payload[t][state.length];
    std::copy(row.begin(), row.end(), logits.begin());
  }

 private:
  int32_t prefix_rows_ = 0;
};

double ReadLogit(const json& v) {
  if (v.is_null()) return kNegInf;
  if (!v.is_number()) throw Error("payload logits must be numbers or null");
  return v.get<double>();
}

}  // namespace

TransducerModel::TransducerModel(ModelSpec spec)
    : spec_(std::move(spec)), vocab_size_(spec_.vocab_size) {
  if (vocab_size_ < 1) throw Error("vocab_size must be >= 1");
  if (spec_.frames < 0) throw Error("frames must be >= 0");
  if (spec_.max_tokens && *spec_.max_tokens < 0) {
    throw Error("max_tokens must be >= 0");
  }
}

PredictorState TransducerModel::InitPredictor() const {
  return {Mix(spec_.seed ^ 0x1d1ce5ULL), 0};
}

PredictorState TransducerModel::AdvancePredictor(const PredictorState& state,
                                                 TokenId token) const {
  if (token < 0 || token >= vocab_size_) {
    throw Error("predictor input must be a non-blank token, got " +
                std::to_string(token));
  }
  return {Combine(state.key, static_cast<uint64_t>(token) + 1),
          state.length + 1};
}

std::vector<SegmentLattice> TransducerModel::Join(
    const EncoderOutput& encoder, int32_t t_begin, int32_t t_end,
    std::span<const PredictorState> states, JoinerCounters& counters) const {
  if (t_begin >= t_end) throw Error("join over an empty frame range");
  if (t_begin < 0 || t_end > encoder.frames) {
    throw Error("join frame range out of bounds");
  }
  if (states.empty()) throw Error("join without predictor states");

  const int32_t frames = t_end - t_begin;
  std::vector<SegmentLattice> out;
  out.reserve(states.size());
  for (size_t i = 0; i < states.size(); ++i) {
    SegmentLattice lattice(frames, vocab_size_, static_cast<int32_t>(i));
    for (int32_t t = 0; t < frames; ++t) {
      auto row = lattice.Row(t);
      ComputeLogits(encoder, t_begin + t, states[i], row);
      LogSoftmax(row);
    }
    out.push_back(std::move(lattice));
  }
  counters.calls += 1;
  counters.frame_joins += frames;
  return out;
}

std::unique_ptr<TransducerModel> LoadModel(const ModelSpec& spec) {
  if (spec.kind == ModelKind::kSeeded) {
    if (!spec.payload.empty()) throw Error("seeded model cannot carry payload");
    return std::make_unique<SeededModel>(spec);
  }
  if (spec.blank_prior) throw Error("blank_prior applies to seeded models");
  return std::make_unique<TabularModel>(spec);
}

ModelSpec ParseModelSpec(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    ModelSpec spec;
    std::string kind = doc.at("kind").get<std::string>();
    if (kind == "seeded") {
      spec.kind = ModelKind::kSeeded;
    } else if (kind == "tabular") {
      spec.kind = ModelKind::kTabular;
    } else {
      throw Error("unknown model kind: " + kind);
    }
    spec.vocab_size = doc.at("vocab_size").get<int32_t>();
    spec.frames = doc.value("frames", 0);
    if (doc.contains("seed")) spec.seed = doc["seed"].get<uint64_t>();
    if (doc.contains("blank_prior") && !doc["blank_prior"].is_null()) {
      spec.blank_prior = doc["blank_prior"].get<double>();
    }
    if (doc.contains("max_tokens") && !doc["max_tokens"].is_null()) {
      spec.max_tokens = doc["max_tokens"].get<int32_t>();
    }
    if (doc.contains("payload")) {
      for (const auto& frame : doc["payload"]) {
        auto& rows = spec.payload.emplace_back();
        for (const auto& prefix_row : frame) {
          auto& row = rows.emplace_back();
          for (const auto& v : prefix_row) row.push_back(ReadLogit(v));
        }
      }
    }
    if (spec.kind == ModelKind::kTabular && !doc.contains("frames")) {
      spec.frames = static_cast<int32_t>(spec.payload.size());
    }
    // Validate shapes eagerly so malformed files fail at load time.
    LoadModel(spec);
    return spec;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed model file: ") + e.what());
  }
}

std::string SerializeModelSpec(const ModelSpec& spec) {
  json doc;
  doc["kind"] = spec.kind == ModelKind::kSeeded ? "seeded" : "tabular";
  doc["vocab_size"] = spec.vocab_size;
  doc["frames"] = spec.frames;
  if (spec.kind == ModelKind::kSeeded) doc["seed"] = spec.seed;
  if (spec.blank_prior) doc["blank_prior"] = *spec.blank_prior;
  if (spec.max_tokens) doc["max_tokens"] = *spec.max_tokens;
  if (spec.kind == ModelKind::kTabular) {
    json payload = json::array();
    for (const auto& frame : spec.payload) {
      json rows = json::array();
      for (const auto& row : frame) {
        json values = json::array();
        for (double v : row) {
          if (v == kNegInf) {
            values.push_back(nullptr);
          } else {
            values.push_back(v);
          }
        }
        rows.push_back(std::move(values));
      }
      payload.push_back(std::move(rows));
    }
    doc["payload"] = std::move(payload);
  }
  return doc.dump(1) + "\n";
}

ModelSpec ReadModelSpec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ParseModelSpec(ss.str());
}

void WriteModelSpec(const std::string& path, const ModelSpec& spec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file: " + path);
  out << SerializeModelSpec(spec);
  if (!out) throw Error("failed writing model file: " + path);
}

uint64_t HashString(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tokenwise
