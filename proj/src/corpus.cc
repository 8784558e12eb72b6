// tokenwise/src/corpus.cc

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tokenwise/harness.h"

namespace tokenwise {

namespace {
using json = nlohmann::json;
}  // namespace

std::vector<Utterance> ParseCorpus(std::istream& in, int32_t vocab_size) {
  std::vector<Utterance> corpus;
  std::string line;
  int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "corpus line " + std::to_string(line_no) + ": ";
    Utterance utt;
    try {
      json rec = json::parse(line);
      utt.id = rec.at("id").get<std::string>();
      utt.frames = rec.at("frames").get<int32_t>();
      utt.reference = rec.at("reference").get<Transcript>();
    } catch (const json::exception& e) {
      throw Error(where + e.what());
    }
    if (utt.frames < 0) throw Error(where + "negative frame count");
    for (TokenId k : utt.reference) {
      if (k < 0 || (vocab_size >= 0 && k >= vocab_size)) {
        throw Error(where + "utterance " + utt.id + " has out-of-vocabulary "
                    "reference token " + std::to_string(k));
      }
    }
    corpus.push_back(std::move(utt));
  }
  return corpus;
}

std::vector<Utterance> LoadCorpus(const std::string& path, int32_t vocab_size) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus file: " + path);
  return ParseCorpus(in, vocab_size);
}

std::string SerializeCorpus(const std::vector<Utterance>& corpus) {
  std::string out;
  for (const auto& utt : corpus) {
    json rec = json::object();
    rec["id"] = utt.id;
    rec["frames"] = utt.frames;
    rec["reference"] = utt.reference;
    out += rec.dump();
    out += '\n';
  }
  return out;
}

void SaveCorpus(const std::string& path, const std::vector<Utterance>& corpus) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write corpus file: " + path);
  out << SerializeCorpus(corpus);
  if (!out) throw Error("failed writing corpus file: " + path);
}

EncoderOutput EncodeUtterance(const TransducerModel& model,
                              const Utterance& utt) {
  return model.Encode(HashString(utt.id), utt.frames);
}

GeneratedCorpus GenerateCorpus(const GenerateOptions& options) {
  if (options.count < 0) throw Error("utterance count must be >= 0");
  if (options.min_frames < 0 || options.min_frames > options.max_frames) {
    throw Error("frame range must satisfy 0 <= min <= max");
  }
  if (options.reference_beam < 1) throw Error("reference beam must be >= 1");

  GeneratedCorpus out;
  out.model.kind = ModelKind::kSeeded;
  out.model.vocab_size = options.vocab_size;
  out.model.frames = options.max_frames;
  out.model.seed = options.seed;
  out.model.blank_prior = options.blank_prior;
  out.model.max_tokens = options.max_tokens;
  std::unique_ptr<TransducerModel> model = LoadModel(out.model);

  const OracleLimits limits;
  const uint64_t span =
      static_cast<uint64_t>(options.max_frames - options.min_frames) + 1;
  for (int32_t i = 0; i < options.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof(id), "utt%05d", i);
    Utterance utt;
    utt.id = id;
    utt.frames = options.min_frames +
                 static_cast<int32_t>(
                     HashString(utt.id + "#" + std::to_string(options.seed)) % span);
    EncoderOutput enc = EncodeUtterance(*model, utt);
    if (utt.frames <= limits.max_frames && options.vocab_size <= limits.max_vocab) {
      int32_t cap = std::min(options.max_tokens.value_or(limits.max_tokens),
                             limits.max_tokens);
      utt.reference = ExactNBest(*model, enc, 1, cap)[0].tokens;
    } else {
      DecodeConfig config;
      config.beam_size = options.reference_beam;
      config.segment_size = std::max(utt.frames, 1);
      config.nbest = 1;
      utt.reference = DecodeUtteranceTokenwise(*model, enc, config).nbest[0].tokens;
    }
    out.utterances.push_back(std::move(utt));
  }
  return out;
}

}  // namespace tokenwise
