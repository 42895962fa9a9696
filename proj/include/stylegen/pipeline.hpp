// Copyright 2026 The Stylegen Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Experiment plumbing behind the command-line tool: run configuration,
// ingestion, training (single model or the layers x size grid),
// generation and evaluation, plus the lineage checks tying them together.
//
// Artifacts never contain timestamps or absolute paths, so rerunning a
// pipeline with the same configuration reproduces every file byte for byte.

#pragma once

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "stylegen/error.hpp"
#include "stylegen/hash.hpp"
#include "stylegen/metrics/aligner.hpp"
#include "stylegen/metrics/bleu.hpp"
#include "stylegen/metrics/contrast.hpp"
#include "stylegen/metrics/entropy.hpp"
#include "stylegen/metrics/markers.hpp"
#include "stylegen/mr.hpp"
#include "stylegen/seq2seq/beam.hpp"
#include "stylegen/seq2seq/checkpoint.hpp"
#include "stylegen/seq2seq/train.hpp"
#include "stylegen/text.hpp"

namespace stylegen::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

struct MetricOptions {
  bool bleu_smooth = false;
  std::string paraphrase_table;  // empty: built-in tables
  std::string polarity_table;
  std::string marker_lexicon;
};

struct GridSpec {
  std::vector<int> layers = {1, 2};
  std::vector<int> sizes = {150, 200, 250, 300};
  int jobs = 1;  // models trained concurrently
};

struct RunConfig {
  std::string train_path, dev_path, test_path;
  std::string data_dir = "data";  // ingest output
  std::string run_dir;            // empty: runs/<timestamp>-<config hash>
  ModelConfig model;
  TrainConfig train;
  std::set<std::string> delex_slots = default_delex_slots();
  std::int64_t min_count = 1;
  double dev_fraction = 0.1;  // used when no dev file is given
  std::size_t max_len = 0;    // generation limit in tokens; 0: twice the longest training target
  MetricOptions metrics;
  GridSpec grid;

  std::uint64_t seed() const { return train.seed; }

  /// Settings that shape the processed data.
  json data_json() const {
    return {{"delex_slots", delex_slots}, {"min_count", min_count}, {"dev_fraction", dev_fraction},
            {"seed", train.seed}};
  }

  /// Everything except file locations.
  json settings_json() const {
    json m;
    for (const auto& [k, v] : model.to_kv()) m[k] = v;
    json t = {{"learning_rate", train.learning_rate},
              {"clip_norm", train.clip_norm ? json(*train.clip_norm) : json()},
              {"max_epochs", train.max_epochs},
              {"halve_on_plateau", train.halve_on_plateau},
              {"patience", train.patience},
              {"seed", train.seed}};
    json met = {{"bleu_smooth", metrics.bleu_smooth},
                {"paraphrase_table", metrics.paraphrase_table.empty() ? "" : "custom"},
                {"polarity_table", metrics.polarity_table.empty() ? "" : "custom"},
                {"marker_lexicon", metrics.marker_lexicon.empty() ? "" : "custom"}};
    return {{"data", data_json()}, {"model", m}, {"train", t}, {"max_len", max_len}, {"metrics", met}};
  }

  std::string data_hash() const { return hex64(fnv1a64(data_json().dump())); }
  std::string config_hash() const { return hex64(fnv1a64(settings_json().dump())); }

  void validate() const {
    model.validate();
    if (!(train.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (train.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(dev_fraction > 0.0 && dev_fraction < 1.0)) throw ConfigError("dev_fraction must be in (0, 1)");
    if (grid.layers.empty() || grid.sizes.empty()) throw ConfigError("grid needs at least one layer and size value");
    if (grid.jobs < 1) throw ConfigError("grid.jobs must be >= 1");
  }
};

namespace detail {

template <typename T>
void read_if(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j[key].is_null()) out = j[key].get<T>();
}

inline std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || fs::path(p).is_absolute() || base.empty()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace detail

/// Parses a JSON run configuration. Relative paths are taken relative to
/// `base_dir` (normally the config file's directory).
inline RunConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known = {"train", "dev", "test", "data_dir", "run_dir", "model", "training",
                                              "delex_slots", "min_count", "dev_fraction", "max_len", "metrics",
                                              "grid", "seed"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  RunConfig c;
  try {
    detail::read_if(j, "train", c.train_path);
    detail::read_if(j, "dev", c.dev_path);
    detail::read_if(j, "test", c.test_path);
    detail::read_if(j, "data_dir", c.data_dir);
    detail::read_if(j, "run_dir", c.run_dir);
    if (j.contains("delex_slots")) c.delex_slots = j["delex_slots"].get<std::set<std::string>>();
    detail::read_if(j, "min_count", c.min_count);
    detail::read_if(j, "dev_fraction", c.dev_fraction);
    detail::read_if(j, "max_len", c.max_len);
    detail::read_if(j, "seed", c.train.seed);
    if (j.contains("model")) {
      const auto& m = j["model"];
      detail::read_if(m, "rnn_layers", c.model.rnn_layers);
      detail::read_if(m, "rnn_size", c.model.rnn_size);
      detail::read_if(m, "embed_size", c.model.embed_size);
      if (m.contains("method")) c.model.method = parse_method(m["method"].get<std::string>());
      if (m.contains("granularity")) c.model.granularity = parse_granularity(m["granularity"].get<std::string>());
      if (m.contains("task")) c.model.task = parse_task(m["task"].get<std::string>());
      detail::read_if(m, "dropout", c.model.dropout_p);
      detail::read_if(m, "beam", c.model.beam_width);
      detail::read_if(m, "batch_size", c.model.batch_size);
      detail::read_if(m, "length_norm", c.model.length_norm);
    }
    if (j.contains("training")) {
      const auto& t = j["training"];
      detail::read_if(t, "learning_rate", c.train.learning_rate);
      if (t.contains("clip_norm"))
        c.train.clip_norm = t["clip_norm"].is_null() ? std::nullopt : std::optional<double>(t["clip_norm"].get<double>());
      detail::read_if(t, "max_epochs", c.train.max_epochs);
      detail::read_if(t, "halve_on_plateau", c.train.halve_on_plateau);
      detail::read_if(t, "patience", c.train.patience);
    }
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      detail::read_if(m, "bleu_smooth", c.metrics.bleu_smooth);
      detail::read_if(m, "paraphrase_table", c.metrics.paraphrase_table);
      detail::read_if(m, "polarity_table", c.metrics.polarity_table);
      detail::read_if(m, "marker_lexicon", c.metrics.marker_lexicon);
    }
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      detail::read_if(g, "layers", c.grid.layers);
      detail::read_if(g, "sizes", c.grid.sizes);
      detail::read_if(g, "jobs", c.grid.jobs);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  for (auto* p : {&c.train_path, &c.dev_path, &c.test_path, &c.data_dir, &c.run_dir, &c.metrics.paraphrase_table,
                  &c.metrics.polarity_table, &c.metrics.marker_lexicon})
    *p = detail::resolve(*p, base_dir);
  return c;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path());
}

inline void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string(what) + " path not configured");
  if (!fs::is_regular_file(path)) throw ConfigError(std::string(what) + " not found: " + path);
}

/// runs/<YYYYmmdd-HHMMSS>-<config hash> when no run directory is set.
inline std::string ensure_run_dir(RunConfig& cfg) {
  if (cfg.run_dir.empty()) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &tm);
    cfg.run_dir = (fs::path("runs") / (std::string(stamp) + "-" + cfg.config_hash().substr(0, 8))).string();
  }
  fs::create_directories(cfg.run_dir);
  return cfg.run_dir;
}

// ---------------------------------------------------------------------------
// Records

inline std::vector<DatasetRecord> read_records(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::vector<DatasetRecord> out;
  std::string line;
  for (std::size_t no = 1; std::getline(f, line); ++no) {
    if (stylegen::detail::trim(line).empty()) continue;
    out.push_back(record_from_json_line(line, no));
  }
  return out;
}

inline void write_records(const std::string& path, std::span<const DatasetRecord> recs) {
  std::string text;
  for (const auto& r : recs) text += record_to_json_line(r) + "\n";
  write_file(path, text);
}

/// A record plus its delexicalized, tokenized references.
struct ProcessedRecord {
  DatasetRecord record;
  std::vector<TokenSequence> targets;
};

inline std::string processed_to_json_line(const ProcessedRecord& p) {
  json j = json::parse(record_to_json_line(p.record));
  json t = json::array();
  for (const auto& toks : p.targets) t.push_back(join_tokens(toks));
  j["targets"] = t;
  return j.dump();
}

inline std::vector<ProcessedRecord> read_processed(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path);
  std::vector<ProcessedRecord> out;
  std::string line;
  for (std::size_t no = 1; std::getline(f, line); ++no) {
    if (stylegen::detail::trim(line).empty()) continue;
    ProcessedRecord p;
    p.record = record_from_json_line(line, no);
    try {
      const json j = json::parse(line);
      for (const auto& t : j.at("targets")) {
        const auto s = t.get<std::string>();
        p.targets.push_back(s.empty() ? TokenSequence{} : tokenize(s));
      }
    } catch (const std::exception& e) {
      throw MalformedRecord(std::string("bad 'targets': ") + e.what(), no);
    }
    out.push_back(std::move(p));
  }
  return out;
}

inline ProcessedRecord process(const DatasetRecord& r, const std::set<std::string>& delex) {
  ProcessedRecord p;
  p.record = r;
  for (const auto& ref : r.references) p.targets.push_back(delexicalize(r.mr, tokenize(ref), delex).tokens);
  return p;
}

/// Slot types and values of every encoder view of a record: the plain MR
/// and, for Method 1, the coarse and fine augmented MRs.
inline std::vector<MeaningRepresentation> encoder_views(const DatasetRecord& r) {
  std::vector<MeaningRepresentation> v = {r.mr};
  const auto& c = r.constraint;
  if (c.kind() == StyleConstraint::Kind::kContrast) {
    v.push_back(apply_method1(r.mr, c, Granularity::kCoarse));
  } else if (c.kind() == StyleConstraint::Kind::kPersonality) {
    v.push_back(apply_method1(r.mr, c.coarsened(), Granularity::kCoarse));
    if (c.fine_params()) v.push_back(apply_method1(r.mr, c, Granularity::kFine));
  }
  return v;
}

struct Vocabs {
  Vocabulary types{VocabKind::kSlotType};
  Vocabulary values{VocabKind::kSlotValue};
  Vocabulary target{VocabKind::kTargetToken};

  VocabSizes sizes() const { return {types.size(), values.size(), target.size()}; }
};

inline Vocabs build_vocabs(std::span<const ProcessedRecord> train, const RunConfig& cfg) {
  if (train.empty()) throw EmptyCorpus();
  std::map<std::string, std::int64_t> types, values, target;
  for (const auto& p : train) {
    for (const auto& mr : encoder_views(p.record))
      for (const auto& sv : mr.slots) {
        ++types[sv.slot_type];
        ++values[source_value_token(sv, cfg.delex_slots)];
      }
    for (const auto& t : p.targets)
      for (const auto& tok : t) ++target[tok];
  }
  // Slot vocabularies keep every item: pseudo-slots must always resolve.
  return {vocab_from_counts(types, VocabKind::kSlotType, 1), vocab_from_counts(values, VocabKind::kSlotValue, 1),
          vocab_from_counts(target, VocabKind::kTargetToken, cfg.min_count)};
}

inline const char* kVocabFiles[3] = {"vocab.slot_type.txt", "vocab.slot_value.txt", "vocab.target.txt"};

inline Vocabs load_vocabs(const std::string& data_dir) {
  Vocabs v;
  v.types = Vocabulary::from_text(read_file((fs::path(data_dir) / kVocabFiles[0]).string()), VocabKind::kSlotType);
  v.values = Vocabulary::from_text(read_file((fs::path(data_dir) / kVocabFiles[1]).string()), VocabKind::kSlotValue);
  v.target = Vocabulary::from_text(read_file((fs::path(data_dir) / kVocabFiles[2]).string()), VocabKind::kTargetToken);
  return v;
}

inline std::map<std::string, std::string> vocab_hashes(const std::string& data_dir) {
  return {{"slot_type", hex64(fnv1a64(read_file((fs::path(data_dir) / kVocabFiles[0]).string())))},
          {"slot_value", hex64(fnv1a64(read_file((fs::path(data_dir) / kVocabFiles[1]).string())))},
          {"target", hex64(fnv1a64(read_file((fs::path(data_dir) / kVocabFiles[2]).string())))}};
}

/// The constraint as seen by a model of the given granularity.
inline StyleConstraint model_constraint(const StyleConstraint& c, const ModelConfig& m) {
  if (c.kind() == StyleConstraint::Kind::kPersonality && m.granularity == Granularity::kCoarse) return c.coarsened();
  if (m.task == Task::kContrast && c.kind() == StyleConstraint::Kind::kNone) return StyleConstraint::contrast(false);
  return c;
}

inline Example make_example(const DatasetRecord& r, const TokenSequence* target, const Vocabs& v,
                            const ModelConfig& m, const std::set<std::string>& delex) {
  if (m.task == Task::kContrast && r.constraint.kind() == StyleConstraint::Kind::kPersonality)
    throw ConstraintModeMismatch("personality record given to a contrast-task model");
  if (m.task == Task::kPersonality && r.constraint.kind() == StyleConstraint::Kind::kContrast)
    throw ConstraintModeMismatch("contrast record given to a personality-task model");
  const StyleConstraint c = model_constraint(r.constraint, m);
  const MeaningRepresentation mr = m.method == Method::kM1 ? apply_method1(r.mr, c, m.granularity) : r.mr;
  Example ex;
  for (const auto& sv : mr.slots) {
    ex.slot_types.push_back(v.types.encode(sv.slot_type));
    ex.slot_values.push_back(v.values.encode(source_value_token(sv, delex)));
  }
  if (m.method == Method::kM2 || m.method == Method::kM3) ex.constraint = encode_constraint(c, m.task, m.granularity);
  if (target) ex.target = v.target.encode_all(*target);
  return ex;
}

/// One training example per reference.
inline std::vector<Example> make_examples(std::span<const ProcessedRecord> recs, const Vocabs& v, const RunConfig& cfg) {
  std::vector<Example> out;
  for (const auto& p : recs)
    for (const auto& t : p.targets) out.push_back(make_example(p.record, &t, v, cfg.model, cfg.delex_slots));
  return out;
}

// ---------------------------------------------------------------------------
// ingest

struct IngestReport {
  std::map<std::string, std::size_t> records;                      // split -> count
  std::map<std::string, std::map<std::string, std::size_t>> classes;  // split -> class -> count
  std::size_t unmatched_delex = 0;  // configured slot values absent from a reference
  std::map<std::string, std::size_t> vocab_sizes;
};

inline std::string constraint_class(const StyleConstraint& c) {
  switch (c.kind()) {
    case StyleConstraint::Kind::kPersonality: return std::string(to_string(*c.personality_label()));
    case StyleConstraint::Kind::kContrast: return *c.contrast_flag() ? "contrast" : "no-contrast";
    case StyleConstraint::Kind::kNone: break;
  }
  return "none";
}

inline json to_json(const IngestReport& r) {
  return {{"records", r.records}, {"classes", r.classes}, {"unmatched_delex", r.unmatched_delex},
          {"vocab_sizes", r.vocab_sizes}};
}

inline std::string to_text(const IngestReport& r) {
  std::ostringstream os;
  for (const auto& [split, n] : r.records) {
    os << split << ": " << n << " records\n";
    for (const auto& [cls, k] : r.classes.at(split)) os << "  " << cls << ": " << k << "\n";
  }
  os << "unmatched delex values: " << r.unmatched_delex << "\n";
  for (const auto& [name, n] : r.vocab_sizes) os << "vocab " << name << ": " << n << "\n";
  return os.str();
}

struct DataManifest {
  std::string data_hash;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> files;  // split -> content hash
};

inline DataManifest read_manifest(const std::string& data_dir) {
  const auto path = (fs::path(data_dir) / "manifest.json").string();
  if (!fs::is_regular_file(path)) throw DataError("no processed data in " + data_dir + " (run ingest first)");
  const json j = json::parse(read_file(path));
  DataManifest m;
  m.data_hash = j.at("data_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.files = j.at("files").get<std::map<std::string, std::string>>();
  return m;
}

/// Tokenizes and delexicalizes train/dev/test, builds the vocabularies over
/// train and writes everything with a manifest to `cfg.data_dir`. Without a
/// dev file, a seeded shuffle holds out `dev_fraction` of train.
inline IngestReport ingest(const RunConfig& cfg) {
  require_file(cfg.train_path, "train file");
  if (!cfg.dev_path.empty()) require_file(cfg.dev_path, "dev file");
  if (!cfg.test_path.empty()) require_file(cfg.test_path, "test file");
  std::map<std::string, std::vector<DatasetRecord>> raw;
  raw["train"] = read_records(cfg.train_path);
  if (raw["train"].empty()) throw DataError("train file has no records: " + cfg.train_path);
  if (!cfg.dev_path.empty()) {
    raw["dev"] = read_records(cfg.dev_path);
  } else {
    auto all = std::move(raw["train"]);
    std::vector<std::size_t> order(all.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    RngState rng(cfg.seed(), 21);
    rng.shuffle(order);
    const auto n_dev = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.dev_fraction * static_cast<double>(all.size()) + 0.5));
    if (n_dev >= all.size()) throw DataError("train file too small to hold out a dev split");
    std::vector<bool> is_dev(all.size(), false);
    for (std::size_t i = 0; i < n_dev; ++i) is_dev[order[i]] = true;
    raw["train"].clear();
    for (std::size_t i = 0; i < all.size(); ++i) raw[is_dev[i] ? "dev" : "train"].push_back(std::move(all[i]));
  }
  if (!cfg.test_path.empty()) raw["test"] = read_records(cfg.test_path);

  IngestReport report;
  std::map<std::string, std::vector<ProcessedRecord>> processed;
  for (const auto& [split, recs] : raw) {
    report.records[split] = recs.size();
    auto& cls = report.classes[split];
    for (const auto& r : recs) {
      ++cls[constraint_class(r.constraint)];
      ProcessedRecord p;
      p.record = r;
      for (const auto& ref : r.references) {
        auto d = delexicalize(r.mr, tokenize(ref), cfg.delex_slots);
        report.unmatched_delex += d.unmatched.size();
        p.targets.push_back(std::move(d.tokens));
      }
      processed[split].push_back(std::move(p));
    }
  }
  const Vocabs v = build_vocabs(processed["train"], cfg);
  report.vocab_sizes = {{"slot_type", v.types.size()}, {"slot_value", v.values.size()}, {"target", v.target.size()}};

  fs::create_directories(cfg.data_dir);
  json manifest = {{"data_hash", cfg.data_hash()}, {"seed", cfg.seed()}, {"settings", cfg.data_json()}};
  json files = json::object();
  for (const auto& [split, recs] : processed) {
    std::string text;
    for (const auto& p : recs) text += processed_to_json_line(p) + "\n";
    write_file((fs::path(cfg.data_dir) / (split + ".jsonl")).string(), text);
    files[split] = hex64(fnv1a64(text));
  }
  manifest["files"] = files;
  write_file((fs::path(cfg.data_dir) / kVocabFiles[0]).string(), v.types.to_text());
  write_file((fs::path(cfg.data_dir) / kVocabFiles[1]).string(), v.values.to_text());
  write_file((fs::path(cfg.data_dir) / kVocabFiles[2]).string(), v.target.to_text());
  write_file((fs::path(cfg.data_dir) / "manifest.json").string(), manifest.dump(2) + "\n");
  json rj = to_json(report);
  rj["data_hash"] = cfg.data_hash();
  rj["seed"] = cfg.seed();
  write_file((fs::path(cfg.data_dir) / "ingest_report.json").string(), rj.dump() + "\n");
  write_file((fs::path(cfg.data_dir) / "ingest_report.txt").string(),
             "data hash " + cfg.data_hash() + ", seed " + std::to_string(cfg.seed()) + "\n" + to_text(report));
  return report;
}

inline std::vector<ProcessedRecord> load_split(const RunConfig& cfg, const std::string& split) {
  const DataManifest m = read_manifest(cfg.data_dir);
  if (m.data_hash != cfg.data_hash())
    throw ChecksumMismatch("processed data in " + cfg.data_dir + " was built with different settings (data hash " +
                           m.data_hash + ", config expects " + cfg.data_hash() + ")");
  const auto path = (fs::path(cfg.data_dir) / (split + ".jsonl")).string();
  auto it = m.files.find(split);
  if (it == m.files.end()) throw DataError("processed data has no '" + split + "' split");
  if (hex64(fnv1a64(read_file(path))) != it->second) throw ChecksumMismatch(path + " does not match its manifest");
  return read_processed(path);
}

// ---------------------------------------------------------------------------
// train / grid

inline std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline std::string exact(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct TrainOutcome {
  std::string checkpoint_path;
  TrainResult result;
};

using LogFn = std::function<void(const std::string&)>;

/// Trains one model on the processed train/dev splits and writes
/// `<dir>/checkpoint.bin` and its per-epoch logs.
inline TrainOutcome train_model(const RunConfig& cfg, const std::string& dir, const LogFn& log = {}) {
  const auto train_recs = load_split(cfg, "train");
  const auto dev_recs = load_split(cfg, "dev");
  const Vocabs v = load_vocabs(cfg.data_dir);
  const auto train_ex = make_examples(train_recs, v, cfg);
  const auto dev_ex = make_examples(dev_recs, v, cfg);
  RngState init(cfg.seed(), 7);
  Seq2Seq model(cfg.model, v.sizes(), init);

  std::string log_txt, log_jsonl;
  TrainOutcome out;
  out.result = train(model, train_ex, dev_ex, cfg.train, [&](const EpochLog& e) {
    const std::string line = "epoch " + std::to_string(e.epoch) + " lr " + fmt(e.learning_rate) + " train_ppl " +
                             fmt(e.train_ppl, 4) + " dev_ppl " + fmt(e.dev_ppl, 4) + " best " +
                             fmt(e.best_dev_ppl, 4) + (e.improved ? " *" : "");
    log_txt += line + "\n";
    log_jsonl += json{{"epoch", e.epoch},         {"learning_rate", e.learning_rate}, {"train_ppl", e.train_ppl},
                      {"dev_ppl", e.dev_ppl},     {"best_dev_ppl", e.best_dev_ppl},   {"improved", e.improved}}
                     .dump() +
                 "\n";
    if (log) log(line);
  });

  Checkpoint ck;
  ck.config = cfg.model;
  ck.sizes = v.sizes();
  ck.vocab_hashes = vocab_hashes(cfg.data_dir);
  ck.meta = {{"seed", std::to_string(cfg.seed())},
             {"config_hash", cfg.config_hash()},
             {"data_hash", cfg.data_hash()},
             {"best_epoch", std::to_string(out.result.best_epoch)},
             {"best_dev_ppl", exact(out.result.best_dev_ppl)}};
  ck.params = out.result.best;
  fs::create_directories(dir);
  out.checkpoint_path = (fs::path(dir) / "checkpoint.bin").string();
  save_checkpoint(out.checkpoint_path, ck);
  write_file((fs::path(dir) / "train_log.txt").string(), log_txt);
  write_file((fs::path(dir) / "train_log.jsonl").string(), log_jsonl);
  return out;
}

struct GridRow {
  int layers = 0;
  int size = 0;
  double best_dev_ppl = 0.0;
  int best_epoch = 0;
  std::string checkpoint;
};

/// Trains every (layers, size) pair, writes grid.txt/grid.jsonl and copies
/// the lowest-perplexity checkpoint to `<run_dir>/checkpoint.bin`.
inline std::vector<GridRow> train_grid(const RunConfig& cfg, const LogFn& log = {}) {
  std::vector<std::pair<int, int>> cells;
  for (int l : cfg.grid.layers)
    for (int s : cfg.grid.sizes) cells.emplace_back(l, s);
  std::vector<GridRow> rows(cells.size());
  auto run_cell = [&](std::size_t i) {
    RunConfig c = cfg;
    c.model.rnn_layers = cells[i].first;
    c.model.rnn_size = cells[i].second;
    c.validate();
    const std::string dir =
        (fs::path(cfg.run_dir) / "grid" / ("l" + std::to_string(cells[i].first) + "_s" + std::to_string(cells[i].second)))
            .string();
    const auto o = train_model(c, dir);
    rows[i] = {cells[i].first, cells[i].second, o.result.best_dev_ppl, o.result.best_epoch, o.checkpoint_path};
    if (log) log("grid layers " + std::to_string(rows[i].layers) + " size " + std::to_string(rows[i].size) +
                 " dev_ppl " + fmt(rows[i].best_dev_ppl, 4));
  };
  // Cells are independent single-threaded jobs; results land in fixed slots.
  for (std::size_t start = 0; start < cells.size(); start += static_cast<std::size_t>(cfg.grid.jobs)) {
    std::vector<std::future<void>> jobs;
    for (std::size_t i = start; i < std::min(cells.size(), start + static_cast<std::size_t>(cfg.grid.jobs)); ++i)
      jobs.push_back(std::async(cfg.grid.jobs == 1 ? std::launch::deferred : std::launch::async, run_cell, i));
    for (auto& j : jobs) j.get();
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].best_dev_ppl < rows[best].best_dev_ppl) best = i;
  std::string txt = "layers size best_dev_ppl best_epoch\n", jsonl;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    txt += std::to_string(r.layers) + " " + std::to_string(r.size) + " " + fmt(r.best_dev_ppl, 4) + " " +
           std::to_string(r.best_epoch) + (i == best ? " selected" : "") + "\n";
    jsonl += json{{"layers", r.layers},         {"size", r.size},          {"best_dev_ppl", r.best_dev_ppl},
                  {"best_epoch", r.best_epoch}, {"selected", i == best},  {"config_hash", cfg.config_hash()},
                  {"seed", cfg.seed()}}
                 .dump() +
             "\n";
  }
  write_file((fs::path(cfg.run_dir) / "grid.txt").string(), txt);
  write_file((fs::path(cfg.run_dir) / "grid.jsonl").string(), jsonl);
  fs::copy_file(rows[best].checkpoint, fs::path(cfg.run_dir) / "checkpoint.bin", fs::copy_options::overwrite_existing);
  return rows;
}

// ---------------------------------------------------------------------------
// generate

inline std::string model_label(const ModelConfig& m) {
  std::string s(to_string(m.method));
  if (m.method != Method::kNoCon && m.task == Task::kPersonality) s += "-" + std::string(to_string(m.granularity));
  return s;
}

/// Loads a checkpoint and checks it against the vocabularies in `data_dir`.
inline Seq2Seq load_model(const std::string& path, const std::string& data_dir, Checkpoint* out = nullptr) {
  Checkpoint ck = load_checkpoint(path);
  const auto hashes = vocab_hashes(data_dir);
  for (const auto& [name, h] : hashes) {
    auto it = ck.vocab_hashes.find(name);
    if (it == ck.vocab_hashes.end() || it->second != h)
      throw ChecksumMismatch("checkpoint " + path + " was trained with a different " + name + " vocabulary");
  }
  Seq2Seq model(ck.config, ck.sizes, ck.params);
  if (out) *out = std::move(ck);
  return model;
}

struct GenerateOutcome {
  std::vector<std::string> outputs;
  std::size_t unfinished = 0;
};

inline std::string outputs_path(const RunConfig& cfg) { return (fs::path(cfg.run_dir) / "outputs.txt").string(); }

/// Beam-search realizations of every test record, relexicalized from the
/// record's own MR. Writes outputs.txt and outputs.meta.json.
inline GenerateOutcome generate(const RunConfig& cfg, const std::string& split = "test") {
  const auto ck_path = (fs::path(cfg.run_dir) / "checkpoint.bin").string();
  if (!fs::is_regular_file(ck_path)) throw ConfigError("no checkpoint at " + ck_path + " (run train first)");
  Checkpoint ck;
  load_model(ck_path, cfg.data_dir, &ck);
  const ModelConfig& a = ck.config;
  const ModelConfig& b = cfg.model;
  if (a.method != b.method || a.granularity != b.granularity || a.task != b.task || a.rnn_layers != b.rnn_layers ||
      a.rnn_size != b.rnn_size || a.embed_size != b.embed_size)
    throw ConfigError("checkpoint is a " + model_label(a) + " model with " + std::to_string(a.rnn_layers) + "x" +
                      std::to_string(a.rnn_size) + " layers; configuration asks for " + model_label(b) + " " +
                      std::to_string(b.rnn_layers) + "x" + std::to_string(b.rnn_size));
  // Decoding settings come from the configuration, weights from the checkpoint.
  ModelConfig decode_cfg = a;
  decode_cfg.beam_width = b.beam_width;
  decode_cfg.length_norm = b.length_norm;
  Seq2Seq model(decode_cfg, ck.sizes, ck.params);
  if (ck.meta["data_hash"] != cfg.data_hash())
    throw ChecksumMismatch("checkpoint was trained on data with hash " + ck.meta["data_hash"]);
  const auto recs = load_split(cfg, split);
  const Vocabs v = load_vocabs(cfg.data_dir);
  std::size_t max_len = cfg.max_len;
  if (max_len == 0) {
    for (const auto& p : load_split(cfg, "train"))
      for (const auto& t : p.targets) max_len = std::max(max_len, 2 * t.size());
    max_len = std::max<std::size_t>(max_len, 1);
  }
  GenerateOutcome out;
  std::string text;
  for (const auto& p : recs) {
    const Example ex = make_example(p.record, nullptr, v, ck.config, cfg.delex_slots);
    const BeamResult r = beam_generate(model, ex, decode_cfg.beam_width, max_len);
    if (!r.finished) ++out.unfinished;
    TokenSequence toks;
    for (int id : r.tokens) toks.push_back(v.target.decode(id));
    // A placeholder for a slot missing from this MR stays verbatim; SER
    // then counts it as a hallucination.
    DelexMap map = delex_map_from_mr(p.record.mr, cfg.delex_slots);
    for (const auto& t : toks)
      if (is_placeholder(t) && !map.find(t)) map.placeholders.push_back({t, "", t});
    const std::string line = toks.empty() ? std::string() : relexicalize(toks, map);
    out.outputs.push_back(line);
    text += line + "\n";
  }
  write_file(outputs_path(cfg), text);
  const json meta = {{"checkpoint_hash", hex64(fnv1a64(read_file(ck_path)))},
                     {"config_hash", cfg.config_hash()},
                     {"data_hash", cfg.data_hash()},
                     {"seed", cfg.seed()},
                     {"split", split},
                     {"records", recs.size()},
                     {"unfinished", out.unfinished}};
  write_file(outputs_path(cfg) + ".meta.json", meta.dump(2) + "\n");
  return out;
}

// ---------------------------------------------------------------------------
// evaluate

struct ExperimentRow {
  std::string model;  // e.g. "m3-fine"
  Task task = Task::kPersonality;
  double bleu = 0.0;
  double ser = 0.0;
  SlotErrorCounts ser_counts;
  double entropy = 0.0;
  // personality
  double agg = 0.0, prag = 0.0;
  CategoryCorrelation agg_detail, prag_detail;
  // contrast
  ContrastAccuracy contrast;
};

struct MetricTables {
  ParaphraseTable paraphrase = ParaphraseTable::builtin();
  PolarityTable polarity = PolarityTable::builtin();
  MarkerLexicon markers = MarkerLexicon::builtin();

  static MetricTables load(const MetricOptions& o) {
    MetricTables t;
    if (!o.paraphrase_table.empty()) t.paraphrase = ParaphraseTable::parse(read_file(o.paraphrase_table));
    if (!o.polarity_table.empty()) t.polarity = PolarityTable::parse(read_file(o.polarity_table), t.paraphrase);
    if (!o.marker_lexicon.empty()) t.markers = MarkerLexicon::parse(read_file(o.marker_lexicon));
    return t;
  }
};

inline TokenSequence tokens_or_empty(std::string_view s) {
  try {
    return tokenize(s);
  } catch (const EmptyInput&) {
    return {};
  }
}

inline std::string record_key(const DatasetRecord& r) {
  return serialize_mr(r.mr) + "\t" + style_to_json(r.constraint).dump();
}

/// Scores outputs aligned 1:1 with `records`. References of records that
/// share MR and constraint are pooled for BLEU.
inline ExperimentRow score(std::span<const std::string> outputs, std::span<const DatasetRecord> records, Task task,
                           const MetricTables& tables, bool bleu_smooth = false) {
  if (outputs.size() != records.size())
    throw DataError(std::to_string(outputs.size()) + " outputs for " + std::to_string(records.size()) + " records");
  if (records.empty()) throw EmptyCorpus();
  std::map<std::string, std::vector<TokenSequence>> pooled;
  for (const auto& r : records)
    for (const auto& ref : r.references) pooled[record_key(r)].push_back(tokens_or_empty(ref));
  std::vector<TokenSequence> hyps;
  std::vector<std::vector<TokenSequence>> refs;
  ExperimentRow row;
  row.task = task;
  std::vector<LabeledText> model_texts, gold_texts;
  std::vector<ContrastJudgment> judgments;
  for (std::size_t i = 0; i < records.size(); ++i) {
    hyps.push_back(tokens_or_empty(outputs[i]));
    refs.push_back(pooled[record_key(records[i])]);
    row.ser_counts += count_errors(align_slots(records[i].mr, hyps.back(), tables.paraphrase), tables.paraphrase);
    const auto& c = records[i].constraint;
    if (task == Task::kPersonality && c.kind() == StyleConstraint::Kind::kPersonality) {
      const std::string label(to_string(*c.personality_label()));
      model_texts.push_back({label, hyps.back()});
      for (const auto& ref : records[i].references) gold_texts.push_back({label, tokens_or_empty(ref)});
    }
    if (task == Task::kContrast)
      judgments.push_back(contrast_judge(records[i].mr, hyps.back(), tables.polarity, tables.paraphrase));
  }
  row.bleu = bleu(hyps, refs, bleu_smooth).score;
  row.ser = row.ser_counts.rate();
  std::vector<TokenSequence> nonempty;
  for (const auto& h : hyps)
    if (!h.empty()) nonempty.push_back(h);
  row.entropy = nonempty.empty() ? 0.0 : entropy(nonempty);
  if (task == Task::kPersonality && !model_texts.empty()) {
    const auto mm = marker_counts(model_texts, tables.markers);
    const auto gm = marker_counts(gold_texts, tables.markers);
    row.agg_detail = marker_correlation(mm, gm, tables.markers, MarkerCategory::kAggregation);
    row.prag_detail = marker_correlation(mm, gm, tables.markers, MarkerCategory::kPragmatic);
    row.agg = row.agg_detail.average;
    row.prag = row.prag_detail.average;
  }
  if (task == Task::kContrast) row.contrast = contrast_accuracy(judgments);
  return row;
}

inline json to_json(const ExperimentRow& r) {
  json j = {{"model", r.model},
            {"task", std::string(to_string(r.task))},
            {"bleu", r.bleu},
            {"ser", r.ser},
            {"ser_counts",
             {{"S", r.ser_counts.substitutions},
              {"D", r.ser_counts.deletions},
              {"R", r.ser_counts.repeats},
              {"H", r.ser_counts.hallucinations},
              {"N", r.ser_counts.slots}}},
            {"entropy", r.entropy}};
  if (r.task == Task::kPersonality) {
    j["agg"] = r.agg;
    j["prag"] = r.prag;
    for (const auto* cat : {&r.agg_detail, &r.prag_detail}) {
      json per = json::object();
      for (const auto& row : cat->rows)
        per[std::string(to_string(row.personality))] = {
            {"r", row.r}, {"p", std::isnan(row.p_value) ? json() : json(row.p_value)}, {"degenerate", row.degenerate}};
      j[cat == &r.agg_detail ? "agg_by_personality" : "prag_by_personality"] = per;
    }
  } else {
    j["contrast_accuracy"] = r.contrast.accuracy;
    j["contrast_attempts"] = r.contrast.attempts;
    j["contrast_valid"] = r.contrast.valid;
    j["contrast_undefined"] = r.contrast.undefined;
  }
  return j;
}

/// Table in the column layout of the automatic-evaluation tables.
inline std::string to_text(std::span<const ExperimentRow> rows) {
  if (rows.empty()) return {};
  std::ostringstream os;
  char buf[256];
  if (rows.front().task == Task::kPersonality) {
    std::snprintf(buf, sizeof buf, "%-14s %8s %8s %8s %8s %8s\n", "Model", "BLEU", "SER", "H", "AGG", "PRAG");
    os << buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-14s %8.2f %8.4f %8.2f %8.2f %8.2f\n", r.model.c_str(), r.bleu, r.ser,
                    r.entropy, r.agg, r.prag);
      os << buf;
    }
  } else {
    std::snprintf(buf, sizeof buf, "%-14s %8s %8s %8s %9s %9s\n", "Model", "BLEU", "SER", "H", "Contrast", "Attempts");
    os << buf;
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%-14s %8.2f %8.4f %8.2f %9.2f %9zu%s\n", r.model.c_str(), r.bleu, r.ser,
                    r.entropy, r.contrast.accuracy, r.contrast.attempts, r.contrast.undefined ? " (no attempts)" : "");
      os << buf;
    }
  }
  return os.str();
}

/// Checks the lineage of outputs.txt against the configuration, scores it
/// and writes report.txt and report.jsonl to the run directory.
inline ExperimentRow evaluate(const RunConfig& cfg, const std::string& split = "test") {
  const auto out_path = outputs_path(cfg);
  if (!fs::is_regular_file(out_path)) throw ConfigError("no outputs at " + out_path + " (run generate first)");
  const auto meta_path = out_path + ".meta.json";
  if (!fs::is_regular_file(meta_path)) throw ChecksumMismatch("outputs have no lineage file " + meta_path);
  const json meta = json::parse(read_file(meta_path));
  if (meta.value("config_hash", "") != cfg.config_hash() || meta.value("seed", std::uint64_t{0}) != cfg.seed() ||
      meta.value("data_hash", "") != cfg.data_hash())
    throw ChecksumMismatch("outputs were produced under a different configuration (config " +
                           meta.value("config_hash", "?") + ", expected " + cfg.config_hash() + ")");
  const auto ck_path = (fs::path(cfg.run_dir) / "checkpoint.bin").string();
  if (fs::is_regular_file(ck_path) && meta.value("checkpoint_hash", "") != hex64(fnv1a64(read_file(ck_path))))
    throw ChecksumMismatch("outputs were not generated by " + ck_path);
  const auto recs = load_split(cfg, split);
  std::vector<std::string> outputs;
  {
    std::istringstream is(read_file(out_path));
    for (std::string line; std::getline(is, line);) outputs.push_back(line);
  }
  std::vector<DatasetRecord> records;
  for (const auto& p : recs) records.push_back(p.record);
  const MetricTables tables = MetricTables::load(cfg.metrics);
  ExperimentRow row = score(outputs, records, cfg.model.task, tables, cfg.metrics.bleu_smooth);
  row.model = model_label(cfg.model);
  json j = to_json(row);
  j["config_hash"] = cfg.config_hash();
  j["seed"] = cfg.seed();
  j["checkpoint_hash"] = meta.value("checkpoint_hash", "");
  write_file((fs::path(cfg.run_dir) / "report.jsonl").string(), j.dump() + "\n");
  const ExperimentRow rows[] = {row};
  write_file((fs::path(cfg.run_dir) / "report.txt").string(),
             "config " + cfg.config_hash() + " seed " + std::to_string(cfg.seed()) + "\n" + to_text(rows));
  return row;
}

}  // namespace stylegen::pipeline
