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

// Command-line entry point: ingest, train, grid, generate, evaluate, synth.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 training
// divergence, 1 anything else.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "stylegen/pipeline.hpp"
#include "stylegen/synth.hpp"

namespace {

using namespace stylegen;
namespace pl = stylegen::pipeline;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method, granularity, task, out, data_dir;
  std::optional<int> beam, epochs;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "random seed");
  cmd->add_option("--method", o.method, "nocon, m1, m2 or m3");
  cmd->add_option("--granularity", o.granularity, "coarse or fine");
  cmd->add_option("--beam", o.beam, "beam width");
  cmd->add_option("--task", o.task, "personality or contrast");
  cmd->add_option("--out", o.out, "run directory");
  cmd->add_option("--data-dir", o.data_dir, "processed data directory");
  cmd->add_option("--epochs", o.epochs, "maximum training epochs");
}

// Flags win over the configuration file.
pl::RunConfig resolve(const Overrides& o) {
  pl::RunConfig c = o.config.empty() ? pl::RunConfig{} : pl::load_config(o.config);
  if (o.seed) c.train.seed = *o.seed;
  if (o.method) c.model.method = parse_method(*o.method);
  if (o.granularity) c.model.granularity = parse_granularity(*o.granularity);
  if (o.task) c.model.task = parse_task(*o.task);
  if (o.beam) c.model.beam_width = *o.beam;
  if (o.epochs) c.train.max_epochs = *o.epochs;
  if (o.out) c.run_dir = *o.out;
  if (o.data_dir) c.data_dir = *o.data_dir;
  c.validate();
  return c;
}

void need_run_dir(const pl::RunConfig& c) {
  if (c.run_dir.empty()) throw ConfigError("no run directory: pass --out or set run_dir in the config");
}

int run(int argc, char** argv) {
  CLI::App app{"Style-controlled MR-to-text generation"};
  app.require_subcommand(1);
  Overrides o;
  auto* ingest = app.add_subcommand("ingest", "tokenize, delexicalize and build vocabularies");
  auto* train = app.add_subcommand("train", "train one model and save the best checkpoint");
  auto* grid = app.add_subcommand("grid", "train the layers x size grid and keep the best model");
  auto* generate = app.add_subcommand("generate", "beam-search realizations for the test split");
  auto* evaluate = app.add_subcommand("evaluate", "score generated outputs against the test split");
  for (auto* c : {ingest, train, grid, generate, evaluate}) add_common(c, o);

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus as JSON lines");
  std::string kind = "personality", synth_out;
  std::size_t n = 1000;
  std::uint64_t synth_seed = 1;
  synth->add_option("--kind", kind, "personality, plain or contrast")->check(CLI::IsMember({"personality", "plain", "contrast"}));
  synth->add_option("-n,--records", n, "record count (contrast: MR count, two records each)");
  synth->add_option("--seed", synth_seed, "random seed");
  synth->add_option("--output", synth_out, "output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  auto log = [](const std::string& line) { std::cerr << line << "\n"; };
  if (*synth) {
    std::vector<DatasetRecord> recs = kind == "personality" ? synth::personality_corpus(n, synth_seed)
                                      : kind == "plain"     ? synth::plain_corpus(n, synth_seed)
                                                            : synth::contrast_corpus(n, synth_seed);
    pl::write_records(synth_out, recs);
    std::cout << recs.size() << " records written to " << synth_out << "\n";
    return 0;
  }
  pl::RunConfig cfg = resolve(o);
  if (*ingest) {
    const auto report = pl::ingest(cfg);
    std::cout << pl::to_text(report);
  } else if (*train) {
    pl::ensure_run_dir(cfg);
    const auto r = pl::train_model(cfg, cfg.run_dir, log);
    std::cout << "checkpoint " << r.checkpoint_path << " (epoch " << r.result.best_epoch << ", dev ppl "
              << pl::fmt(r.result.best_dev_ppl, 4) << ")\n";
  } else if (*grid) {
    pl::ensure_run_dir(cfg);
    pl::train_grid(cfg, log);
    std::cout << read_file((std::filesystem::path(cfg.run_dir) / "grid.txt").string());
  } else if (*generate) {
    need_run_dir(cfg);
    const auto g = pl::generate(cfg);
    std::cout << g.outputs.size() << " outputs written to " << pl::outputs_path(cfg);
    if (g.unfinished) std::cout << " (" << g.unfinished << " hit the length limit)";
    std::cout << "\n";
  } else if (*evaluate) {
    need_run_dir(cfg);
    pl::evaluate(cfg);
    std::cout << read_file((std::filesystem::path(cfg.run_dir) / "report.txt").string());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const stylegen::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const stylegen::DivergedTraining& e) {
    std::cerr << "training diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const stylegen::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
