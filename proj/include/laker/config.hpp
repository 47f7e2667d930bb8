#pragma once

#include <string>

#include "laker/corpus.hpp"
#include "laker/encoder.hpp"
#include "laker/matcher.hpp"
#include "laker/objectives.hpp"
#include "laker/transe.hpp"

namespace laker {

// Merged run configuration. Loaded from a sectioned key=value file; unknown
// sections or keys are rejected. Per-stage seeds are derived from the global
// seed inside the pipeline.
struct RunConfig {
  std::uint64_t seed = 42;
  std::size_t threads = 0;
  std::size_t vocab_min_freq = 1;
  CorpusConfig corpus;
  EncoderConfig encoder;
  TrainConfig train;
  TransEConfig transe;
  MatchOptions match;

  void validate() const;
};

RunConfig parse_run_config(const std::string& text, const std::string& source_name);
RunConfig load_run_config(const std::string& path);

// Canonical text form; parse(dump(cfg)) reproduces cfg exactly.
std::string dump_run_config(const RunConfig& cfg);

// Comma-separated subset of {c2c,c2r,cpath,mpath}; applies to cfg.train.
void apply_objectives(TrainConfig& train, const std::string& list);
std::string objectives_string(const TrainConfig& train);

}  // namespace laker
