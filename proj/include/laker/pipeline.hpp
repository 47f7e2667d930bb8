#pragma once

#include <optional>
#include <string>
#include <vector>

#include "laker/checkpoint.hpp"
#include "laker/config.hpp"
#include "laker/eval.hpp"

namespace laker {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

// Per-stage seed tags so one run seed drives every stage deterministically.
namespace seed_tag {
constexpr std::uint64_t kCorpus = 0xC0;
constexpr std::uint64_t kParams = 0x1A;
constexpr std::uint64_t kTrain = 0x7E;
constexpr std::uint64_t kTransE = 0x2B;
}  // namespace seed_tag

void save_model_checkpoint(const std::string& path, const RunConfig& cfg,
                           const ModelParams& params, const std::string& vocab_text,
                           const std::string& concept_vocab_text);

// Verifies vocab hashes and reconstructs the parameters with the encoder
// config recorded in the checkpoint's config snapshot.
ModelParams load_model_checkpoint(const std::string& path, const std::string& vocab_text,
                                  const std::string& concept_vocab_text,
                                  RunConfig* out_config = nullptr);

void save_transe_checkpoint(const std::string& path, const RunConfig& cfg,
                            const TransEEmbeddings& emb);
TransEEmbeddings load_transe_checkpoint(const std::string& path);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct PipelineResult {
  std::vector<StageTiming> timings;
  double total_seconds = 0.0;

  std::size_t corpus_triplets = 0;
  std::size_t corpus_paths = 0;
  std::size_t corpus_masked_paths = 0;
  bool corpus_shortfall = false;

  std::vector<LossReport> loss_reports;

  AlignmentSet alignment;
  std::string alignment_tsv;  // exact bytes of the TSV artifact
  std::size_t fallback_sources = 0;
  double match_seconds = 0.0;

  std::optional<PrfResult> prf;
};

// corpus -> vocabs -> train -> transe -> match [-> eval]; when out_dir is
// non-empty every stage artifact is written beneath it.
PipelineResult run_pipeline(const RunConfig& cfg, const Ontology& source, const Ontology& target,
                            const std::optional<ReferenceSet>& reference,
                            const std::string& out_dir);

Ontology load_ontology_auto(const std::string& path);

}  // namespace laker
