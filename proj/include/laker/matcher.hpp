#pragma once

#include <map>
#include <string>
#include <vector>

#include "laker/encoder.hpp"
#include "laker/transe.hpp"

namespace laker {

struct CandidateSet {
  ConceptId source;
  std::vector<std::pair<ConceptId, double>> candidates;  // probability-descending
};

// Masked concept prediction: the query is rendered as a synonym triplet with
// a masked tail, and the concept head's softmax at the mask is truncated to
// the top-k (ties broken by ConceptId).
CandidateSet predict_candidates(const ConceptId& c, const Ontology& source,
                                const ModelParams& params, const Vocab& vocab,
                                const ConceptVocab& concepts, std::size_t k,
                                std::size_t max_len = 64);

struct GroundedCandidates {
  std::vector<ConceptId> ids;
  bool lexical_fallback = false;
};

// Keeps candidates that belong to the target ontology. When none survive,
// falls back to the top-k target concepts by label-token Jaccard overlap and
// flags the result.
GroundedCandidates ground_candidates(const CandidateSet& cs, const Ontology& target,
                                     std::size_t k, const std::string& source_label);

// Cached label features f(c): the [CLS] encoding of a concept's primary label.
class ConceptFeatureCache {
 public:
  ConceptFeatureCache(const ModelParams& params, const Vocab& vocab, std::size_t max_len);

  const std::vector<double>& feature(const Concept& c) const;

 private:
  const ModelParams& params_;
  const Vocab& vocab_;
  std::size_t max_len_;
  mutable std::map<ConceptId, std::vector<double>> cache_;
};

// cos(concat(f, e), concat(f', e')) over raw vectors; the fusion formula.
double fused_cosine(const std::vector<double>& f, const std::vector<double>& e,
                    const std::vector<double>& f_prime, const std::vector<double>& e_prime);

// cos(concat(f(c), e(c)), concat(f(c'), e(c'))) in [-1, 1].
double fuse_score(const Concept& c, const Concept& c_prime, const ConceptFeatureCache& features,
                  const TransEEmbeddings& transe, const ConceptVocab& concepts);

struct ScoredPair {
  ConceptId source;
  ConceptId target;
  double score = 0.0;  // clamp(cos, 0, 1)
  bool lexical_fallback = false;
};

struct Mapping {
  ConceptId source;
  ConceptId target;
  double score = 0.0;
  bool lexical_fallback = false;
};

struct AlignmentSet {
  std::vector<Mapping> mappings;
};

// Global greedy selection: score-descending (ties lexicographic), each
// endpoint used at most once, pairs below threshold dropped. With one_to_one
// off, keeps each source's single best pair instead.
AlignmentSet select_mappings(std::vector<ScoredPair> pairs, double threshold, bool one_to_one);

struct MatchOptions {
  std::size_t k = 5;
  double threshold = 0.0;
  bool one_to_one = true;
  std::size_t threads = 0;  // 0: hardware concurrency, capped by LAKER_THREADS
  std::size_t max_len_triplet = 64;
};

struct MatchOutput {
  AlignmentSet alignment;
  double elapsed_seconds = 0.0;
  std::size_t fallback_sources = 0;
  std::size_t scored_pairs = 0;
};

MatchOutput run_matching(const Ontology& source, const Ontology& target,
                         const ModelParams& params, const Vocab& vocab,
                         const ConceptVocab& concepts, const TransEEmbeddings& transe,
                         const MatchOptions& options);

// TSV lines: source <TAB> target <TAB> = <TAB> score(6dp) <TAB> flags
std::string alignment_to_tsv(const AlignmentSet& alignment);
AlignmentSet alignment_from_tsv(const std::string& text, const std::string& source_name);
void save_alignment_tsv(const AlignmentSet& alignment, const std::string& path);
AlignmentSet load_alignment_tsv(const std::string& path);

struct AlignmentRunMeta {
  std::string checkpoint_hash;
  std::size_t k = 0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
  double elapsed_seconds = 0.0;
};

std::string alignment_to_json(const AlignmentSet& alignment, const AlignmentRunMeta& meta);
void save_alignment_json(const AlignmentSet& alignment, const AlignmentRunMeta& meta,
                         const std::string& path);

// Worker-thread cap: min(requested or hardware, LAKER_THREADS when set).
std::size_t effective_thread_count(std::size_t requested);

}  // namespace laker
