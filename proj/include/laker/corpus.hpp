#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "laker/extract.hpp"
#include "laker/rng.hpp"

namespace laker {

struct CorpusConfig {
  std::size_t neg_per_pos = 2;         // n
  std::size_t syn_candidate_pool = 16; // m
  std::size_t mask_count_path = 2;
  std::size_t short_path_threshold = 5;
  double long_path_replace_frac = 0.20;
  std::uint64_t seed = 0;
  PathConfig path;  // extraction settings; seed is derived from the corpus seed

  void validate() const;
};

// A triplet plus its classification label. The three masked views
// (h,r,[MASK]), ([MASK],[MASK],t) and (h,[MASK],t) are deterministic
// renderings of the base, produced at verbalization time.
struct MaskedTriplet {
  Triplet base;
  Relation relation_label = Relation::NoRelation;
};

enum class TripletView { TailMasked, HeadRelMasked, RelMasked };

MaskedTriplet mask_triplet(const Triplet& t);

struct NegTripletResult {
  std::vector<Triplet> triplets;
  std::size_t requested = 0;

  bool shortfall() const { return triplets.size() < requested; }
};

// Negative sampling per relation strategy: SubClassOf draws tails outside the
// transitive superclass closure of the head; Synonym draws token-disjoint
// labels from the head's subclass neighborhood, topping up ontology-wide;
// DisjointWith mirrors SubClassOf over the declared disjoint set.
NegTripletResult gen_negative_triplets(const Triplet& t, const Ontology& o,
                                       const CorpusConfig& cfg, Rng& rng);

// Ancestors of `head` along subclass edges, including head itself.
std::set<ConceptId> superclass_closure(const Ontology& o, const ConceptId& head);

// Corrupts 1 concept on paths shorter than short_path_threshold, otherwise
// ceil(long_path_replace_frac * length) distinct positions. Throws
// InsufficientCandidates when every concept is already on the path.
Path gen_negative_path(const Path& p, const Ontology& o, const CorpusConfig& cfg, Rng& rng);

struct MaskedPath {
  Path base;
  std::vector<std::size_t> masked_positions;  // ascending concept indices
  std::vector<ConceptId> target_concepts;
};

std::size_t path_mask_count(std::size_t path_length, const CorpusConfig& cfg);

MaskedPath mask_path(const Path& p, const CorpusConfig& cfg, Rng& rng);

struct ShortfallReport {
  std::size_t subclass = 0;
  std::size_t disjoint = 0;
  std::size_t synonym = 0;
  std::size_t paths = 0;

  bool any() const { return subclass + disjoint + synonym + paths > 0; }
};

struct Corpus {
  std::vector<MaskedTriplet> triplets;   // each positive followed by its negatives
  std::vector<Path> paths;               // positive and negative paths
  std::vector<MaskedPath> masked_paths;  // masks over positive paths only
  ShortfallReport shortfalls;
  std::size_t cycle_warnings = 0;

  bool empty() const { return triplets.empty() && paths.empty(); }
};

Corpus build_corpus(const std::vector<Ontology>& ontologies, const CorpusConfig& cfg);

// Newline-delimited record format with a schema header on line 1.
std::string corpus_to_string(const Corpus& c);
Corpus corpus_from_string(const std::string& text, const std::string& source_name);
void save_corpus(const Corpus& c, const std::string& path);
Corpus load_corpus(const std::string& path);

}  // namespace laker
