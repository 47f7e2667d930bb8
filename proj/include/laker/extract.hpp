#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "laker/ontology.hpp"

namespace laker {

enum class Polarity { Positive, Negative };

struct Triplet {
  std::string head_text;
  Relation relation = Relation::SubClassOf;
  std::string tail_text;
  ConceptId head_id;
  ConceptId tail_id;
  Polarity polarity = Polarity::Positive;
};

// One positive triplet per subclass edge, per disjoint edge, and per
// (primary label, alternate label) synonym pair. Deterministically sorted.
std::vector<Triplet> extract_triplets(const Ontology& o);

struct PathElement {
  ConceptId id;
  std::string label;
};

// Alternating concept/relation sequence ordered from a concept up to a root;
// relations[i] connects concepts[i] and concepts[i+1].
struct Path {
  std::vector<PathElement> concepts;
  std::vector<Relation> relations;
  Polarity polarity = Polarity::Positive;

  std::size_t length() const { return concepts.size(); }
};

struct PathConfig {
  std::size_t max_len = 8;         // maximum concepts per path
  std::size_t max_per_concept = 4; // paths ending at the same terminal concept
  double p_syn = 0.5;              // chance of a synonym hop after a subclass hop
  std::uint64_t seed = 0;
};

struct PathExtraction {
  std::vector<Path> paths;
  std::size_t cycle_warnings = 0;
};

PathExtraction extract_paths(const Ontology& o, const PathConfig& cfg);

struct CorpusStats {
  std::size_t concepts = 0;
  std::size_t subclass_triplets = 0;
  std::size_t disjoint_triplets = 0;
  std::size_t synonym_triplets = 0;
  std::size_t paths = 0;
  std::optional<double> avg_path_len;
};

CorpusStats stats(const Ontology& o, const std::vector<Triplet>& triplets,
                  const std::vector<Path>& paths);

struct StatsRow {
  std::string ontology;
  CorpusStats stats;
};

// Fixed-width report: Ontology | #Concepts | #Triplets (subclass, synonym) |
// #Paths | Avg. length.
std::string format_stats_table(const std::vector<StatsRow>& rows);

}  // namespace laker
