#pragma once

#include <cstdint>
#include <string>

#include "laker/eval.hpp"
#include "laker/ontology.hpp"

namespace laker {

// Desk-scale benchmark generator: a random subclass DAG with multi-word
// labels and synonyms, plus a perturbed copy with fresh ids and a gold
// alignment over the surviving concepts.
struct SynthConfig {
  std::size_t n_concepts = 50;
  std::uint64_t seed = 0;
  std::string source_id = "src";
  std::string target_id = "tgt";

  double extra_parent_rate = 0.15;
  double disjoint_rate = 0.10;
  double synonym_rate = 0.85;        // concept gets at least one alternate label
  double second_synonym_rate = 0.35;

  // target-side perturbations
  double swap_primary_rate = 0.5;    // promote an alternate label to primary
  double token_reorder_rate = 0.3;
  double token_drop_rate = 0.12;
  double synonym_drop_rate = 0.25;
  double concept_deletion_rate = 0.1;  // exact count: round(rate * n)

  void validate() const;
};

struct SynthPair {
  Ontology source;
  Ontology target;
  ReferenceSet gold;
};

SynthPair gen_synthetic_pair(const SynthConfig& cfg);

// Just the source side; handy for single-ontology fixtures.
Ontology gen_synthetic_ontology(std::size_t n_concepts, std::uint64_t seed,
                                const std::string& ontology_id = "synth");

}  // namespace laker
