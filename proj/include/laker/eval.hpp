#pragma once

#include <set>
#include <string>
#include <utility>

#include "laker/matcher.hpp"

namespace laker {

struct ReferenceSet {
  std::set<std::pair<ConceptId, ConceptId>> pairs;  // equivalence mappings only
  std::size_t skipped_non_equivalence = 0;
  std::size_t duplicates_collapsed = 0;
};

enum class ReferenceFormat { Tsv, Json };

ReferenceFormat detect_reference_format(const std::string& path);

// TSV: "source<TAB>target<TAB>=" per line; JSON: array of {source, target}.
// Lines with a non-"=" relation are skipped and counted.
ReferenceSet parse_reference_tsv(const std::string& text, const std::string& source_name);
ReferenceSet parse_reference_json(const std::string& text, const std::string& source_name);
ReferenceSet load_reference(const std::string& path, ReferenceFormat format);

std::string reference_to_tsv(const ReferenceSet& ref);
void save_reference_tsv(const ReferenceSet& ref, const std::string& path);

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t intersection = 0;
  bool empty_alignment = false;
  bool empty_reference = false;
};

// Micro counts over (source, target) pairs; scores and flags are ignored.
PrfResult compute_prf(const AlignmentSet& alignment, const ReferenceSet& reference);

}  // namespace laker
