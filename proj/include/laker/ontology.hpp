#pragma once

#include <compare>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "laker/errors.hpp"

namespace laker {

// IRI-like identifier, globally qualified as "<ontology_id>#<local_id>".
struct ConceptId {
  std::string value;

  auto operator<=>(const ConceptId&) const = default;
};

enum class Relation { SubClassOf, DisjointWith, Synonym, NoRelation };

constexpr std::size_t kRelationCount = 4;

std::string_view relation_name(Relation r);

// Reserved vocabulary token for a relation, e.g. "<subclass_of>".
std::string_view relation_token(Relation r);

struct Concept {
  ConceptId id;
  std::vector<std::string> labels;  // first entry is the primary label
  std::optional<std::string> description;
  std::vector<ConceptId> subclass_of;
  std::vector<ConceptId> disjoint_with;

  const std::string& primary_label() const { return labels.front(); }
  bool has_synonym() const { return labels.size() > 1; }
};

struct Ontology {
  std::string id;
  std::map<ConceptId, Concept> concepts;
  std::vector<ConceptId> roots;  // exactly the parentless concepts, sorted

  bool contains(const ConceptId& cid) const { return concepts.count(cid) > 0; }
  const Concept& get(const ConceptId& cid) const;
};

enum class OntologyFormat { CanonicalJson, OboFlat };

// Picks a format from the file extension (.json vs .obo); defaults to json.
OntologyFormat detect_format(const std::string& path);

Ontology load_ontology(const std::string& path, OntologyFormat format);

Ontology parse_ontology_json(const std::string& text, const std::string& source_name);
Ontology parse_ontology_obo(const std::string& text, const std::string& source_name);

// Canonical JSON form: concepts and edge lists sorted, local ids, 2-space indent.
std::string serialize_ontology(const Ontology& o);

std::string qualify_id(const std::string& ontology_id, const std::string& local_id);
std::string local_id(const Ontology& o, const ConceptId& cid);

}  // namespace laker
