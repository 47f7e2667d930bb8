#include "laker/ontology.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace laker {

namespace {

using nlohmann::ordered_json;

bool has_whitespace(const std::string& s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c) != 0; });
}

struct RawConcept {
  std::string id;
  std::vector<std::string> labels;
  std::optional<std::string> description;
  std::vector<std::string> subclass_of;
  std::vector<std::string> disjoint_with;
};

// Shared validation + id qualification for both input formats.
Ontology assemble(const std::string& ontology_id, std::vector<RawConcept> raw,
                  const std::string& source_name) {
  if (ontology_id.empty() || has_whitespace(ontology_id)) {
    throw Error(ErrorKind::ValidationError,
                source_name + ": ontology id must be non-empty without whitespace");
  }

  Ontology out;
  out.id = ontology_id;

  std::set<std::string> declared;
  for (const auto& rc : raw) {
    if (rc.id.empty() || has_whitespace(rc.id)) {
      throw Error(ErrorKind::ValidationError,
                  source_name + ": concept id '" + rc.id + "' must be non-empty without whitespace");
    }
    if (!declared.insert(rc.id).second) {
      throw Error(ErrorKind::ValidationError, source_name + ": duplicate concept id '" + rc.id + "'");
    }
  }

  for (auto& rc : raw) {
    Concept c;
    c.id = ConceptId{qualify_id(ontology_id, rc.id)};
    if (rc.labels.empty()) {
      throw Error(ErrorKind::ValidationError,
                  source_name + ": concept '" + rc.id + "' has no labels");
    }
    std::set<std::string> seen_labels;
    for (const auto& l : rc.labels) {
      if (l.empty()) {
        throw Error(ErrorKind::ValidationError,
                    source_name + ": concept '" + rc.id + "' has an empty label");
      }
      if (!seen_labels.insert(l).second) {
        throw Error(ErrorKind::ValidationError,
                    source_name + ": concept '" + rc.id + "' repeats label '" + l + "'");
      }
    }
    c.labels = std::move(rc.labels);
    c.description = std::move(rc.description);

    auto link = [&](const std::vector<std::string>& targets, const char* edge) {
      std::vector<ConceptId> ids;
      for (const auto& t : targets) {
        if (t == rc.id) {
          throw Error(ErrorKind::ValidationError,
                      source_name + ": concept '" + rc.id + "' has a " + edge + " self-loop");
        }
        if (!declared.count(t)) {
          throw Error(ErrorKind::ValidationError, source_name + ": concept '" + rc.id +
                                                      "' references undeclared concept '" + t + "'");
        }
        ids.push_back(ConceptId{qualify_id(ontology_id, t)});
      }
      std::sort(ids.begin(), ids.end());
      ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
      return ids;
    };
    c.subclass_of = link(rc.subclass_of, "subclass_of");
    c.disjoint_with = link(rc.disjoint_with, "disjoint_with");

    ConceptId key = c.id;
    out.concepts.emplace(std::move(key), std::move(c));
  }

  for (const auto& [cid, c] : out.concepts) {
    if (c.subclass_of.empty()) out.roots.push_back(cid);
  }
  return out;
}

std::size_t line_of_offset(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

void reject_unknown_keys(const ordered_json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where, const std::string& source_name) {
  for (const auto& [key, _] : obj.items()) {
    bool ok = std::any_of(allowed.begin(), allowed.end(),
                          [&](const char* a) { return key == a; });
    if (!ok) {
      throw Error(ErrorKind::ParseError,
                  source_name + ": unknown key '" + key + "' in " + where);
    }
  }
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::SubClassOf: return "SubClassOf";
    case Relation::DisjointWith: return "DisjointWith";
    case Relation::Synonym: return "Synonym";
    case Relation::NoRelation: return "NoRelation";
  }
  return "?";
}

std::string_view relation_token(Relation r) {
  switch (r) {
    case Relation::SubClassOf: return "<subclass_of>";
    case Relation::DisjointWith: return "<disjoint_with>";
    case Relation::Synonym: return "<synonym>";
    case Relation::NoRelation: return "<no_relation>";
  }
  return "?";
}

const Concept& Ontology::get(const ConceptId& cid) const {
  auto it = concepts.find(cid);
  if (it == concepts.end()) {
    throw Error(ErrorKind::UnknownConcept, "no concept '" + cid.value + "' in ontology '" + id + "'");
  }
  return it->second;
}

std::string qualify_id(const std::string& ontology_id, const std::string& local) {
  return ontology_id + "#" + local;
}

std::string local_id(const Ontology& o, const ConceptId& cid) {
  const std::string prefix = o.id + "#";
  if (cid.value.rfind(prefix, 0) == 0) return cid.value.substr(prefix.size());
  return cid.value;
}

OntologyFormat detect_format(const std::string& path) {
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == "obo" ? OntologyFormat::OboFlat : OntologyFormat::CanonicalJson;
}

Ontology load_ontology(const std::string& path, OntologyFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  return format == OntologyFormat::CanonicalJson ? parse_ontology_json(text, path)
                                                 : parse_ontology_obo(text, path);
}

Ontology parse_ontology_json(const std::string& text, const std::string& source_name) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ":" +
                                           std::to_string(line_of_offset(text, e.byte)) +
                                           " (offset " + std::to_string(e.byte) + "): " + e.what());
  }
  if (!doc.is_object()) {
    throw Error(ErrorKind::ParseError, source_name + ": top level must be an object");
  }
  reject_unknown_keys(doc, {"ontology_id", "concepts"}, "ontology object", source_name);
  if (!doc.contains("ontology_id") || !doc["ontology_id"].is_string()) {
    throw Error(ErrorKind::ParseError, source_name + ": missing string 'ontology_id'");
  }
  if (!doc.contains("concepts") || !doc["concepts"].is_array()) {
    throw Error(ErrorKind::ParseError, source_name + ": missing array 'concepts'");
  }

  std::vector<RawConcept> raw;
  for (const auto& jc : doc["concepts"]) {
    if (!jc.is_object()) {
      throw Error(ErrorKind::ParseError, source_name + ": concept entries must be objects");
    }
    reject_unknown_keys(jc, {"id", "labels", "description", "subclass_of", "disjoint_with"},
                        "concept object", source_name);
    RawConcept rc;
    if (!jc.contains("id") || !jc["id"].is_string()) {
      throw Error(ErrorKind::ParseError, source_name + ": concept missing string 'id'");
    }
    rc.id = jc["id"].get<std::string>();
    if (!jc.contains("labels") || !jc["labels"].is_array()) {
      throw Error(ErrorKind::ParseError, source_name + ": concept '" + rc.id + "' missing 'labels'");
    }
    for (const auto& l : jc["labels"]) {
      if (!l.is_string()) {
        throw Error(ErrorKind::ParseError, source_name + ": labels must be strings");
      }
      rc.labels.push_back(l.get<std::string>());
    }
    if (jc.contains("description")) {
      if (!jc["description"].is_string()) {
        throw Error(ErrorKind::ParseError, source_name + ": description must be a string");
      }
      rc.description = jc["description"].get<std::string>();
    }
    auto read_edges = [&](const char* key, std::vector<std::string>& into) {
      if (!jc.contains(key)) return;
      if (!jc[key].is_array()) {
        throw Error(ErrorKind::ParseError,
                    source_name + ": '" + key + "' must be an array of ids");
      }
      for (const auto& t : jc[key]) {
        if (!t.is_string()) {
          throw Error(ErrorKind::ParseError, source_name + ": edge targets must be strings");
        }
        into.push_back(t.get<std::string>());
      }
    };
    read_edges("subclass_of", rc.subclass_of);
    read_edges("disjoint_with", rc.disjoint_with);
    raw.push_back(std::move(rc));
  }
  return assemble(doc["ontology_id"].get<std::string>(), std::move(raw), source_name);
}

Ontology parse_ontology_obo(const std::string& text, const std::string& source_name) {
  std::vector<RawConcept> raw;
  std::string ontology_id;

  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool in_term = false;
  bool before_first_stanza = true;
  RawConcept current;

  auto flush = [&]() {
    if (!in_term) return;
    if (current.id.empty()) {
      throw Error(ErrorKind::ParseError,
                  source_name + ": [Term] stanza without an 'id:' tag");
    }
    raw.push_back(std::move(current));
    current = RawConcept{};
  };

  auto strip_comment = [](std::string v) {
    auto bang = v.find(" ! ");
    if (bang != std::string::npos) v = v.substr(0, bang);
    if (!v.empty() && v.back() == '!') v.pop_back();
    return trim(v);
  };

  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty() || t[0] == '!') continue;
    if (t[0] == '[') {
      flush();
      before_first_stanza = false;
      in_term = (t == "[Term]");
      continue;
    }
    auto colon = t.find(':');
    if (colon == std::string::npos) {
      throw Error(ErrorKind::ParseError,
                  source_name + ":" + std::to_string(lineno) + ": expected 'tag: value'");
    }
    std::string tag = trim(t.substr(0, colon));
    std::string value = trim(t.substr(colon + 1));

    if (before_first_stanza) {
      if (tag == "ontology") ontology_id = value;
      continue;  // other header tags ignored
    }
    if (!in_term) continue;

    if (tag == "id") {
      current.id = strip_comment(value);
    } else if (tag == "name") {
      // name is the primary label; keep it in front of any synonyms seen earlier
      current.labels.insert(current.labels.begin(), strip_comment(value));
    } else if (tag == "synonym") {
      std::string syn = value;
      if (!syn.empty() && syn.front() == '"') {
        auto close = syn.find('"', 1);
        if (close == std::string::npos) {
          throw Error(ErrorKind::ParseError,
                      source_name + ":" + std::to_string(lineno) + ": unterminated synonym quote");
        }
        syn = syn.substr(1, close - 1);
      } else {
        syn = strip_comment(syn);
      }
      current.labels.push_back(syn);
    } else if (tag == "is_a") {
      current.subclass_of.push_back(strip_comment(value));
    } else if (tag == "disjoint_from") {
      current.disjoint_with.push_back(strip_comment(value));
    }
    // unknown tags ignored
  }
  flush();

  if (ontology_id.empty()) {
    // fall back to the file stem
    std::string stem = source_name;
    auto slash = stem.find_last_of("/\\");
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    auto dot = stem.find_last_of('.');
    if (dot != std::string::npos) stem = stem.substr(0, dot);
    ontology_id = stem.empty() ? "obo" : stem;
  }
  return assemble(ontology_id, std::move(raw), source_name);
}

std::string serialize_ontology(const Ontology& o) {
  ordered_json doc;
  doc["ontology_id"] = o.id;
  doc["concepts"] = ordered_json::array();
  for (const auto& [cid, c] : o.concepts) {
    ordered_json jc;
    jc["id"] = local_id(o, cid);
    jc["labels"] = c.labels;
    if (c.description) jc["description"] = *c.description;
    if (!c.subclass_of.empty()) {
      ordered_json edges = ordered_json::array();
      for (const auto& t : c.subclass_of) edges.push_back(local_id(o, t));
      jc["subclass_of"] = edges;
    }
    if (!c.disjoint_with.empty()) {
      ordered_json edges = ordered_json::array();
      for (const auto& t : c.disjoint_with) edges.push_back(local_id(o, t));
      jc["disjoint_with"] = edges;
    }
    doc["concepts"].push_back(jc);
  }
  return doc.dump(2) + "\n";
}

}  // namespace laker
