#include "laker/eval.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace laker {

ReferenceFormat detect_reference_format(const std::string& path) {
  auto dot = path.find_last_of('.');
  std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
  return ext == "json" ? ReferenceFormat::Json : ReferenceFormat::Tsv;
}

ReferenceSet parse_reference_tsv(const std::string& text, const std::string& source_name) {
  ReferenceSet ref;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string src, tgt, rel;
    if (!std::getline(ls, src, '\t') || !std::getline(ls, tgt, '\t')) {
      throw Error(ErrorKind::ParseError,
                  source_name + ":" + std::to_string(lineno) + ": expected source<TAB>target");
    }
    if (!std::getline(ls, rel, '\t')) rel = "=";
    if (src.empty() || tgt.empty()) {
      throw Error(ErrorKind::ParseError,
                  source_name + ":" + std::to_string(lineno) + ": empty concept id");
    }
    if (rel != "=") {
      ++ref.skipped_non_equivalence;
      continue;
    }
    if (!ref.pairs.emplace(ConceptId{src}, ConceptId{tgt}).second) {
      ++ref.duplicates_collapsed;
    }
  }
  return ref;
}

ReferenceSet parse_reference_json(const std::string& text, const std::string& source_name) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ": " + e.what());
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::ParseError, source_name + ": expected a JSON array of pairs");
  }
  ReferenceSet ref;
  for (const auto& item : doc) {
    if (!item.is_object() || !item.contains("source") || !item.contains("target")) {
      throw Error(ErrorKind::ParseError, source_name + ": entries need source and target");
    }
    if (item.contains("relation") && item["relation"].get<std::string>() != "=") {
      ++ref.skipped_non_equivalence;
      continue;
    }
    std::string src = item["source"].get<std::string>();
    std::string tgt = item["target"].get<std::string>();
    if (!ref.pairs.emplace(ConceptId{src}, ConceptId{tgt}).second) {
      ++ref.duplicates_collapsed;
    }
  }
  return ref;
}

ReferenceSet load_reference(const std::string& path, ReferenceFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return format == ReferenceFormat::Tsv ? parse_reference_tsv(buf.str(), path)
                                        : parse_reference_json(buf.str(), path);
}

std::string reference_to_tsv(const ReferenceSet& ref) {
  std::ostringstream out;
  for (const auto& [src, tgt] : ref.pairs) {
    out << src.value << '\t' << tgt.value << "\t=\n";
  }
  return out.str();
}

void save_reference_tsv(const ReferenceSet& ref, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << reference_to_tsv(ref);
}

PrfResult compute_prf(const AlignmentSet& alignment, const ReferenceSet& reference) {
  PrfResult r;
  std::set<std::pair<ConceptId, ConceptId>> predicted;
  for (const auto& m : alignment.mappings) predicted.emplace(m.source, m.target);

  for (const auto& p : predicted) r.intersection += reference.pairs.count(p);

  r.empty_alignment = predicted.empty();
  r.empty_reference = reference.pairs.empty();
  r.precision = predicted.empty()
                    ? 0.0
                    : static_cast<double>(r.intersection) / static_cast<double>(predicted.size());
  r.recall = reference.pairs.empty() ? 0.0
                                     : static_cast<double>(r.intersection) /
                                           static_cast<double>(reference.pairs.size());
  r.f1 = (r.precision + r.recall) == 0.0
             ? 0.0
             : 2.0 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

}  // namespace laker
