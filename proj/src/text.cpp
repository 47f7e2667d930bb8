#include "laker/text.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace laker {

namespace {

using nlohmann::json;

constexpr const char* kSpecialNames[] = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"};
constexpr Relation kRelationOrder[] = {Relation::SubClassOf, Relation::DisjointWith,
                                       Relation::Synonym, Relation::NoRelation};

std::vector<std::string> reserved_tokens() {
  std::vector<std::string> out;
  for (const char* s : kSpecialNames) out.emplace_back(s);
  for (Relation r : kRelationOrder) out.emplace_back(relation_token(r));
  return out;
}

void append_text_tokens(std::vector<std::string>& into, const std::string& text) {
  for (auto& t : tokenize(text)) into.push_back(std::move(t));
}

struct Segment {
  std::vector<std::size_t> ids;
  bool masked = false;                  // single [MASK], atomic
  std::optional<std::size_t> target;    // mask target when tracked
};

// Assembles [CLS] seg [SEP] seg [SEP] ... [SEP]; shrinks unmasked text
// segments from their ends (down to one token) until the budget fits.
TokenSeq assemble(std::vector<Segment> segments, std::size_t max_len) {
  if (max_len < 2 + 2 * segments.size()) {
    throw Error(ErrorKind::ConfigError, "max_len too small for sequence skeleton");
  }
  auto total = [&]() {
    std::size_t n = 1;  // [CLS]
    for (const auto& s : segments) n += std::max<std::size_t>(s.ids.size(), s.masked ? 1 : 0) + 1;
    return n;
  };
  while (total() > max_len) {
    // trim the longest shrinkable segment, preferring later ones on ties
    std::size_t best = segments.size();
    std::size_t best_len = 1;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      if (segments[i].masked) continue;
      if (segments[i].ids.size() >= best_len) {
        best = i;
        best_len = segments[i].ids.size();
      }
    }
    if (best == segments.size() || best_len <= 1) break;  // nothing left to trim
    segments[best].ids.pop_back();
  }

  TokenSeq seq;
  seq.max_len = max_len;
  seq.ids.push_back(Vocab::kCls);
  for (const auto& s : segments) {
    if (s.masked) {
      if (s.target) seq.mask_slots.push_back({seq.ids.size(), *s.target});
      seq.ids.push_back(Vocab::kMask);
    } else {
      seq.ids.insert(seq.ids.end(), s.ids.begin(), s.ids.end());
    }
    seq.ids.push_back(Vocab::kSep);
  }
  return seq;
}

Segment text_segment(const std::string& text, const Vocab& vocab) {
  Segment s;
  for (const auto& t : tokenize(text)) s.ids.push_back(vocab.id_of(t));
  return s;
}

Segment token_segment(std::size_t id) {
  Segment s;
  s.ids.push_back(id);
  return s;
}

Segment mask_segment(std::optional<std::size_t> target) {
  Segment s;
  s.masked = true;
  s.target = target;
  return s;
}

}  // namespace

std::vector<std::string> tokenize(const std::string& label) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : label) {
    bool keep = std::isalnum(c) != 0 || c >= 0x80;
    if (keep) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t Vocab::id_of(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? kUnk : it->second;
}

std::size_t Vocab::relation_token_id(Relation r) const {
  switch (r) {
    case Relation::SubClassOf: return kFirstRelation + 0;
    case Relation::DisjointWith: return kFirstRelation + 1;
    case Relation::Synonym: return kFirstRelation + 2;
    case Relation::NoRelation: return kFirstRelation + 3;
  }
  throw Error(ErrorKind::ValidationError, "bad relation");
}

std::size_t ConceptVocab::index_of(const ConceptId& id) const {
  auto it = to_index.find(id.value);
  if (it == to_index.end()) {
    throw Error(ErrorKind::UnknownConcept, "concept '" + id.value + "' not in concept vocab");
  }
  return it->second;
}

std::pair<Vocab, ConceptVocab> build_vocabs(const Corpus& corpus,
                                            const std::vector<Ontology>& ontologies,
                                            std::size_t min_freq) {
  if (corpus.empty()) {
    throw Error(ErrorKind::EmptyCorpus, "cannot build vocabularies from an empty corpus");
  }

  std::map<std::string, std::size_t> freq;
  std::vector<std::string> scratch;
  auto count = [&](const std::string& text) {
    scratch.clear();
    append_text_tokens(scratch, text);
    for (const auto& t : scratch) ++freq[t];
  };
  for (const auto& mt : corpus.triplets) {
    count(mt.base.head_text);
    count(mt.base.tail_text);
  }
  for (const auto& p : corpus.paths) {
    for (const auto& el : p.concepts) count(el.label);
  }

  Vocab vocab;
  vocab.min_freq = min_freq;
  vocab.tokens = reserved_tokens();

  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  for (auto& [tok, n] : ranked) {
    if (n < min_freq) continue;
    vocab.tokens.push_back(tok);
  }
  for (std::size_t i = 0; i < vocab.tokens.size(); ++i) vocab.token_to_id[vocab.tokens[i]] = i;

  ConceptVocab cv;
  for (const auto& o : ontologies) {
    for (const auto& [cid, _] : o.concepts) {
      if (!cv.to_index.emplace(cid.value, cv.ids.size()).second) {
        throw Error(ErrorKind::ValidationError,
                    "concept id '" + cid.value + "' appears in more than one ontology");
      }
      cv.ids.push_back(cid);
    }
  }
  return {std::move(vocab), std::move(cv)};
}

TokenSeq verbalize_triplet(const MaskedTriplet& mt, TripletView view, const Vocab& vocab,
                           const ConceptVocab& concepts, std::size_t max_len) {
  std::vector<Segment> segs;
  switch (view) {
    case TripletView::TailMasked:
      segs.push_back(text_segment(mt.base.head_text, vocab));
      segs.push_back(token_segment(vocab.relation_token_id(mt.base.relation)));
      segs.push_back(mask_segment(concepts.index_of(mt.base.tail_id)));
      break;
    case TripletView::HeadRelMasked:
      segs.push_back(mask_segment(std::nullopt));
      segs.push_back(mask_segment(std::nullopt));
      segs.push_back(text_segment(mt.base.tail_text, vocab));
      break;
    case TripletView::RelMasked:
      segs.push_back(text_segment(mt.base.head_text, vocab));
      segs.push_back(mask_segment(vocab.relation_token_id(mt.relation_label)));
      segs.push_back(text_segment(mt.base.tail_text, vocab));
      break;
  }
  return assemble(std::move(segs), max_len);
}

namespace {

TokenSeq verbalize_path_impl(const Path& p, const std::vector<std::size_t>& masked_positions,
                             const std::vector<std::size_t>& targets, const Vocab& vocab,
                             std::size_t max_len) {
  auto is_masked = [&](std::size_t pos) {
    return std::find(masked_positions.begin(), masked_positions.end(), pos) !=
           masked_positions.end();
  };

  // Drop whole trailing hops that carry no mask until the skeleton fits.
  std::size_t keep = p.length();
  auto skeleton_cost = [&](std::size_t n_concepts) {
    std::size_t segs = 2 * n_concepts - 1;
    return 2 + 2 * segs;  // [CLS] + per-segment [SEP] + at least 1 token each
  };
  while (keep > 2 && skeleton_cost(keep) > max_len && !is_masked(keep - 1)) --keep;

  std::vector<Segment> segs;
  for (std::size_t i = 0; i < keep; ++i) {
    if (i > 0) segs.push_back(token_segment(vocab.relation_token_id(p.relations[i - 1])));
    if (is_masked(i)) {
      auto it = std::find(masked_positions.begin(), masked_positions.end(), i);
      std::size_t slot = static_cast<std::size_t>(it - masked_positions.begin());
      segs.push_back(mask_segment(targets.empty() ? std::optional<std::size_t>()
                                                  : std::optional<std::size_t>(targets[slot])));
    } else {
      segs.push_back(text_segment(p.concepts[i].label, vocab));
    }
  }
  return assemble(std::move(segs), max_len);
}

}  // namespace

TokenSeq verbalize_path(const Path& p, const Vocab& vocab, std::size_t max_len) {
  return verbalize_path_impl(p, {}, {}, vocab, max_len);
}

TokenSeq verbalize_masked_path(const MaskedPath& mp, const Vocab& vocab,
                               const ConceptVocab& concepts, std::size_t max_len) {
  std::vector<std::size_t> targets;
  for (const auto& t : mp.target_concepts) targets.push_back(concepts.index_of(t));
  return verbalize_path_impl(mp.base, mp.masked_positions, targets, vocab, max_len);
}

std::string vocab_to_string(const Vocab& v) {
  json specials;
  for (std::size_t i = 0; i < 5; ++i) specials[kSpecialNames[i]] = i;
  json relations;
  for (Relation r : kRelationOrder) relations[std::string(relation_token(r))] = v.relation_token_id(r);
  json header = {{"schema", "laker-vocab/1"},
                 {"specials", specials},
                 {"relations", relations},
                 {"min_freq", v.min_freq}};
  std::ostringstream out;
  out << header.dump() << "\n";
  for (const auto& t : v.tokens) out << t << "\n";
  return out.str();
}

Vocab vocab_from_string(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::ParseError, source_name + ": empty vocab file");
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ":1: " + e.what());
  }
  if (header.value("schema", "") != "laker-vocab/1") {
    throw Error(ErrorKind::ParseError, source_name + ": unsupported vocab schema");
  }
  Vocab v;
  v.min_freq = header.value("min_freq", 1u);
  while (std::getline(in, line)) v.tokens.push_back(line);
  auto reserved = reserved_tokens();
  if (v.tokens.size() < reserved.size() ||
      !std::equal(reserved.begin(), reserved.end(), v.tokens.begin())) {
    throw Error(ErrorKind::ParseError, source_name + ": reserved token block mismatch");
  }
  for (std::size_t i = 0; i < v.tokens.size(); ++i) v.token_to_id[v.tokens[i]] = i;
  return v;
}

void save_vocab(const Vocab& v, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << vocab_to_string(v);
}

Vocab load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return vocab_from_string(buf.str(), path);
}

std::string concept_vocab_to_string(const ConceptVocab& cv) {
  std::ostringstream out;
  out << json{{"schema", "laker-concepts/1"}}.dump() << "\n";
  for (const auto& id : cv.ids) out << id.value << "\n";
  return out.str();
}

ConceptVocab concept_vocab_from_string(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::ParseError, source_name + ": empty concept vocab file");
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ":1: " + e.what());
  }
  if (header.value("schema", "") != "laker-concepts/1") {
    throw Error(ErrorKind::ParseError, source_name + ": unsupported concept vocab schema");
  }
  ConceptVocab cv;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cv.to_index[line] = cv.ids.size();
    cv.ids.push_back(ConceptId{line});
  }
  return cv;
}

void save_concept_vocab(const ConceptVocab& cv, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << concept_vocab_to_string(cv);
}

ConceptVocab load_concept_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return concept_vocab_from_string(buf.str(), path);
}

}  // namespace laker
