#include "laker/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "laker/text.hpp"

namespace laker {

namespace {

using nlohmann::json;

// Stream tags for deriving independent per-item rng streams from one seed.
constexpr std::uint64_t kStreamPathExtract = 1ull << 40;
constexpr std::uint64_t kStreamNegTriplet = 2ull << 40;
constexpr std::uint64_t kStreamNegPath = 3ull << 40;
constexpr std::uint64_t kStreamMaskPath = 4ull << 40;

bool tokens_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& t : a)
    for (const auto& u : b)
      if (t == u) return true;
  return false;
}

std::vector<ConceptId> sorted_concept_ids(const Ontology& o) {
  std::vector<ConceptId> ids;
  ids.reserve(o.concepts.size());
  for (const auto& [cid, _] : o.concepts) ids.push_back(cid);
  return ids;  // map iteration is already sorted
}

std::vector<Triplet> make_negatives(const Triplet& base, const std::vector<ConceptId>& tails,
                                    const Ontology& o) {
  std::vector<Triplet> out;
  out.reserve(tails.size());
  for (const auto& tail : tails) {
    Triplet neg = base;
    neg.tail_id = tail;
    neg.tail_text = o.get(tail).primary_label();
    neg.polarity = Polarity::Negative;
    out.push_back(std::move(neg));
  }
  return out;
}

std::string relation_str(Relation r) { return std::string(relation_name(r)); }

Relation relation_from(const std::string& name, const std::string& where) {
  for (Relation r : {Relation::SubClassOf, Relation::DisjointWith, Relation::Synonym,
                     Relation::NoRelation}) {
    if (name == relation_name(r)) return r;
  }
  throw Error(ErrorKind::ParseError, where + ": unknown relation '" + name + "'");
}

json path_to_json(const Path& p) {
  json concepts = json::array();
  for (const auto& el : p.concepts) concepts.push_back({el.id.value, el.label});
  json relations = json::array();
  for (auto r : p.relations) relations.push_back(relation_str(r));
  return json{{"concepts", concepts}, {"relations", relations}};
}

Path path_from_json(const json& j, const std::string& where, Polarity polarity) {
  Path p;
  p.polarity = polarity;
  for (const auto& el : j.at("concepts")) {
    p.concepts.push_back({ConceptId{el.at(0).get<std::string>()}, el.at(1).get<std::string>()});
  }
  for (const auto& r : j.at("relations")) {
    p.relations.push_back(relation_from(r.get<std::string>(), where));
  }
  if (p.concepts.size() < 2 || p.relations.size() + 1 != p.concepts.size()) {
    throw Error(ErrorKind::ParseError, where + ": malformed path record");
  }
  return p;
}

}  // namespace

void CorpusConfig::validate() const {
  if (neg_per_pos < 1) throw Error(ErrorKind::ConfigError, "neg_per_pos must be >= 1");
  if (mask_count_path < 1) throw Error(ErrorKind::ConfigError, "mask_count_path must be >= 1");
  if (!(long_path_replace_frac > 0.0 && long_path_replace_frac < 1.0)) {
    throw Error(ErrorKind::ConfigError, "long_path_replace_frac must lie in (0, 1)");
  }
}

MaskedTriplet mask_triplet(const Triplet& t) {
  MaskedTriplet mt;
  mt.base = t;
  mt.relation_label = t.polarity == Polarity::Positive ? t.relation : Relation::NoRelation;
  return mt;
}

std::set<ConceptId> superclass_closure(const Ontology& o, const ConceptId& head) {
  std::set<ConceptId> closed = {head};
  std::vector<ConceptId> frontier = {head};
  while (!frontier.empty()) {
    ConceptId cur = frontier.back();
    frontier.pop_back();
    for (const auto& parent : o.get(cur).subclass_of) {
      if (closed.insert(parent).second) frontier.push_back(parent);
    }
  }
  return closed;
}

NegTripletResult gen_negative_triplets(const Triplet& t, const Ontology& o,
                                       const CorpusConfig& cfg, Rng& rng) {
  if (t.polarity != Polarity::Positive) {
    throw Error(ErrorKind::ValidationError, "negative sampling expects a positive triplet");
  }
  NegTripletResult result;
  result.requested = cfg.neg_per_pos;

  if (t.relation == Relation::SubClassOf || t.relation == Relation::DisjointWith) {
    std::set<ConceptId> excluded;
    if (t.relation == Relation::SubClassOf) {
      excluded = superclass_closure(o, t.head_id);
    } else {
      excluded.insert(t.head_id);
      const auto& partners = o.get(t.head_id).disjoint_with;
      excluded.insert(partners.begin(), partners.end());
    }
    std::vector<ConceptId> pool;
    for (const auto& cid : sorted_concept_ids(o)) {
      if (!excluded.count(cid)) pool.push_back(cid);
    }
    auto picks = rng.sample_indices(pool.size(), cfg.neg_per_pos);
    std::vector<ConceptId> tails;
    for (auto i : picks) tails.push_back(pool[i]);
    result.triplets = make_negatives(t, tails, o);
    return result;
  }

  if (t.relation == Relation::Synonym) {
    auto head_tokens = tokenize(t.head_text);
    const Concept& head = o.get(t.head_id);

    // Stage 1: the head's subclass neighborhood (children and siblings).
    std::set<ConceptId> neighborhood;
    for (const auto& [cid, c] : o.concepts) {
      for (const auto& parent : c.subclass_of) {
        if (parent == t.head_id) neighborhood.insert(cid);  // child
        for (const auto& hp : head.subclass_of) {
          if (parent == hp && cid != t.head_id) neighborhood.insert(cid);  // sibling
        }
      }
    }
    std::vector<ConceptId> pool(neighborhood.begin(), neighborhood.end());
    auto draw = rng.sample_indices(pool.size(), cfg.syn_candidate_pool);
    std::vector<ConceptId> survivors;
    for (auto i : draw) {
      if (!tokens_overlap(head_tokens, tokenize(o.get(pool[i]).primary_label()))) {
        survivors.push_back(pool[i]);
      }
    }
    std::vector<ConceptId> tails;
    if (survivors.size() > cfg.neg_per_pos) {
      for (auto i : rng.sample_indices(survivors.size(), cfg.neg_per_pos))
        tails.push_back(survivors[i]);
    } else {
      tails = survivors;
    }

    if (tails.size() < cfg.neg_per_pos) {
      // Stage 2: top up with zero-overlap concepts from the whole ontology.
      std::set<ConceptId> taken(tails.begin(), tails.end());
      taken.insert(t.head_id);
      std::vector<ConceptId> wide;
      for (const auto& cid : sorted_concept_ids(o)) {
        if (taken.count(cid)) continue;
        if (!tokens_overlap(head_tokens, tokenize(o.get(cid).primary_label()))) {
          wide.push_back(cid);
        }
      }
      auto extra = rng.sample_indices(wide.size(), cfg.neg_per_pos - tails.size());
      for (auto i : extra) tails.push_back(wide[i]);
    }
    result.triplets = make_negatives(t, tails, o);
    return result;
  }

  throw Error(ErrorKind::ValidationError, "cannot sample negatives for NoRelation");
}

Path gen_negative_path(const Path& p, const Ontology& o, const CorpusConfig& cfg, Rng& rng) {
  if (p.polarity != Polarity::Positive) {
    throw Error(ErrorKind::ValidationError, "negative path generation expects a positive path");
  }
  std::size_t len = p.length();
  std::size_t replace =
      len < cfg.short_path_threshold
          ? 1
          : std::max<std::size_t>(
                1, static_cast<std::size_t>(
                       std::ceil(cfg.long_path_replace_frac * static_cast<double>(len))));

  std::set<ConceptId> on_path;
  for (const auto& el : p.concepts) on_path.insert(el.id);
  std::vector<ConceptId> pool;
  for (const auto& [cid, _] : o.concepts) {
    if (!on_path.count(cid)) pool.push_back(cid);
  }
  if (pool.empty()) {
    throw Error(ErrorKind::InsufficientCandidates,
                "no off-path concepts available for path corruption");
  }

  Path neg = p;
  neg.polarity = Polarity::Negative;
  auto positions = rng.sample_indices(len, replace);
  for (auto pos : positions) {
    const ConceptId& pick = pool[rng.below(pool.size())];
    neg.concepts[pos] = {pick, o.get(pick).primary_label()};
  }
  return neg;
}

std::size_t path_mask_count(std::size_t path_length, const CorpusConfig& cfg) {
  std::size_t cap = std::min((path_length - 1) / 2, path_length - 1);
  return std::max<std::size_t>(1, std::min(cfg.mask_count_path, cap));
}

MaskedPath mask_path(const Path& p, const CorpusConfig& cfg, Rng& rng) {
  if (p.polarity != Polarity::Positive) {
    throw Error(ErrorKind::ValidationError, "only positive paths are masked");
  }
  std::size_t len = p.length();
  std::size_t k = path_mask_count(len, cfg);

  // Position 0 (the query concept) stays visible on paths longer than 2.
  std::vector<std::size_t> eligible;
  for (std::size_t i = (len > 2 ? 1 : 0); i < len; ++i) eligible.push_back(i);

  MaskedPath mp;
  mp.base = p;
  for (auto i : rng.sample_indices(eligible.size(), k)) {
    mp.masked_positions.push_back(eligible[i]);
  }
  std::sort(mp.masked_positions.begin(), mp.masked_positions.end());
  for (auto pos : mp.masked_positions) mp.target_concepts.push_back(p.concepts[pos].id);
  return mp;
}

Corpus build_corpus(const std::vector<Ontology>& ontologies, const CorpusConfig& cfg) {
  if (ontologies.empty()) {
    throw Error(ErrorKind::EmptyCorpus, "build_corpus needs at least one ontology");
  }
  cfg.validate();

  Corpus corpus;
  std::uint64_t triplet_counter = 0;
  std::vector<std::pair<const Ontology*, Path>> positive_paths;

  for (std::size_t oi = 0; oi < ontologies.size(); ++oi) {
    const Ontology& o = ontologies[oi];

    for (const auto& pos : extract_triplets(o)) {
      corpus.triplets.push_back(mask_triplet(pos));
      Rng rng = Rng::derive(cfg.seed, kStreamNegTriplet + triplet_counter);
      ++triplet_counter;
      auto negs = gen_negative_triplets(pos, o, cfg, rng);
      if (negs.shortfall()) {
        switch (pos.relation) {
          case Relation::SubClassOf: ++corpus.shortfalls.subclass; break;
          case Relation::DisjointWith: ++corpus.shortfalls.disjoint; break;
          case Relation::Synonym: ++corpus.shortfalls.synonym; break;
          case Relation::NoRelation: break;
        }
      }
      for (auto& n : negs.triplets) corpus.triplets.push_back(mask_triplet(n));
    }

    PathConfig pc = cfg.path;
    pc.seed = Rng::derive(cfg.seed, kStreamPathExtract + oi).next();
    auto extraction = extract_paths(o, pc);
    corpus.cycle_warnings += extraction.cycle_warnings;
    for (auto& p : extraction.paths) positive_paths.emplace_back(&o, std::move(p));
  }

  for (std::size_t pi = 0; pi < positive_paths.size(); ++pi) {
    const auto& [onto, pos] = positive_paths[pi];
    corpus.paths.push_back(pos);
    for (std::size_t j = 0; j < cfg.neg_per_pos; ++j) {
      Rng rng = Rng::derive(cfg.seed, kStreamNegPath + pi * cfg.neg_per_pos + j);
      try {
        corpus.paths.push_back(gen_negative_path(pos, *onto, cfg, rng));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::InsufficientCandidates) throw;
        ++corpus.shortfalls.paths;
      }
    }
    Rng rng = Rng::derive(cfg.seed, kStreamMaskPath + pi);
    corpus.masked_paths.push_back(mask_path(pos, cfg, rng));
  }

  return corpus;
}

std::string corpus_to_string(const Corpus& c) {
  std::ostringstream out;
  json header = {
      {"schema", "laker-corpus/1"},
      {"triplets", c.triplets.size()},
      {"paths", c.paths.size()},
      {"masked_paths", c.masked_paths.size()},
      {"shortfalls",
       {{"subclass", c.shortfalls.subclass},
        {"disjoint", c.shortfalls.disjoint},
        {"synonym", c.shortfalls.synonym},
        {"paths", c.shortfalls.paths}}},
      {"cycle_warnings", c.cycle_warnings},
  };
  out << header.dump() << "\n";

  for (const auto& mt : c.triplets) {
    json rec = {
        {"kind", "triplet"},
        {"polarity", mt.base.polarity == Polarity::Positive ? "pos" : "neg"},
        {"head", mt.base.head_text},
        {"rel", relation_str(mt.base.relation)},
        {"tail", mt.base.tail_text},
        {"head_id", mt.base.head_id.value},
        {"tail_id", mt.base.tail_id.value},
        {"label", relation_str(mt.relation_label)},
    };
    out << rec.dump() << "\n";
  }
  for (const auto& p : c.paths) {
    json rec = path_to_json(p);
    rec["kind"] = "path";
    rec["polarity"] = p.polarity == Polarity::Positive ? "pos" : "neg";
    out << rec.dump() << "\n";
  }
  for (const auto& mp : c.masked_paths) {
    json rec = path_to_json(mp.base);
    rec["kind"] = "masked_path";
    rec["mask_positions"] = mp.masked_positions;
    json targets = json::array();
    for (const auto& t : mp.target_concepts) targets.push_back(t.value);
    rec["targets"] = targets;
    out << rec.dump() << "\n";
  }
  return out.str();
}

Corpus corpus_from_string(const std::string& text, const std::string& source_name) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::ParseError, source_name + ": empty corpus file");
  }
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ParseError, source_name + ":1: " + e.what());
  }
  if (header.value("schema", "") != "laker-corpus/1") {
    throw Error(ErrorKind::ParseError, source_name + ": unsupported corpus schema");
  }

  Corpus c;
  c.shortfalls.subclass = header["shortfalls"].value("subclass", 0u);
  c.shortfalls.disjoint = header["shortfalls"].value("disjoint", 0u);
  c.shortfalls.synonym = header["shortfalls"].value("synonym", 0u);
  c.shortfalls.paths = header["shortfalls"].value("paths", 0u);
  c.cycle_warnings = header.value("cycle_warnings", 0u);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::string where = source_name + ":" + std::to_string(lineno);
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::ParseError, where + ": " + e.what());
    }
    std::string kind = rec.value("kind", "");
    if (kind == "triplet") {
      Triplet t;
      t.head_text = rec.at("head").get<std::string>();
      t.relation = relation_from(rec.at("rel").get<std::string>(), where);
      t.tail_text = rec.at("tail").get<std::string>();
      t.head_id = ConceptId{rec.at("head_id").get<std::string>()};
      t.tail_id = ConceptId{rec.at("tail_id").get<std::string>()};
      t.polarity = rec.at("polarity").get<std::string>() == "pos" ? Polarity::Positive
                                                                  : Polarity::Negative;
      MaskedTriplet mt;
      mt.base = std::move(t);
      mt.relation_label = relation_from(rec.at("label").get<std::string>(), where);
      c.triplets.push_back(std::move(mt));
    } else if (kind == "path") {
      Polarity pol = rec.at("polarity").get<std::string>() == "pos" ? Polarity::Positive
                                                                    : Polarity::Negative;
      c.paths.push_back(path_from_json(rec, where, pol));
    } else if (kind == "masked_path") {
      MaskedPath mp;
      mp.base = path_from_json(rec, where, Polarity::Positive);
      for (const auto& p : rec.at("mask_positions")) {
        mp.masked_positions.push_back(p.get<std::size_t>());
      }
      for (const auto& t : rec.at("targets")) {
        mp.target_concepts.push_back(ConceptId{t.get<std::string>()});
      }
      if (mp.masked_positions.size() != mp.target_concepts.size()) {
        throw Error(ErrorKind::ParseError, where + ": mask/target length mismatch");
      }
      c.masked_paths.push_back(std::move(mp));
    } else {
      throw Error(ErrorKind::ParseError, where + ": unknown record kind '" + kind + "'");
    }
  }
  return c;
}

void save_corpus(const Corpus& c, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << corpus_to_string(c);
}

Corpus load_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return corpus_from_string(buf.str(), path);
}

}  // namespace laker
