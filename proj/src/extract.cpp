#include "laker/extract.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "laker/rng.hpp"

namespace laker {

std::vector<Triplet> extract_triplets(const Ontology& o) {
  std::vector<Triplet> out;
  for (const auto& [cid, c] : o.concepts) {
    for (const auto& parent : c.subclass_of) {
      out.push_back({c.primary_label(), Relation::SubClassOf,
                     o.get(parent).primary_label(), cid, parent, Polarity::Positive});
    }
    for (const auto& partner : c.disjoint_with) {
      out.push_back({c.primary_label(), Relation::DisjointWith,
                     o.get(partner).primary_label(), cid, partner, Polarity::Positive});
    }
    for (std::size_t i = 1; i < c.labels.size(); ++i) {
      out.push_back({c.primary_label(), Relation::Synonym, c.labels[i], cid, cid,
                     Polarity::Positive});
    }
  }
  std::sort(out.begin(), out.end(), [](const Triplet& a, const Triplet& b) {
    return std::tie(a.head_id, a.relation, a.tail_text, a.tail_id) <
           std::tie(b.head_id, b.relation, b.tail_text, b.tail_id);
  });
  return out;
}

PathExtraction extract_paths(const Ontology& o, const PathConfig& cfg) {
  PathExtraction result;
  if (cfg.max_len < 2 || cfg.max_per_concept < 1) {
    throw Error(ErrorKind::ConfigError, "extract_paths requires max_len >= 2 and max_per_concept >= 1");
  }

  // Downward adjacency (parent -> children), sorted for determinism.
  std::map<ConceptId, std::vector<ConceptId>> children;
  for (const auto& [cid, c] : o.concepts) {
    for (const auto& parent : c.subclass_of) children[parent].push_back(cid);
  }
  for (auto& [_, kids] : children) std::sort(kids.begin(), kids.end());

  // Enumerate root-to-concept chains; stored root-first, emitted terminal-first.
  std::vector<std::vector<ConceptId>> chains;
  std::map<ConceptId, std::size_t> per_terminal;

  std::vector<ConceptId> current;
  std::set<ConceptId> on_path;

  auto dfs = [&](auto&& self, const ConceptId& node) -> void {
    auto it = children.find(node);
    if (it == children.end()) return;
    for (const auto& child : it->second) {
      if (on_path.count(child)) {
        ++result.cycle_warnings;  // truncate at first revisit
        continue;
      }
      current.push_back(child);
      on_path.insert(child);
      if (per_terminal[child] < cfg.max_per_concept) {
        chains.push_back(current);
        ++per_terminal[child];
      }
      if (current.size() < cfg.max_len) self(self, child);
      on_path.erase(child);
      current.pop_back();
    }
  };

  for (const auto& root : o.roots) {
    current = {root};
    on_path = {root};
    dfs(dfs, root);
  }

  for (std::size_t i = 0; i < chains.size(); ++i) {
    Rng rng = Rng::derive(cfg.seed, i);
    const auto& chain = chains[i];

    Path p;
    p.polarity = Polarity::Positive;
    // terminal-first order: walk the chain from the deep end up to the root
    const Concept& terminal = o.get(chain.back());
    p.concepts.push_back({terminal.id, terminal.primary_label()});
    for (std::size_t j = chain.size() - 1; j > 0; --j) {
      const Concept& up = o.get(chain[j - 1]);
      p.relations.push_back(Relation::SubClassOf);
      p.concepts.push_back({up.id, up.primary_label()});
      if (up.has_synonym() && p.concepts.size() < cfg.max_len && rng.bernoulli(cfg.p_syn)) {
        std::size_t pick = 1 + static_cast<std::size_t>(rng.below(up.labels.size() - 1));
        p.relations.push_back(Relation::Synonym);
        p.concepts.push_back({up.id, up.labels[pick]});
      }
    }
    result.paths.push_back(std::move(p));
  }
  return result;
}

CorpusStats stats(const Ontology& o, const std::vector<Triplet>& triplets,
                  const std::vector<Path>& paths) {
  CorpusStats s;
  s.concepts = o.concepts.size();
  for (const auto& t : triplets) {
    switch (t.relation) {
      case Relation::SubClassOf: ++s.subclass_triplets; break;
      case Relation::DisjointWith: ++s.disjoint_triplets; break;
      case Relation::Synonym: ++s.synonym_triplets; break;
      case Relation::NoRelation: break;
    }
  }
  s.paths = paths.size();
  if (!paths.empty()) {
    double total = 0.0;
    for (const auto& p : paths) total += static_cast<double>(p.length());
    s.avg_path_len = total / static_cast<double>(paths.size());
  }
  return s;
}

std::string format_stats_table(const std::vector<StatsRow>& rows) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %10s %10s %10s %8s %12s\n", "Ontology", "#Concepts",
                "subclass", "synonym", "#Paths", "Avg. length");
  out << buf;
  for (const auto& row : rows) {
    const auto& s = row.stats;
    std::string avg = "-";
    std::string paths = s.paths == 0 ? "-" : std::to_string(s.paths);
    if (s.avg_path_len) {
      char a[32];
      std::snprintf(a, sizeof(a), "%.2f", *s.avg_path_len);
      avg = a;
    }
    std::snprintf(buf, sizeof(buf), "%-16s %10zu %10zu %10zu %8s %12s\n", row.ontology.c_str(),
                  s.concepts, s.subclass_triplets, s.synonym_triplets, paths.c_str(),
                  avg.c_str());
    out << buf;
  }
  return out.str();
}

}  // namespace laker
