#include "laker/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "laker/rng.hpp"

namespace laker {

namespace {

using nlohmann::ordered_json;

const char* kPoolA[] = {
    "renal",    "hepatic",  "cardiac",  "gastric",   "neural",    "dermal",
    "osseous",  "vascular", "lymphoid", "bronchial", "ocular",    "adrenal",
    "cortical", "spinal",   "biliary",  "pleural",   "thyroid",   "mucosal",
    "arterial", "venous",   "synovial", "alveolar",  "glomerular", "pancreatic",
    "splenic",  "thymic",   "uterine",  "prostatic", "retinal",   "cochlear"};

const char* kPoolB[] = {
    "fibrosis",  "stenosis",   "atrophy",   "dysplasia", "necrosis",  "edema",
    "sclerosis", "hyperplasia", "carcinoma", "adenoma",   "cyst",      "abscess",
    "ulcer",     "polyp",      "lesion",    "rupture",   "occlusion", "prolapse",
    "ischemia",  "infarction", "neuropathy", "myopathy",  "aneurysm",  "embolism",
    "thrombosis", "granuloma", "papilloma", "sarcoma",   "melanoma",  "lymphoma",
    "neoplasm",  "teratoma",   "hamartoma", "angioma"};

const char* kModifiers[] = {"chronic", "acute",  "primary", "secondary", "benign",
                            "diffuse", "focal",  "severe",  "mild",      "recurrent",
                            "juvenile", "adult", "familial", "idiopathic"};

const char* kQualifiers[] = {"disorder", "disease", "syndrome", "anomaly", "defect",
                             "malformation", "condition", "abnormality", "variant", "type"};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], Rng& rng) {
  return arr[rng.below(N)];
}

struct SynthConcept {
  std::string local_id;
  std::vector<std::string> labels;
  std::vector<std::string> parents;
  std::vector<std::string> disjoint;
};

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

Ontology to_ontology(const std::string& id, const std::vector<SynthConcept>& concepts) {
  ordered_json doc;
  doc["ontology_id"] = id;
  doc["concepts"] = ordered_json::array();
  for (const auto& c : concepts) {
    ordered_json jc;
    jc["id"] = c.local_id;
    jc["labels"] = c.labels;
    if (!c.parents.empty()) jc["subclass_of"] = c.parents;
    if (!c.disjoint.empty()) jc["disjoint_with"] = c.disjoint;
    doc["concepts"].push_back(jc);
  }
  return parse_ontology_json(doc.dump(), "<synthetic:" + id + ">");
}

std::vector<SynthConcept> build_source_concepts(const SynthConfig& cfg, Rng& rng) {
  constexpr std::size_t nA = sizeof(kPoolA) / sizeof(kPoolA[0]);
  constexpr std::size_t nB = sizeof(kPoolB) / sizeof(kPoolB[0]);
  if (cfg.n_concepts > nA * nB) {
    throw Error(ErrorKind::ConfigError, "n_concepts exceeds the distinct label pool");
  }

  // Unique core token pair per concept keeps labels separable.
  std::vector<std::size_t> pair_order(nA * nB);
  for (std::size_t i = 0; i < pair_order.size(); ++i) pair_order[i] = i;
  rng.shuffle(pair_order);

  std::vector<SynthConcept> concepts(cfg.n_concepts);
  for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
    const std::string core_a = kPoolA[pair_order[i] / nB];
    const std::string core_b = kPoolB[pair_order[i] % nB];
    SynthConcept& c = concepts[i];
    char buf[16];
    std::snprintf(buf, sizeof(buf), "c%04zu", i);
    c.local_id = buf;

    std::vector<std::string> primary;
    if (rng.bernoulli(0.5)) primary.push_back(pick(kModifiers, rng));
    primary.push_back(core_a);
    primary.push_back(core_b);
    if (rng.bernoulli(0.5)) primary.push_back(pick(kQualifiers, rng));
    c.labels.push_back(join(primary));

    if (rng.bernoulli(cfg.synonym_rate)) {
      std::vector<std::string> alt = {core_a, core_b, pick(kQualifiers, rng)};
      if (join(alt) != c.labels[0]) c.labels.push_back(join(alt));
      if (rng.bernoulli(cfg.second_synonym_rate)) {
        std::vector<std::string> alt2 = {pick(kModifiers, rng), core_a, core_b};
        std::string s = join(alt2);
        if (std::find(c.labels.begin(), c.labels.end(), s) == c.labels.end()) {
          c.labels.push_back(s);
        }
      }
    }

    if (i >= 2) {  // two roots, everything else attached below an earlier concept
      std::size_t parent = rng.below(i);
      c.parents.push_back(concepts[parent].local_id);
      if (rng.bernoulli(cfg.extra_parent_rate)) {
        std::size_t extra = rng.below(i);
        if (extra != parent) c.parents.push_back(concepts[extra].local_id);
      }
    }
  }

  for (std::size_t i = 0; i < cfg.n_concepts; ++i) {
    if (concepts[i].parents.empty()) continue;
    if (!rng.bernoulli(cfg.disjoint_rate)) continue;
    std::size_t other = rng.below(cfg.n_concepts);
    if (other == i) continue;
    const auto& po = concepts[i].parents;
    if (std::find(po.begin(), po.end(), concepts[other].local_id) != po.end()) continue;
    concepts[i].disjoint.push_back(concepts[other].local_id);
  }
  return concepts;
}

void perturb_label(std::vector<std::string>& tokens, const SynthConfig& cfg, Rng& rng) {
  if (tokens.size() >= 2 && rng.bernoulli(cfg.token_reorder_rate)) {
    std::size_t i = rng.below(tokens.size() - 1);
    std::swap(tokens[i], tokens[i + 1]);
  }
  if (tokens.size() >= 3 && rng.bernoulli(cfg.token_drop_rate)) {
    tokens.erase(tokens.begin() + static_cast<std::ptrdiff_t>(rng.below(tokens.size())));
  }
}

}  // namespace

void SynthConfig::validate() const {
  if (n_concepts < 10) {
    throw Error(ErrorKind::ConfigError, "synthetic pairs need n_concepts >= 10");
  }
  if (source_id == target_id) {
    throw Error(ErrorKind::ConfigError, "source and target ontology ids must differ");
  }
}

SynthPair gen_synthetic_pair(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng = Rng::derive(cfg.seed, 0xA11CE);
  auto source_concepts = build_source_concepts(cfg, rng);

  // Exact-count deletion keeps |gold| deterministic for a given rate.
  std::size_t n = cfg.n_concepts;
  std::size_t delete_count =
      static_cast<std::size_t>(std::llround(cfg.concept_deletion_rate * static_cast<double>(n)));
  std::set<std::size_t> deleted;
  for (auto i : rng.sample_indices(n, delete_count)) deleted.insert(i);

  // Fresh ids in shuffled order so numbering carries no signal.
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i) {
    if (!deleted.count(i)) order.push_back(i);
  }
  rng.shuffle(order);
  std::map<std::size_t, std::string> new_id;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "t%04zu", rank);
    new_id[order[rank]] = buf;
  }

  std::map<std::string, std::size_t> index_of_local;
  for (std::size_t i = 0; i < n; ++i) index_of_local[source_concepts[i].local_id] = i;

  // Splice deleted concepts out of the hierarchy: children inherit the
  // nearest surviving ancestors.
  std::map<std::size_t, std::vector<std::string>> resolved;
  auto resolve_parents = [&](auto&& self, std::size_t idx) -> std::vector<std::string> {
    auto it = resolved.find(idx);
    if (it != resolved.end()) return it->second;
    std::vector<std::string> out;
    for (const auto& parent_local : source_concepts[idx].parents) {
      std::size_t pidx = index_of_local.at(parent_local);
      if (deleted.count(pidx)) {
        auto up = self(self, pidx);
        out.insert(out.end(), up.begin(), up.end());
      } else {
        out.push_back(new_id.at(pidx));
      }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    resolved[idx] = out;
    return out;
  };

  std::vector<SynthConcept> target_concepts;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    std::size_t idx = order[rank];
    const SynthConcept& src = source_concepts[idx];
    SynthConcept tgt;
    tgt.local_id = new_id.at(idx);

    std::vector<std::string> labels = src.labels;
    if (labels.size() > 1 && rng.bernoulli(cfg.swap_primary_rate)) {
      std::size_t pickidx = 1 + rng.below(labels.size() - 1);
      std::swap(labels[0], labels[pickidx]);
    }
    if (labels.size() > 2 && rng.bernoulli(cfg.synonym_drop_rate)) {
      labels.pop_back();
    }
    std::set<std::string> seen;
    for (auto& label : labels) {
      auto tokens = split(label);
      perturb_label(tokens, cfg, rng);
      std::string out = join(tokens);
      if (!out.empty() && seen.insert(out).second) tgt.labels.push_back(out);
    }
    if (tgt.labels.empty()) tgt.labels.push_back(src.labels[0]);

    tgt.parents = resolve_parents(resolve_parents, idx);
    for (const auto& dj : src.disjoint) {
      std::size_t didx = index_of_local.at(dj);
      if (!deleted.count(didx)) tgt.disjoint.push_back(new_id.at(didx));
    }
    // self-loops can appear if a disjoint partner was spliced onto itself
    std::erase(tgt.disjoint, tgt.local_id);
    target_concepts.push_back(std::move(tgt));
  }

  SynthPair pair;
  pair.source = to_ontology(cfg.source_id, source_concepts);
  pair.target = to_ontology(cfg.target_id, target_concepts);
  for (std::size_t i = 0; i < n; ++i) {
    if (deleted.count(i)) continue;
    pair.gold.pairs.emplace(ConceptId{qualify_id(cfg.source_id, source_concepts[i].local_id)},
                            ConceptId{qualify_id(cfg.target_id, new_id.at(i))});
  }
  return pair;
}

Ontology gen_synthetic_ontology(std::size_t n_concepts, std::uint64_t seed,
                                const std::string& ontology_id) {
  SynthConfig cfg;
  cfg.n_concepts = n_concepts;
  cfg.seed = seed;
  cfg.source_id = ontology_id;
  cfg.validate();
  Rng rng = Rng::derive(seed, 0xA11CE);
  return to_ontology(ontology_id, build_source_concepts(cfg, rng));
}

}  // namespace laker
