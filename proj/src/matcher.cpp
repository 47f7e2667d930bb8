#include "laker/matcher.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace laker {

namespace {

double clamp01(double x) { return std::max(0.0, std::min(1.0, x)); }

double jaccard(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() && b.empty()) return 0.0;
  std::set<std::string> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  std::size_t uni = sa.size() + sb.size() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / ((std::sqrt(na) + 1e-12) * (std::sqrt(nb) + 1e-12));
}

}  // namespace

CandidateSet predict_candidates(const ConceptId& c, const Ontology& source,
                                const ModelParams& params, const Vocab& vocab,
                                const ConceptVocab& concepts, std::size_t k,
                                std::size_t max_len) {
  if (!params.initialized()) {
    throw Error(ErrorKind::UntrainedModel, "matching requires trained parameters");
  }
  const Concept& query_concept = source.get(c);

  // Query: (label, <synonym>, [MASK]) — the same shape the synonym-hop and
  // triplet corpora train the concept head on.
  Triplet query{query_concept.primary_label(), Relation::Synonym, "", c, c, Polarity::Positive};
  MaskedTriplet mt = mask_triplet(query);

  NoGradGuard ng;
  auto seq = verbalize_triplet(mt, TripletView::TailMasked, vocab, concepts, max_len);
  Encoded enc = encode(seq, params);
  Tensor logits = predict_masked(enc, seq.mask_slots, PredictionHead::Concept, params);
  Tensor probs = softmax(logits);

  std::vector<std::size_t> order(concepts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    double pa = probs.at(a), pb = probs.at(b);
    if (pa != pb) return pa > pb;
    return concepts.id_of(a) < concepts.id_of(b);
  });

  CandidateSet cs;
  cs.source = c;
  for (std::size_t i = 0; i < std::min(k, order.size()); ++i) {
    cs.candidates.emplace_back(concepts.id_of(order[i]), probs.at(order[i]));
  }
  return cs;
}

GroundedCandidates ground_candidates(const CandidateSet& cs, const Ontology& target,
                                     std::size_t k, const std::string& source_label) {
  GroundedCandidates out;
  for (const auto& [cid, _] : cs.candidates) {
    if (target.contains(cid)) out.ids.push_back(cid);
  }
  if (!out.ids.empty()) return out;

  // Lexical fallback: top-k target concepts by label-token Jaccard overlap.
  out.lexical_fallback = true;
  auto src_tokens = tokenize(source_label);
  std::vector<std::pair<double, ConceptId>> ranked;
  for (const auto& [cid, c] : target.concepts) {
    ranked.emplace_back(jaccard(src_tokens, tokenize(c.primary_label())), cid);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
    out.ids.push_back(ranked[i].second);
  }
  return out;
}

ConceptFeatureCache::ConceptFeatureCache(const ModelParams& params, const Vocab& vocab,
                                         std::size_t max_len)
    : params_(params), vocab_(vocab), max_len_(max_len) {}

const std::vector<double>& ConceptFeatureCache::feature(const Concept& c) const {
  auto it = cache_.find(c.id);
  if (it != cache_.end()) return it->second;

  NoGradGuard ng;
  TokenSeq seq;
  seq.max_len = max_len_;
  seq.ids.push_back(Vocab::kCls);
  for (const auto& tok : tokenize(c.primary_label())) {
    if (seq.ids.size() + 2 > max_len_) break;
    seq.ids.push_back(vocab_.id_of(tok));
  }
  seq.ids.push_back(Vocab::kSep);
  Encoded enc = encode(seq, params_);
  return cache_.emplace(c.id, enc.feature.values()).first->second;
}

double fused_cosine(const std::vector<double>& f, const std::vector<double>& e,
                    const std::vector<double>& f_prime, const std::vector<double>& e_prime) {
  std::vector<double> u = f;
  u.insert(u.end(), e.begin(), e.end());
  std::vector<double> v = f_prime;
  v.insert(v.end(), e_prime.begin(), e_prime.end());
  if (u.size() != v.size()) {
    throw Error(ErrorKind::ShapeMismatch, "fused vectors differ in width");
  }
  return cosine(u, v);
}

double fuse_score(const Concept& c, const Concept& c_prime, const ConceptFeatureCache& features,
                  const TransEEmbeddings& transe, const ConceptVocab& concepts) {
  return fused_cosine(features.feature(c), embed_concept(c.id, transe, concepts),
                      features.feature(c_prime), embed_concept(c_prime.id, transe, concepts));
}

AlignmentSet select_mappings(std::vector<ScoredPair> pairs, double threshold, bool one_to_one) {
  for (auto& p : pairs) p.score = clamp01(p.score);

  auto by_score = [](const ScoredPair& a, const ScoredPair& b) {
    if (a.score != b.score) return a.score > b.score;
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  };
  std::sort(pairs.begin(), pairs.end(), by_score);

  AlignmentSet out;
  if (one_to_one) {
    std::set<ConceptId> used_sources, used_targets;
    for (const auto& p : pairs) {
      if (p.score < threshold) break;  // sorted: everything after is below too
      if (used_sources.count(p.source) || used_targets.count(p.target)) continue;
      used_sources.insert(p.source);
      used_targets.insert(p.target);
      out.mappings.push_back({p.source, p.target, p.score, p.lexical_fallback});
    }
  } else {
    std::set<ConceptId> seen;
    for (const auto& p : pairs) {
      if (p.score < threshold) break;
      if (!seen.insert(p.source).second) continue;  // first hit is the argmax
      out.mappings.push_back({p.source, p.target, p.score, p.lexical_fallback});
    }
  }
  std::sort(out.mappings.begin(), out.mappings.end(), [](const Mapping& a, const Mapping& b) {
    return std::tie(a.source, a.target) < std::tie(b.source, b.target);
  });
  return out;
}

std::size_t effective_thread_count(std::size_t requested) {
  std::size_t n = requested;
  if (n == 0) {
    n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  }
  if (const char* env = std::getenv("LAKER_THREADS")) {
    char* end = nullptr;
    unsigned long cap = std::strtoul(env, &end, 10);
    if (end != env && cap > 0) n = std::min<std::size_t>(n, cap);
  }
  return std::max<std::size_t>(1, n);
}

MatchOutput run_matching(const Ontology& source, const Ontology& target,
                         const ModelParams& params, const Vocab& vocab,
                         const ConceptVocab& concepts, const TransEEmbeddings& transe,
                         const MatchOptions& options) {
  auto t0 = std::chrono::steady_clock::now();

  std::vector<const Concept*> sources;
  for (const auto& [_, c] : source.concepts) sources.push_back(&c);

  ConceptFeatureCache features(params, vocab, options.max_len_triplet);

  // Pre-warm the feature cache serially; scoring then reads it concurrently.
  for (const auto& [_, c] : source.concepts) features.feature(c);
  for (const auto& [_, c] : target.concepts) features.feature(c);

  std::vector<std::vector<ScoredPair>> per_source(sources.size());
  std::size_t threads = std::min(effective_thread_count(options.threads), sources.size());

  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Concept& c = *sources[i];
      CandidateSet cands =
          predict_candidates(c.id, source, params, vocab, concepts, options.k,
                             options.max_len_triplet);
      GroundedCandidates grounded =
          ground_candidates(cands, target, options.k, c.primary_label());
      for (const auto& tid : grounded.ids) {
        double cos = fuse_score(c, target.get(tid), features, transe, concepts);
        per_source[i].push_back({c.id, tid, cos, grounded.lexical_fallback});
      }
    }
  };

  if (threads <= 1) {
    worker(0, sources.size());
  } else {
    std::vector<std::thread> pool;
    std::size_t chunk = (sources.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      std::size_t begin = t * chunk;
      std::size_t end = std::min(sources.size(), begin + chunk);
      if (begin >= end) break;
      pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  MatchOutput out;
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < per_source.size(); ++i) {
    if (!per_source[i].empty() && per_source[i].front().lexical_fallback) ++out.fallback_sources;
    pairs.insert(pairs.end(), per_source[i].begin(), per_source[i].end());
  }
  out.scored_pairs = pairs.size();
  out.alignment = select_mappings(std::move(pairs), options.threshold, options.one_to_one);
  out.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::string alignment_to_tsv(const AlignmentSet& alignment) {
  std::ostringstream out;
  for (const auto& m : alignment.mappings) {
    char score[32];
    std::snprintf(score, sizeof(score), "%.6f", m.score);
    out << m.source.value << '\t' << m.target.value << "\t=\t" << score << '\t'
        << (m.lexical_fallback ? "lexical_fallback" : "-") << '\n';
  }
  return out.str();
}

AlignmentSet alignment_from_tsv(const std::string& text, const std::string& source_name) {
  AlignmentSet out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string src, tgt, rel, score, flags;
    if (!std::getline(ls, src, '\t') || !std::getline(ls, tgt, '\t') ||
        !std::getline(ls, rel, '\t') || !std::getline(ls, score, '\t')) {
      throw Error(ErrorKind::ParseError,
                  source_name + ":" + std::to_string(lineno) + ": expected 4+ tab-separated fields");
    }
    std::getline(ls, flags, '\t');
    Mapping m;
    m.source = ConceptId{src};
    m.target = ConceptId{tgt};
    try {
      m.score = std::stod(score);
    } catch (const std::exception&) {
      throw Error(ErrorKind::ParseError,
                  source_name + ":" + std::to_string(lineno) + ": bad score '" + score + "'");
    }
    m.lexical_fallback = flags == "lexical_fallback";
    out.mappings.push_back(std::move(m));
  }
  return out;
}

void save_alignment_tsv(const AlignmentSet& alignment, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << alignment_to_tsv(alignment);
}

AlignmentSet load_alignment_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return alignment_from_tsv(buf.str(), path);
}

std::string alignment_to_json(const AlignmentSet& alignment, const AlignmentRunMeta& meta) {
  nlohmann::ordered_json doc;
  doc["meta"] = {{"checkpoint_hash", meta.checkpoint_hash},
                 {"k", meta.k},
                 {"threshold", meta.threshold},
                 {"seed", meta.seed},
                 {"elapsed_seconds", meta.elapsed_seconds}};
  doc["mappings"] = nlohmann::ordered_json::array();
  for (const auto& m : alignment.mappings) {
    doc["mappings"].push_back({{"source", m.source.value},
                               {"target", m.target.value},
                               {"relation", "="},
                               {"score", m.score},
                               {"lexical_fallback", m.lexical_fallback}});
  }
  return doc.dump(2) + "\n";
}

void save_alignment_json(const AlignmentSet& alignment, const AlignmentRunMeta& meta,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << alignment_to_json(alignment, meta);
}

}  // namespace laker
