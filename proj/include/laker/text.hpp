#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "laker/corpus.hpp"

namespace laker {

// Case-folds and splits on whitespace/punctuation; punctuation is dropped.
std::vector<std::string> tokenize(const std::string& label);

// Word-level vocabulary. Indices 0..4 are the specials, then one reserved
// token per relation kind, then corpus tokens ordered by descending frequency
// (ties lexicographic).
struct Vocab {
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;
  static constexpr std::size_t kCls = 2;
  static constexpr std::size_t kSep = 3;
  static constexpr std::size_t kMask = 4;
  static constexpr std::size_t kFirstRelation = 5;

  std::vector<std::string> tokens;
  std::unordered_map<std::string, std::size_t> token_to_id;
  std::size_t min_freq = 1;

  std::size_t size() const { return tokens.size(); }
  std::size_t id_of(const std::string& token) const;  // [UNK] when absent
  std::size_t relation_token_id(Relation r) const;
  const std::string& token(std::size_t id) const { return tokens.at(id); }
};

struct ConceptVocab {
  std::vector<ConceptId> ids;  // dense index -> globally-qualified id
  std::unordered_map<std::string, std::size_t> to_index;

  std::size_t size() const { return ids.size(); }
  bool contains(const ConceptId& id) const { return to_index.count(id.value) > 0; }
  std::size_t index_of(const ConceptId& id) const;  // throws UnknownConcept
  const ConceptId& id_of(std::size_t index) const { return ids.at(index); }
};

std::pair<Vocab, ConceptVocab> build_vocabs(const Corpus& corpus,
                                            const std::vector<Ontology>& ontologies,
                                            std::size_t min_freq);

struct MaskSlot {
  std::size_t position;  // index into TokenSeq.ids, always a [MASK]
  std::size_t target;    // concept index (ConceptHead) or token id (RelationHead)
};

struct TokenSeq {
  std::vector<std::size_t> ids;
  std::vector<MaskSlot> mask_slots;
  std::size_t max_len = 0;
};

// Layout: [CLS] head [SEP] rel [SEP] tail [SEP], masked fields as one [MASK].
// Over-long sequences lose text tokens from segment ends, never a [MASK].
TokenSeq verbalize_triplet(const MaskedTriplet& mt, TripletView view, const Vocab& vocab,
                           const ConceptVocab& concepts, std::size_t max_len = 64);

// Layout: [CLS] c0 [SEP] rel0 [SEP] c1 [SEP] ... [SEP]. Over-long paths drop
// whole trailing hops first (never one carrying a mask).
TokenSeq verbalize_path(const Path& p, const Vocab& vocab, std::size_t max_len = 160);
TokenSeq verbalize_masked_path(const MaskedPath& mp, const Vocab& vocab,
                               const ConceptVocab& concepts, std::size_t max_len = 160);

// Ordered token list, one per line; line 1 is a JSON schema header.
std::string vocab_to_string(const Vocab& v);
Vocab vocab_from_string(const std::string& text, const std::string& source_name);
void save_vocab(const Vocab& v, const std::string& path);
Vocab load_vocab(const std::string& path);

std::string concept_vocab_to_string(const ConceptVocab& cv);
ConceptVocab concept_vocab_from_string(const std::string& text, const std::string& source_name);
void save_concept_vocab(const ConceptVocab& cv, const std::string& path);
ConceptVocab load_concept_vocab(const std::string& path);

}  // namespace laker
