#include <doctest.h>

#include "laker/synthetic.hpp"
#include "laker/text.hpp"

using namespace laker;

namespace {

Corpus small_corpus() {
  Ontology o = parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["sarcoma"]},
    {"id":"B","labels":["angiosarcoma","hemangiosarcoma"],"subclass_of":["A"]},
    {"id":"C","labels":["liver lesion"],"subclass_of":["B"]}]})",
                                   "<mem>");
  CorpusConfig cfg;
  cfg.seed = 9;
  return build_corpus({o}, cfg);
}

std::vector<Ontology> small_ontologies() {
  return {parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["sarcoma"]},
    {"id":"B","labels":["angiosarcoma","hemangiosarcoma"],"subclass_of":["A"]},
    {"id":"C","labels":["liver lesion"],"subclass_of":["B"]}]})",
                              "<mem>")};
}

}  // namespace

TEST_CASE("tokenize folds case and strips punctuation") {
  CHECK(tokenize("Angiosarcoma of the liver") ==
        std::vector<std::string>{"angiosarcoma", "of", "the", "liver"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("b-cell, (acute)") == std::vector<std::string>{"b", "cell", "acute"});

  auto first = tokenize("first lumbrical muscle of the foot");
  auto second = tokenize("second lumbrical muscle of the foot");
  REQUIRE(first.size() == second.size());
  std::size_t diff = 0;
  for (std::size_t i = 0; i < first.size(); ++i) diff += first[i] != second[i];
  CHECK(diff == 1);
}

TEST_CASE("vocab reserves specials and relation tokens at fixed indices") {
  auto [vocab, concepts] = build_vocabs(small_corpus(), small_ontologies(), 1);
  CHECK(vocab.tokens[Vocab::kPad] == "[PAD]");
  CHECK(vocab.tokens[Vocab::kUnk] == "[UNK]");
  CHECK(vocab.tokens[Vocab::kCls] == "[CLS]");
  CHECK(vocab.tokens[Vocab::kSep] == "[SEP]");
  CHECK(vocab.tokens[Vocab::kMask] == "[MASK]");
  CHECK(vocab.tokens[vocab.relation_token_id(Relation::SubClassOf)] == "<subclass_of>");
  CHECK(vocab.tokens[vocab.relation_token_id(Relation::NoRelation)] == "<no_relation>");
  CHECK(vocab.id_of("angiosarcoma") >= Vocab::kFirstRelation + kRelationCount);
  CHECK(concepts.size() == 3);
}

TEST_CASE("min_freq filters tokens to [UNK]") {
  auto [vocab, _] = build_vocabs(small_corpus(), small_ontologies(), 1);
  CHECK(vocab.id_of("sarcoma") != Vocab::kUnk);

  auto [rare, __] = build_vocabs(small_corpus(), small_ontologies(), 1000);
  CHECK(rare.id_of("sarcoma") == Vocab::kUnk);
}

TEST_CASE("vocab building is deterministic across rebuilds") {
  auto [a, ca] = build_vocabs(small_corpus(), small_ontologies(), 1);
  auto [b, cb] = build_vocabs(small_corpus(), small_ontologies(), 1);
  CHECK(a.tokens == b.tokens);
  CHECK(ca.ids.size() == cb.ids.size());
  for (std::size_t i = 0; i < ca.ids.size(); ++i) CHECK(ca.ids[i] == cb.ids[i]);
}

TEST_CASE("empty corpus is rejected") {
  Corpus empty;
  CHECK_THROWS_AS(build_vocabs(empty, small_ontologies(), 1), Error);
}

TEST_CASE("triplet views render the documented layouts") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);

  const MaskedTriplet* synonym = nullptr;
  for (const auto& mt : corpus.triplets) {
    if (mt.base.relation == Relation::Synonym && mt.base.polarity == Polarity::Positive) {
      synonym = &mt;
    }
  }
  REQUIRE(synonym != nullptr);

  SUBCASE("view A masks the tail and records the tail concept") {
    TokenSeq seq = verbalize_triplet(*synonym, TripletView::TailMasked, vocab, concepts);
    // [CLS] angiosarcoma [SEP] <synonym> [SEP] [MASK] [SEP]
    REQUIRE(seq.ids.size() == 7);
    CHECK(seq.ids[0] == Vocab::kCls);
    CHECK(seq.ids[1] == vocab.id_of("angiosarcoma"));
    CHECK(seq.ids[2] == Vocab::kSep);
    CHECK(seq.ids[3] == vocab.relation_token_id(Relation::Synonym));
    CHECK(seq.ids[5] == Vocab::kMask);
    CHECK(seq.ids[6] == Vocab::kSep);
    REQUIRE(seq.mask_slots.size() == 1);
    CHECK(seq.mask_slots[0].position == 5);
    CHECK(seq.mask_slots[0].target == concepts.index_of(synonym->base.tail_id));
  }

  SUBCASE("view B masks head and relation") {
    TokenSeq seq = verbalize_triplet(*synonym, TripletView::HeadRelMasked, vocab, concepts);
    // [CLS] [MASK] [SEP] [MASK] [SEP] hemangiosarcoma [SEP]
    REQUIRE(seq.ids.size() == 7);
    CHECK(seq.ids[1] == Vocab::kMask);
    CHECK(seq.ids[3] == Vocab::kMask);
    CHECK(seq.ids[5] == vocab.id_of("hemangiosarcoma"));
    CHECK(seq.mask_slots.empty());
  }

  SUBCASE("relation-masked negative targets the NoRelation token") {
    const MaskedTriplet* negative = nullptr;
    for (const auto& mt : corpus.triplets) {
      if (mt.base.polarity == Polarity::Negative) negative = &mt;
    }
    REQUIRE(negative != nullptr);
    CHECK(negative->relation_label == Relation::NoRelation);
    TokenSeq seq = verbalize_triplet(*negative, TripletView::RelMasked, vocab, concepts);
    REQUIRE(seq.mask_slots.size() == 1);
    CHECK(seq.mask_slots[0].target == vocab.relation_token_id(Relation::NoRelation));
    CHECK(seq.ids[seq.mask_slots[0].position] == Vocab::kMask);
  }
}

TEST_CASE("every token sequence starts with [CLS], ends with [SEP], masks at slots") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);
  auto check_seq = [&](const TokenSeq& seq) {
    CHECK(seq.ids.front() == Vocab::kCls);
    CHECK(seq.ids.back() == Vocab::kSep);
    for (const auto& slot : seq.mask_slots) CHECK(seq.ids[slot.position] == Vocab::kMask);
  };
  for (const auto& mt : corpus.triplets) {
    check_seq(verbalize_triplet(mt, TripletView::TailMasked, vocab, concepts));
    check_seq(verbalize_triplet(mt, TripletView::HeadRelMasked, vocab, concepts));
    check_seq(verbalize_triplet(mt, TripletView::RelMasked, vocab, concepts));
  }
  for (const auto& p : corpus.paths) check_seq(verbalize_path(p, vocab));
  for (const auto& mp : corpus.masked_paths) {
    check_seq(verbalize_masked_path(mp, vocab, concepts));
  }
}

TEST_CASE("paths verbalize with one segment per concept and relation") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);

  Path p;
  p.concepts = {{ConceptId{"onto#C"}, "liver lesion"},
                {ConceptId{"onto#B"}, "angiosarcoma"},
                {ConceptId{"onto#B"}, "hemangiosarcoma"}};
  p.relations = {Relation::SubClassOf, Relation::Synonym};

  TokenSeq seq = verbalize_path(p, vocab);
  // [CLS] liver lesion [SEP] <sub> [SEP] angiosarcoma [SEP] <syn> [SEP] hemangiosarcoma [SEP]
  std::size_t relation_tokens = 0;
  for (auto id : seq.ids) {
    if (id == vocab.relation_token_id(Relation::SubClassOf) ||
        id == vocab.relation_token_id(Relation::Synonym)) {
      ++relation_tokens;
    }
  }
  CHECK(relation_tokens == 2);
  CHECK(seq.ids.size() == 1 + 2 + 1 + 1 + 1 + 1 + 1 + 1 + 1 + 1 + 1);

  SUBCASE("length-2 path renders the minimal layout") {
    Path two;
    two.concepts = {{ConceptId{"onto#C"}, "liver lesion"}, {ConceptId{"onto#B"}, "angiosarcoma"}};
    two.relations = {Relation::SubClassOf};
    TokenSeq min_seq = verbalize_path(two, vocab);
    // [CLS] liver lesion [SEP] <sub> [SEP] angiosarcoma [SEP]
    CHECK(min_seq.ids.size() == 8);
  }

  SUBCASE("masked path renders exactly its masks") {
    MaskedPath mp;
    mp.base = p;
    mp.masked_positions = {1, 2};
    mp.target_concepts = {ConceptId{"onto#B"}, ConceptId{"onto#B"}};
    TokenSeq mseq = verbalize_masked_path(mp, vocab, concepts);
    std::size_t masks = 0;
    for (auto id : mseq.ids) masks += id == Vocab::kMask;
    CHECK(masks == 2);
    CHECK(mseq.mask_slots.size() == 2);
  }
}

TEST_CASE("token ids de-verbalize to the normalized strings") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);
  const auto& mt = corpus.triplets.front();
  TokenSeq seq = verbalize_triplet(mt, TripletView::RelMasked, vocab, concepts);

  std::vector<std::string> words;
  for (auto id : seq.ids) {
    const std::string& tok = vocab.token(id);
    if (tok[0] != '[' && tok[0] != '<') words.push_back(tok);
  }
  CHECK(words == tokenize(mt.base.head_text + " " + mt.base.tail_text));
}

TEST_CASE("truncation drops text tokens but never a mask or [CLS]") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);

  MaskedTriplet mt;
  mt.base = {"a very long and repetitive head label with many many tokens inside it",
             Relation::Synonym, "tail", ConceptId{"onto#B"}, ConceptId{"onto#B"},
             Polarity::Positive};
  mt.relation_label = Relation::Synonym;

  TokenSeq seq = verbalize_triplet(mt, TripletView::TailMasked, vocab, concepts, 12);
  CHECK(seq.ids.size() <= 12);
  CHECK(seq.ids.front() == Vocab::kCls);
  REQUIRE(seq.mask_slots.size() == 1);
  CHECK(seq.ids[seq.mask_slots[0].position] == Vocab::kMask);

  // long paths shed whole trailing hops
  Path p;
  for (int i = 0; i < 6; ++i) {
    p.concepts.push_back({ConceptId{"onto#B"}, "angiosarcoma hemangiosarcoma sarcoma"});
    if (i) p.relations.push_back(Relation::SubClassOf);
  }
  TokenSeq pseq = verbalize_path(p, vocab, 24);
  CHECK(pseq.ids.size() <= 24);
  CHECK(pseq.ids.front() == Vocab::kCls);
}

TEST_CASE("vocab and concept vocab round-trip through their file form") {
  auto corpus = small_corpus();
  auto [vocab, concepts] = build_vocabs(corpus, small_ontologies(), 1);

  std::string text = vocab_to_string(vocab);
  CHECK(text.substr(0, 1) == "{");  // JSON header line
  Vocab loaded = vocab_from_string(text, "<mem>");
  CHECK(loaded.tokens == vocab.tokens);
  CHECK(loaded.min_freq == vocab.min_freq);
  CHECK(vocab_to_string(loaded) == text);

  std::string ctext = concept_vocab_to_string(concepts);
  ConceptVocab cloaded = concept_vocab_from_string(ctext, "<mem>");
  REQUIRE(cloaded.size() == concepts.size());
  for (std::size_t i = 0; i < concepts.size(); ++i) CHECK(cloaded.id_of(i) == concepts.id_of(i));
}
