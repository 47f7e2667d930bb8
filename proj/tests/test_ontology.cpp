#include <doctest.h>

#include <set>

#include "laker/extract.hpp"
#include "laker/ontology.hpp"
#include "laker/synthetic.hpp"

using namespace laker;

namespace {

const char* kChainJson = R"({
  "ontology_id": "onto",
  "concepts": [
    {"id": "A", "labels": ["sarcoma"]},
    {"id": "B", "labels": ["angiosarcoma", "hemangiosarcoma"], "subclass_of": ["A"]},
    {"id": "C", "labels": ["liver angiosarcoma"], "subclass_of": ["A"], "disjoint_with": ["B"]}
  ]
})";

ConceptId qid(const char* local) { return ConceptId{std::string("onto#") + local}; }

}  // namespace

TEST_CASE("empty ontology loads to empty maps") {
  Ontology o = parse_ontology_json(R"({"ontology_id": "x", "concepts": []})", "<mem>");
  CHECK(o.concepts.empty());
  CHECK(o.roots.empty());
}

TEST_CASE("three-concept fixture: roots and edge counts") {
  Ontology o = parse_ontology_json(kChainJson, "<mem>");
  CHECK(o.concepts.size() == 3);
  REQUIRE(o.roots.size() == 1);
  CHECK(o.roots[0] == qid("A"));
  std::size_t subclass = 0, disjoint = 0;
  for (const auto& [_, c] : o.concepts) {
    subclass += c.subclass_of.size();
    disjoint += c.disjoint_with.size();
  }
  CHECK(subclass == 2);
  CHECK(disjoint == 1);
}

TEST_CASE("dangling edge target is rejected by name") {
  const char* text = R"({"ontology_id":"x","concepts":[
    {"id":"B","labels":["b"],"subclass_of":["D"]}]})";
  CHECK_THROWS_WITH_AS(parse_ontology_json(text, "<mem>"), doctest::Contains("D"), Error);
}

TEST_CASE("validation rejects duplicates, self-loops and malformed ids") {
  CHECK_THROWS_AS(parse_ontology_json(
                      R"({"ontology_id":"x","concepts":[
                        {"id":"A","labels":["a"]},{"id":"A","labels":["a2"]}]})",
                      "<mem>"),
                  Error);
  CHECK_THROWS_AS(parse_ontology_json(
                      R"({"ontology_id":"x","concepts":[
                        {"id":"A","labels":["a"],"subclass_of":["A"]}]})",
                      "<mem>"),
                  Error);
  CHECK_THROWS_AS(parse_ontology_json(
                      R"({"ontology_id":"x","concepts":[{"id":"a b","labels":["a"]}]})",
                      "<mem>"),
                  Error);
  CHECK_THROWS_AS(parse_ontology_json(
                      R"({"ontology_id":"x","concepts":[{"id":"A","labels":["a","a"]}]})",
                      "<mem>"),
                  Error);
}

TEST_CASE("unknown keys are rejected") {
  CHECK_THROWS_AS(parse_ontology_json(R"({"ontology_id":"x","concepts":[],"extra":1})", "<mem>"),
                  Error);
  CHECK_THROWS_AS(parse_ontology_json(
                      R"({"ontology_id":"x","concepts":[{"id":"A","labels":["a"],"color":"red"}]})",
                      "<mem>"),
                  Error);
}

TEST_CASE("malformed json reports line and offset") {
  try {
    parse_ontology_json("{\n  \"ontology_id\": \"x\",\n  ###\n}", "<mem>");
    FAIL("expected ParseError");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("serialization round-trips to a fixed point") {
  Ontology o = parse_ontology_json(kChainJson, "<mem>");
  std::string once = serialize_ontology(o);
  Ontology o2 = parse_ontology_json(once, "<mem2>");
  CHECK(serialize_ontology(o2) == once);
}

TEST_CASE("obo flat format parses stanzas and ignores unknown tags") {
  const char* obo =
      "format-version: 1.2\n"
      "ontology: demo\n"
      "\n"
      "[Term]\n"
      "id: T:001\n"
      "name: sarcoma\n"
      "def: \"ignored\" []\n"
      "\n"
      "[Typedef]\n"
      "id: part_of\n"
      "\n"
      "[Term]\n"
      "id: T:002\n"
      "name: angiosarcoma\n"
      "synonym: \"hemangiosarcoma\" EXACT []\n"
      "is_a: T:001 ! sarcoma\n"
      "disjoint_from: T:003\n"
      "\n"
      "[Term]\n"
      "id: T:003\n"
      "name: other\n";
  Ontology o = parse_ontology_obo(obo, "<mem>");
  CHECK(o.id == "demo");
  CHECK(o.concepts.size() == 3);
  const Concept& c = o.get(ConceptId{"demo#T:002"});
  REQUIRE(c.labels.size() == 2);
  CHECK(c.labels[0] == "angiosarcoma");
  CHECK(c.labels[1] == "hemangiosarcoma");
  REQUIRE(c.subclass_of.size() == 1);
  CHECK(c.subclass_of[0].value == "demo#T:001");
  CHECK(c.disjoint_with.size() == 1);
}

TEST_CASE("extract_triplets emits synonym, subclass and disjoint triplets") {
  Ontology o = parse_ontology_json(kChainJson, "<mem>");
  auto triplets = extract_triplets(o);

  bool saw_synonym = false, saw_subclass = false, saw_disjoint = false;
  for (const auto& t : triplets) {
    if (t.relation == Relation::Synonym) {
      CHECK(t.head_text == "angiosarcoma");
      CHECK(t.tail_text == "hemangiosarcoma");
      CHECK(t.head_id == t.tail_id);
      saw_synonym = true;
    }
    if (t.relation == Relation::SubClassOf && t.head_id == qid("B")) {
      CHECK(t.head_text == "angiosarcoma");
      CHECK(t.tail_text == "sarcoma");
      saw_subclass = true;
    }
    if (t.relation == Relation::DisjointWith) saw_disjoint = true;
    CHECK(t.polarity == Polarity::Positive);
  }
  CHECK(saw_synonym);
  CHECK(saw_subclass);
  CHECK(saw_disjoint);
  CHECK(triplets.size() == 2 + 1 + 1);  // subclass + disjoint + synonym
}

TEST_CASE("single-label edge-free concept contributes no triplets") {
  Ontology o = parse_ontology_json(
      R"({"ontology_id":"x","concepts":[{"id":"A","labels":["alone"]}]})", "<mem>");
  CHECK(extract_triplets(o).empty());
}

TEST_CASE("triplet count matches the edge/label formula on synthetic ontologies") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Ontology o = gen_synthetic_ontology(60, seed);
    std::size_t expected = 0;
    for (const auto& [_, c] : o.concepts) {
      expected += c.subclass_of.size() + c.disjoint_with.size() + (c.labels.size() - 1);
    }
    CHECK(extract_triplets(o).size() == expected);
  }
}

TEST_CASE("chain ontology yields the single root path") {
  Ontology o = parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["a root"]},
    {"id":"B","labels":["b mid"],"subclass_of":["A"]},
    {"id":"C","labels":["c leaf"],"subclass_of":["B"]}]})",
                                   "<mem>");
  PathConfig cfg;
  cfg.p_syn = 0.0;
  auto extraction = extract_paths(o, cfg);
  REQUIRE(extraction.paths.size() == 2);  // A<-B and A<-B<-C

  const Path* full = nullptr;
  for (const auto& p : extraction.paths) {
    if (p.length() == 3) full = &p;
  }
  REQUIRE(full != nullptr);
  CHECK(full->concepts[0].id == qid("C"));
  CHECK(full->concepts[1].id == qid("B"));
  CHECK(full->concepts[2].id == qid("A"));
  CHECK(full->relations[0] == Relation::SubClassOf);
  CHECK(full->relations[1] == Relation::SubClassOf);
}

TEST_CASE("isolated root emits no paths") {
  Ontology o = parse_ontology_json(
      R"({"ontology_id":"x","concepts":[{"id":"A","labels":["alone"]}]})", "<mem>");
  CHECK(extract_paths(o, PathConfig{}).paths.empty());
}

TEST_CASE("synonym hops reuse the concept id with an alternate label") {
  Ontology o = parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["alpha","alpha prime"]},
    {"id":"B","labels":["beta"],"subclass_of":["A"]}]})",
                                   "<mem>");
  PathConfig cfg;
  cfg.p_syn = 1.0;
  auto extraction = extract_paths(o, cfg);
  REQUIRE(extraction.paths.size() == 1);
  const Path& p = extraction.paths[0];
  REQUIRE(p.length() == 3);
  CHECK(p.relations[0] == Relation::SubClassOf);
  CHECK(p.relations[1] == Relation::Synonym);
  CHECK(p.concepts[1].id == qid("A"));
  CHECK(p.concepts[2].id == qid("A"));
  CHECK(p.concepts[1].label == "alpha");
  CHECK(p.concepts[2].label == "alpha prime");
}

TEST_CASE("positive path hops are real edges (brute-force lookup)") {
  Ontology o = gen_synthetic_ontology(80, 11);
  std::set<std::pair<ConceptId, ConceptId>> edges;
  for (const auto& [cid, c] : o.concepts) {
    for (const auto& parent : c.subclass_of) edges.emplace(cid, parent);
  }
  PathConfig cfg;
  cfg.seed = 5;
  auto extraction = extract_paths(o, cfg);
  CHECK(!extraction.paths.empty());
  for (const auto& p : extraction.paths) {
    for (std::size_t i = 0; i + 1 < p.length(); ++i) {
      if (p.relations[i] == Relation::SubClassOf) {
        CHECK(edges.count({p.concepts[i].id, p.concepts[i + 1].id}) == 1);
      } else {
        CHECK(p.concepts[i].id == p.concepts[i + 1].id);  // synonym hop
      }
    }
  }
}

TEST_CASE("path extraction caps, truncates cycles and stays deterministic") {
  Ontology o = parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["a"]},
    {"id":"B","labels":["b"],"subclass_of":["A","C"]},
    {"id":"C","labels":["c"],"subclass_of":["B"]}]})",
                                   "<mem>");
  PathConfig cfg;
  cfg.seed = 3;
  auto first = extract_paths(o, cfg);
  auto second = extract_paths(o, cfg);
  CHECK(first.cycle_warnings > 0);
  REQUIRE(first.paths.size() == second.paths.size());
  for (std::size_t i = 0; i < first.paths.size(); ++i) {
    CHECK(first.paths[i].concepts.size() == second.paths[i].concepts.size());
    for (std::size_t j = 0; j < first.paths[i].concepts.size(); ++j) {
      CHECK(first.paths[i].concepts[j].id == second.paths[i].concepts[j].id);
      CHECK(first.paths[i].concepts[j].label == second.paths[i].concepts[j].label);
    }
  }

  PathConfig capped;
  capped.max_per_concept = 1;
  capped.p_syn = 0.0;
  auto limited = extract_paths(o, capped);
  std::map<ConceptId, std::size_t> per_terminal;
  for (const auto& p : limited.paths) ++per_terminal[p.concepts.front().id];
  for (const auto& [_, n] : per_terminal) CHECK(n <= 1);
}

TEST_CASE("stats counts and mean path length") {
  Ontology empty = parse_ontology_json(R"({"ontology_id":"x","concepts":[]})", "<mem>");
  CorpusStats zero = stats(empty, {}, {});
  CHECK(zero.concepts == 0);
  CHECK(zero.subclass_triplets == 0);
  CHECK(!zero.avg_path_len.has_value());

  Ontology o = parse_ontology_json(R"({"ontology_id":"onto","concepts":[
    {"id":"A","labels":["a","a2"]},
    {"id":"B","labels":["b"],"subclass_of":["A"]},
    {"id":"C","labels":["c"],"subclass_of":["B"]}]})",
                                   "<mem>");
  auto triplets = extract_triplets(o);
  PathConfig cfg;
  cfg.p_syn = 0.0;
  auto extraction = extract_paths(o, cfg);
  CorpusStats s = stats(o, triplets, extraction.paths);
  CHECK(s.concepts == 3);
  CHECK(s.subclass_triplets == 2);
  CHECK(s.synonym_triplets == 1);

  Path p3, p5;
  p3.concepts.resize(3);
  p3.relations.resize(2, Relation::SubClassOf);
  p5.concepts.resize(5);
  p5.relations.resize(4, Relation::SubClassOf);
  CorpusStats avg = stats(o, {}, {p3, p5});
  REQUIRE(avg.avg_path_len.has_value());
  CHECK(*avg.avg_path_len == doctest::Approx(4.0));
}

TEST_CASE("stats table uses the expected column layout") {
  StatsRow row{"DOID", {}};
  row.stats.concepts = 8848;
  row.stats.subclass_triplets = 28113;
  row.stats.synonym_triplets = 131964;
  row.stats.paths = 19566;
  row.stats.avg_path_len = 7.11;
  std::string table = format_stats_table({row});
  CHECK(table.find("subclass") != std::string::npos);
  CHECK(table.find("synonym") != std::string::npos);
  CHECK(table.find("#Paths") != std::string::npos);
  CHECK(table.find("Avg. length") != std::string::npos);
  CHECK(table.find("7.11") != std::string::npos);

  StatsRow no_paths{"OMIM", {}};
  std::string empty_table = format_stats_table({no_paths});
  CHECK(empty_table.find('-') != std::string::npos);
}
