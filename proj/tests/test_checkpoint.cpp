#include <doctest.h>

#include "laker/checkpoint.hpp"
#include "laker/pipeline.hpp"
#include "laker/rng.hpp"

using namespace laker;

namespace {

std::vector<TensorSection> demo_sections() {
  Rng rng(5);
  TensorSection enc{"encoder",
                    {{"w", Tensor::randn({3, 4}, rng, 1.0)}, {"b", Tensor::randn({4}, rng, 1.0)}}};
  TensorSection transe{"transe", {{"entities", Tensor::randn({5, 2}, rng, 1.0)}}};
  return {enc, transe};
}

CheckpointMeta demo_meta() {
  CheckpointMeta meta;
  meta.config_snapshot = "[run]\nseed = 1\n";
  meta.vocab_hash = fnv1a64_hex("vocab");
  meta.concept_vocab_hash = fnv1a64_hex("concepts");
  meta.created_at = "2020-01-01T00:00:00Z";
  return meta;
}

}  // namespace

TEST_CASE("fnv1a64 matches the reference constants") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("checkpoint blob starts with a length-prefixed JSON header") {
  std::string blob = checkpoint_to_string(demo_meta(), demo_sections());
  REQUIRE(blob.size() > 8);
  CHECK(blob[8] == '{');  // header JSON follows the u64 length
}

TEST_CASE("checkpoint round-trips bit-for-bit at float32 precision") {
  auto sections = demo_sections();
  std::string once = checkpoint_to_string(demo_meta(), sections);
  LoadedCheckpoint loaded = checkpoint_from_string(once, "<mem>");

  // re-serializing the loaded tensors reproduces the payload exactly
  std::vector<TensorSection> again;
  for (const auto& name : {"encoder", "transe"}) {
    again.push_back({name, loaded.section(name)});
  }
  CheckpointMeta meta = loaded.meta;
  std::string twice = checkpoint_to_string(meta, again);
  CHECK(once == twice);

  // values equal the float32 cast of the originals
  const auto& w = loaded.section("encoder")[0].second;
  for (std::size_t i = 0; i < w.numel(); ++i) {
    CHECK(w.at(i) == static_cast<double>(static_cast<float>(sections[0].tensors[0].second.at(i))));
  }
}

TEST_CASE("payload corruption is detected") {
  std::string blob = checkpoint_to_string(demo_meta(), demo_sections());
  blob[blob.size() - 1] ^= 0x01;
  CHECK_THROWS_AS(checkpoint_from_string(blob, "<mem>"), Error);
}

TEST_CASE("vocab hash mismatch fails the load") {
  CheckpointMeta meta = demo_meta();
  verify_vocab_hashes(meta, "vocab", "concepts");  // matching hashes pass
  CHECK_THROWS_AS(verify_vocab_hashes(meta, "other", "concepts"), Error);
  CHECK_THROWS_AS(verify_vocab_hashes(meta, "vocab", "other"), Error);
}

TEST_CASE("config snapshot replays to the identical configuration") {
  RunConfig cfg;
  cfg.seed = 123;
  cfg.encoder.layers = 1;
  cfg.encoder.d_model = 32;
  cfg.encoder.ffn = 48;
  cfg.train.steps = 77;
  cfg.train.lr = 2.5e-4;
  cfg.train.use_cpath = false;
  cfg.match.threshold = 0.35;
  std::string snapshot = dump_run_config(cfg);
  RunConfig replay = parse_run_config(snapshot, "<mem>");
  CHECK(dump_run_config(replay) == snapshot);
  CHECK(replay.seed == 123);
  CHECK(replay.train.steps == 77);
  CHECK(replay.train.lr == 2.5e-4);
  CHECK(!replay.train.use_cpath);
}

TEST_CASE("derived stage seeds differ per tag and stay stable") {
  auto a = derive_seed(42, seed_tag::kCorpus);
  auto b = derive_seed(42, seed_tag::kTrain);
  auto c = derive_seed(43, seed_tag::kCorpus);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a == derive_seed(42, seed_tag::kCorpus));
}
