#include "laker/pipeline.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace laker {

namespace {

namespace fs = std::filesystem;

class StageClock {
 public:
  explicit StageClock(PipelineResult& result) : result_(result) {}

  template <typename F>
  auto run(const std::string& stage, F&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(stage, t0);
    } else {
      auto out = fn();
      record(stage, t0);
      return out;
    }
  }

 private:
  void record(const std::string& stage, std::chrono::steady_clock::time_point t0) {
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result_.timings.push_back({stage, s});
    result_.total_seconds += s;
  }

  PipelineResult& result_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return Rng::derive(seed, tag).next();
}

void save_model_checkpoint(const std::string& path, const RunConfig& cfg,
                           const ModelParams& params, const std::string& vocab_text,
                           const std::string& concept_vocab_text) {
  CheckpointMeta meta;
  meta.config_snapshot = dump_run_config(cfg);
  meta.vocab_hash = fnv1a64_hex(vocab_text);
  meta.concept_vocab_hash = fnv1a64_hex(concept_vocab_text);
  meta.created_at = iso8601_utc_now();
  TensorSection section{"encoder", params.named_tensors()};
  save_checkpoint(path, meta, {section});
}

ModelParams load_model_checkpoint(const std::string& path, const std::string& vocab_text,
                                  const std::string& concept_vocab_text, RunConfig* out_config) {
  LoadedCheckpoint ckpt = load_checkpoint(path);
  verify_vocab_hashes(ckpt.meta, vocab_text, concept_vocab_text);
  RunConfig cfg = parse_run_config(ckpt.meta.config_snapshot, path + "#config_snapshot");
  if (out_config) *out_config = cfg;
  ModelParams params = assemble_params(cfg.encoder, ckpt.section("encoder"));
  for (auto& t : params.all_tensors()) t.set_requires_grad(true);
  return params;
}

void save_transe_checkpoint(const std::string& path, const RunConfig& cfg,
                            const TransEEmbeddings& emb) {
  CheckpointMeta meta;
  meta.config_snapshot = dump_run_config(cfg);
  meta.created_at = iso8601_utc_now();
  TensorSection section;
  section.name = "transe";
  section.tensors.emplace_back(
      "entities", Tensor::from({emb.entity_count, emb.dim},
                               std::vector<double>(emb.entities.begin(), emb.entities.end())));
  section.tensors.emplace_back(
      "relations", Tensor::from({kTransERelations, emb.dim},
                                std::vector<double>(emb.relations.begin(), emb.relations.end())));
  save_checkpoint(path, meta, {section});
}

TransEEmbeddings load_transe_checkpoint(const std::string& path) {
  LoadedCheckpoint ckpt = load_checkpoint(path);
  const auto& tensors = ckpt.section("transe");
  TransEEmbeddings emb;
  for (const auto& [name, t] : tensors) {
    if (name == "entities") {
      emb.entity_count = t.shape()[0];
      emb.dim = t.shape()[1];
      emb.entities = t.values();
    } else if (name == "relations") {
      emb.relations = t.values();
    }
  }
  if (emb.entities.empty() || emb.relations.empty()) {
    throw Error(ErrorKind::ValidationError, path + ": incomplete transe section");
  }
  return emb;
}

Ontology load_ontology_auto(const std::string& path) {
  return load_ontology(path, detect_format(path));
}

PipelineResult run_pipeline(const RunConfig& cfg, const Ontology& source, const Ontology& target,
                            const std::optional<ReferenceSet>& reference,
                            const std::string& out_dir) {
  cfg.validate();
  if (source.id == target.id) {
    throw Error(ErrorKind::ValidationError, "source and target ontology ids must differ");
  }

  PipelineResult result;
  StageClock clock(result);
  bool emit = !out_dir.empty();
  if (emit) fs::create_directories(out_dir);
  auto artifact = [&](const char* name) { return (fs::path(out_dir) / name).string(); };

  // corpus
  CorpusConfig corpus_cfg = cfg.corpus;
  corpus_cfg.seed = derive_seed(cfg.seed, seed_tag::kCorpus);
  Corpus corpus = clock.run("corpus", [&] {
    return build_corpus({source, target}, corpus_cfg);
  });
  result.corpus_triplets = corpus.triplets.size();
  result.corpus_paths = corpus.paths.size();
  result.corpus_masked_paths = corpus.masked_paths.size();
  result.corpus_shortfall = corpus.shortfalls.any();
  if (emit) save_corpus(corpus, artifact("corpus.jsonl"));

  // vocabularies
  auto [vocab, concepts] = clock.run("vocab", [&] {
    return build_vocabs(corpus, {source, target}, cfg.vocab_min_freq);
  });
  std::string vocab_text = vocab_to_string(vocab);
  std::string concepts_text = concept_vocab_to_string(concepts);
  if (emit) {
    write_text(artifact("model.vocab"), vocab_text);
    write_text(artifact("model.concepts"), concepts_text);
  }

  // encoder training
  ModelParams params = init_params(cfg.encoder, vocab.size(), concepts.size(),
                                   derive_seed(cfg.seed, seed_tag::kParams));
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = derive_seed(cfg.seed, seed_tag::kTrain);
  std::ostringstream losses_csv;
  TrainResult trained = clock.run("train", [&] {
    return train(corpus, vocab, concepts, params, train_cfg, &losses_csv);
  });
  result.loss_reports = std::move(trained.reports);
  if (emit) {
    write_text(artifact("losses.csv"), losses_csv.str());
    save_model_checkpoint(artifact("model.ckpt"), cfg, params, vocab_text, concepts_text);
  }

  // relation regularizer over the union graph
  TransEConfig transe_cfg = cfg.transe;
  transe_cfg.seed = derive_seed(cfg.seed, seed_tag::kTransE);
  TransEEmbeddings transe = clock.run("kge", [&] {
    auto src_pos = extract_triplets(source);
    auto tgt_pos = extract_triplets(target);
    src_pos.insert(src_pos.end(), tgt_pos.begin(), tgt_pos.end());
    return train_transe(id_triplets(src_pos, concepts), concepts.size(), transe_cfg);
  });
  if (emit) save_transe_checkpoint(artifact("transe.ckpt"), cfg, transe);

  // mapping inference
  MatchOptions match_opt = cfg.match;
  match_opt.threads = cfg.threads;
  match_opt.max_len_triplet = cfg.train.max_len_triplet;
  MatchOutput match_out = clock.run("match", [&] {
    return run_matching(source, target, params, vocab, concepts, transe, match_opt);
  });
  result.alignment = std::move(match_out.alignment);
  result.fallback_sources = match_out.fallback_sources;
  result.match_seconds = match_out.elapsed_seconds;
  result.alignment_tsv = alignment_to_tsv(result.alignment);
  if (emit) {
    write_text(artifact("alignment.tsv"), result.alignment_tsv);
    AlignmentRunMeta meta;
    meta.checkpoint_hash = fnv1a64_hex(
        emit ? read_text(artifact("model.ckpt")) : std::string());
    meta.k = match_opt.k;
    meta.threshold = match_opt.threshold;
    meta.seed = cfg.seed;
    meta.elapsed_seconds = match_out.elapsed_seconds;
    save_alignment_json(result.alignment, meta, artifact("alignment.json"));
  }

  if (reference) {
    result.prf = clock.run("eval", [&] { return compute_prf(result.alignment, *reference); });
  }
  return result;
}

}  // namespace laker
