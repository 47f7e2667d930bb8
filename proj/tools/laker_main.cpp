// laker — self-supervised ontology matching toolkit.
//
// Pipeline stages are exposed as subcommands (parse, synth, corpus, train,
// kge, match, eval) plus `pipeline`, which chains them end to end.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "laker/pipeline.hpp"
#include "laker/synthetic.hpp"

namespace fs = std::filesystem;
using namespace laker;

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> k;
  std::optional<double> threshold;
  std::optional<std::size_t> threads;
  std::string objectives;

  RunConfig resolve() const {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) cfg.seed = *seed;
    if (k) cfg.match.k = *k;
    if (threshold) cfg.match.threshold = *threshold;
    if (threads) cfg.threads = *threads;
    if (!objectives.empty()) apply_objectives(cfg.train, objectives);
    return cfg;
  }
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration file");
  cmd->add_option("--seed", opts.seed, "override the global seed");
  cmd->add_option("--k", opts.k, "candidate count for inference");
  cmd->add_option("--threshold", opts.threshold, "minimum mapping score");
  cmd->add_option("--threads", opts.threads, "worker thread cap (also LAKER_THREADS)");
  cmd->add_option("--objectives", opts.objectives,
                  "training objective subset, e.g. c2c,c2r or cpath,mpath or all");
}

OntologyFormat parse_format(const std::string& fmt, const std::string& path) {
  if (fmt == "json") return OntologyFormat::CanonicalJson;
  if (fmt == "obo") return OntologyFormat::OboFlat;
  if (fmt == "auto" || fmt.empty()) return detect_format(path);
  throw Error(ErrorKind::ConfigError, "unknown format '" + fmt + "' (json|obo|auto)");
}

void print_timings(const PipelineResult& result) {
  for (const auto& t : result.timings) {
    std::printf("  %-8s %8.2f(s)\n", t.stage.c_str(), t.seconds);
  }
  std::printf("  %-8s %8.2f(s)\n", "total", result.total_seconds);
}

int cmd_parse(const std::string& input, const std::string& fmt) {
  Ontology o = load_ontology(input, parse_format(fmt, input));
  auto triplets = extract_triplets(o);
  auto extraction = extract_paths(o, PathConfig{});
  CorpusStats s = stats(o, triplets, extraction.paths);
  std::cout << format_stats_table({{o.id, s}});
  std::printf("roots: %zu  disjoint triplets: %zu  cycle warnings: %zu\n", o.roots.size(),
              s.disjoint_triplets, extraction.cycle_warnings);
  return 0;
}

int cmd_synth(std::size_t n, std::uint64_t seed, const std::string& out_dir,
              double deletion_rate) {
  SynthConfig cfg;
  cfg.n_concepts = n;
  cfg.seed = seed;
  cfg.concept_deletion_rate = deletion_rate;
  SynthPair pair = gen_synthetic_pair(cfg);
  fs::create_directories(out_dir);
  write_text((fs::path(out_dir) / "source.json").string(), serialize_ontology(pair.source));
  write_text((fs::path(out_dir) / "target.json").string(), serialize_ontology(pair.target));
  save_reference_tsv(pair.gold, (fs::path(out_dir) / "reference.tsv").string());
  std::printf("wrote %s/{source.json,target.json,reference.tsv} (%zu gold pairs)\n",
              out_dir.c_str(), pair.gold.pairs.size());
  return 0;
}

int cmd_corpus(const CommonOpts& common, const std::vector<std::string>& inputs,
               const std::string& out) {
  RunConfig cfg = common.resolve();
  std::vector<Ontology> ontologies;
  std::vector<StatsRow> rows;
  for (const auto& path : inputs) ontologies.push_back(load_ontology_auto(path));

  CorpusConfig corpus_cfg = cfg.corpus;
  corpus_cfg.seed = derive_seed(cfg.seed, seed_tag::kCorpus);
  Corpus corpus = build_corpus(ontologies, corpus_cfg);
  save_corpus(corpus, out);

  for (const auto& o : ontologies) {
    PathConfig pc = cfg.corpus.path;
    pc.seed = corpus_cfg.seed;
    rows.push_back({o.id, stats(o, extract_triplets(o), extract_paths(o, pc).paths)});
  }
  std::cout << format_stats_table(rows);
  std::printf("corpus: %zu triplet records, %zu paths, %zu masked paths -> %s\n",
              corpus.triplets.size(), corpus.paths.size(), corpus.masked_paths.size(),
              out.c_str());
  if (corpus.shortfalls.any()) {
    std::printf("shortfalls: subclass=%zu disjoint=%zu synonym=%zu paths=%zu\n",
                corpus.shortfalls.subclass, corpus.shortfalls.disjoint,
                corpus.shortfalls.synonym, corpus.shortfalls.paths);
  }
  return 0;
}

int cmd_train(const CommonOpts& common, const std::vector<std::string>& inputs,
              const std::string& corpus_path, const std::string& out_dir) {
  RunConfig cfg = common.resolve();
  std::vector<Ontology> ontologies;
  for (const auto& path : inputs) ontologies.push_back(load_ontology_auto(path));

  Corpus corpus;
  if (!corpus_path.empty()) {
    corpus = load_corpus(corpus_path);
  } else {
    CorpusConfig corpus_cfg = cfg.corpus;
    corpus_cfg.seed = derive_seed(cfg.seed, seed_tag::kCorpus);
    corpus = build_corpus(ontologies, corpus_cfg);
  }

  auto [vocab, concepts] = build_vocabs(corpus, ontologies, cfg.vocab_min_freq);
  std::string vocab_text = vocab_to_string(vocab);
  std::string concepts_text = concept_vocab_to_string(concepts);

  ModelParams params = init_params(cfg.encoder, vocab.size(), concepts.size(),
                                   derive_seed(cfg.seed, seed_tag::kParams));
  TrainConfig train_cfg = cfg.train;
  train_cfg.seed = derive_seed(cfg.seed, seed_tag::kTrain);

  fs::create_directories(out_dir);
  std::ofstream csv((fs::path(out_dir) / "losses.csv").string());
  auto t0 = std::chrono::steady_clock::now();
  TrainResult result = train(corpus, vocab, concepts, params, train_cfg, &csv);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_text((fs::path(out_dir) / "model.vocab").string(), vocab_text);
  write_text((fs::path(out_dir) / "model.concepts").string(), concepts_text);
  save_model_checkpoint((fs::path(out_dir) / "model.ckpt").string(), cfg, params, vocab_text,
                        concepts_text);
  const auto& last = result.reports.back();
  std::printf("trained %zu steps in %.2f(s); final total loss %.4f -> %s\n", result.steps_run,
              seconds, last.total, out_dir.c_str());
  return 0;
}

int cmd_kge(const CommonOpts& common, const std::vector<std::string>& inputs,
            const std::string& concepts_path, const std::string& out) {
  RunConfig cfg = common.resolve();
  ConceptVocab concepts = load_concept_vocab(concepts_path);
  std::vector<Triplet> positives;
  for (const auto& path : inputs) {
    auto o = load_ontology_auto(path);
    auto t = extract_triplets(o);
    positives.insert(positives.end(), t.begin(), t.end());
  }
  TransEConfig transe_cfg = cfg.transe;
  transe_cfg.seed = derive_seed(cfg.seed, seed_tag::kTransE);
  auto t0 = std::chrono::steady_clock::now();
  TransEEmbeddings emb = train_transe(id_triplets(positives, concepts), concepts.size(),
                                      transe_cfg);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  save_transe_checkpoint(out, cfg, emb);
  std::printf("transe: %zu entities dim %zu, final loss %.4f, %.2f(s) -> %s\n",
              emb.entity_count, emb.dim, emb.epoch_losses.back(), seconds, out.c_str());
  return 0;
}

int cmd_match(const CommonOpts& common, const std::string& source_path,
              const std::string& target_path, const std::string& model_path,
              const std::string& vocab_path, const std::string& concepts_path,
              const std::string& transe_path, const std::string& out,
              const std::string& json_out) {
  RunConfig file_cfg;
  std::string vocab_text = read_text(vocab_path);
  std::string concepts_text = read_text(concepts_path);
  ModelParams params = load_model_checkpoint(model_path, vocab_text, concepts_text, &file_cfg);

  // CLI overrides sit on top of the checkpoint's recorded run config.
  RunConfig cfg = file_cfg;
  if (!common.config_path.empty()) cfg = load_run_config(common.config_path);
  if (common.seed) cfg.seed = *common.seed;
  if (common.k) cfg.match.k = *common.k;
  if (common.threshold) cfg.match.threshold = *common.threshold;
  if (common.threads) cfg.threads = *common.threads;

  Vocab vocab = vocab_from_string(vocab_text, vocab_path);
  ConceptVocab concepts = concept_vocab_from_string(concepts_text, concepts_path);
  Ontology source = load_ontology_auto(source_path);
  Ontology target = load_ontology_auto(target_path);
  TransEEmbeddings transe = load_transe_checkpoint(transe_path);

  MatchOptions opt = cfg.match;
  opt.threads = cfg.threads;
  opt.max_len_triplet = cfg.train.max_len_triplet;
  MatchOutput result = run_matching(source, target, params, vocab, concepts, transe, opt);

  save_alignment_tsv(result.alignment, out);
  AlignmentRunMeta meta;
  meta.checkpoint_hash = fnv1a64_hex(read_text(model_path));
  meta.k = opt.k;
  meta.threshold = opt.threshold;
  meta.seed = cfg.seed;
  meta.elapsed_seconds = result.elapsed_seconds;
  if (!json_out.empty()) save_alignment_json(result.alignment, meta, json_out);

  std::printf("%zu mappings (%zu lexical-fallback sources) in %.2f(s) -> %s\n",
              result.alignment.mappings.size(), result.fallback_sources,
              result.elapsed_seconds, out.c_str());
  return 0;
}

int cmd_eval(const std::string& alignment_path, const std::string& reference_path,
             const std::string& fmt) {
  AlignmentSet alignment = load_alignment_tsv(alignment_path);
  ReferenceFormat ref_fmt = fmt == "json"  ? ReferenceFormat::Json
                            : fmt == "tsv" ? ReferenceFormat::Tsv
                                           : detect_reference_format(reference_path);
  ReferenceSet reference = load_reference(reference_path, ref_fmt);
  PrfResult prf = compute_prf(alignment, reference);
  std::printf("P=%.4f R=%.4f F=%.4f (|M|=%zu |M_ref|=%zu |M∩M_ref|=%zu)\n", prf.precision,
              prf.recall, prf.f1, alignment.mappings.size(), reference.pairs.size(),
              prf.intersection);
  if (reference.skipped_non_equivalence > 0 || reference.duplicates_collapsed > 0) {
    std::printf("reference: skipped %zu non-equivalence pairs, collapsed %zu duplicates\n",
                reference.skipped_non_equivalence, reference.duplicates_collapsed);
  }
  return 0;
}

int cmd_pipeline(const CommonOpts& common, const std::string& source_path,
                 const std::string& target_path, const std::string& out_dir,
                 const std::string& reference_path) {
  RunConfig cfg = common.resolve();
  Ontology source = load_ontology_auto(source_path);
  Ontology target = load_ontology_auto(target_path);
  std::optional<ReferenceSet> reference;
  if (!reference_path.empty()) {
    reference = load_reference(reference_path, detect_reference_format(reference_path));
  }
  PipelineResult result = run_pipeline(cfg, source, target, reference, out_dir);

  std::printf("corpus: %zu triplets, %zu paths, %zu masked paths%s\n", result.corpus_triplets,
              result.corpus_paths, result.corpus_masked_paths,
              result.corpus_shortfall ? " (with shortfalls)" : "");
  std::printf("mappings: %zu (%zu lexical-fallback sources)\n",
              result.alignment.mappings.size(), result.fallback_sources);
  if (result.prf) {
    std::printf("P=%.4f R=%.4f F=%.4f\n", result.prf->precision, result.prf->recall,
                result.prf->f1);
  }
  print_timings(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laker — contextual+structural self-supervised ontology matching"};
  app.require_subcommand(1);

  CommonOpts common;

  // parse
  auto* parse = app.add_subcommand("parse", "validate an ontology file and print its statistics");
  std::string parse_input, parse_fmt = "auto";
  parse->add_option("--input", parse_input, "ontology file")->required();
  parse->add_option("--format", parse_fmt, "json|obo|auto");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic source/target/reference trio");
  std::size_t synth_n = 50;
  std::uint64_t synth_seed = 7;
  double synth_deletion = 0.1;
  std::string synth_out;
  synth->add_option("--n", synth_n, "number of source concepts");
  synth->add_option("--seed", synth_seed, "generator seed");
  synth->add_option("--deletion-rate", synth_deletion, "fraction of concepts absent from target");
  synth->add_option("--out", synth_out, "output directory")->required();

  // corpus
  auto* corpus = app.add_subcommand("corpus", "build the masked training corpus");
  std::vector<std::string> corpus_inputs;
  std::string corpus_out;
  corpus->add_option("--ontology", corpus_inputs, "ontology file (repeatable)")->required();
  corpus->add_option("--out", corpus_out, "corpus output path")->required();
  add_common(corpus, common);

  // train
  auto* train_cmd = app.add_subcommand("train", "train the shared encoder on the four objectives");
  std::vector<std::string> train_inputs;
  std::string train_corpus, train_out;
  train_cmd->add_option("--ontology", train_inputs, "ontology file (repeatable)")->required();
  train_cmd->add_option("--corpus", train_corpus, "pre-built corpus (otherwise built in-run)");
  train_cmd->add_option("--out", train_out, "output directory")->required();
  add_common(train_cmd, common);

  // kge
  auto* kge = app.add_subcommand("kge", "train TransE relation embeddings");
  std::vector<std::string> kge_inputs;
  std::string kge_concepts, kge_out;
  kge->add_option("--ontology", kge_inputs, "ontology file (repeatable)")->required();
  kge->add_option("--concepts", kge_concepts, "concept vocab from training")->required();
  kge->add_option("--out", kge_out, "transe checkpoint path")->required();
  add_common(kge, common);

  // match
  auto* match = app.add_subcommand("match", "infer one-to-one equivalence mappings");
  std::string match_source, match_target, match_model, match_vocab, match_concepts,
      match_transe, match_out, match_json;
  match->add_option("--source", match_source, "source ontology")->required();
  match->add_option("--target", match_target, "target ontology")->required();
  match->add_option("--model", match_model, "encoder checkpoint")->required();
  match->add_option("--vocab", match_vocab, "token vocab file")->required();
  match->add_option("--concepts", match_concepts, "concept vocab file")->required();
  match->add_option("--transe", match_transe, "transe checkpoint")->required();
  match->add_option("--out", match_out, "alignment TSV path")->required();
  match->add_option("--json", match_json, "alignment JSON (with run metadata)");
  add_common(match, common);

  // eval
  auto* eval = app.add_subcommand("eval", "score an alignment against a reference");
  std::string eval_alignment, eval_reference, eval_fmt = "auto";
  eval->add_option("--alignment", eval_alignment, "alignment TSV")->required();
  eval->add_option("--reference", eval_reference, "reference mappings")->required();
  eval->add_option("--format", eval_fmt, "reference format: tsv|json|auto");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "corpus -> train -> kge -> match [-> eval]");
  std::string pipe_source, pipe_target, pipe_out, pipe_reference;
  pipe->add_option("--source", pipe_source, "source ontology")->required();
  pipe->add_option("--target", pipe_target, "target ontology")->required();
  pipe->add_option("--out", pipe_out, "output directory")->required();
  pipe->add_option("--reference", pipe_reference, "gold mappings for evaluation");
  add_common(pipe, common);

  CLI11_PARSE(app, argc, argv);

  try {
    if (parse->parsed()) return cmd_parse(parse_input, parse_fmt);
    if (synth->parsed()) return cmd_synth(synth_n, synth_seed, synth_out, synth_deletion);
    if (corpus->parsed()) return cmd_corpus(common, corpus_inputs, corpus_out);
    if (train_cmd->parsed()) return cmd_train(common, train_inputs, train_corpus, train_out);
    if (kge->parsed()) return cmd_kge(common, kge_inputs, kge_concepts, kge_out);
    if (match->parsed())
      return cmd_match(common, match_source, match_target, match_model, match_vocab,
                       match_concepts, match_transe, match_out, match_json);
    if (eval->parsed()) return cmd_eval(eval_alignment, eval_reference, eval_fmt);
    if (pipe->parsed())
      return cmd_pipeline(common, pipe_source, pipe_target, pipe_out, pipe_reference);
  } catch (const Error& e) {
    nlohmann::json err = {{"error", std::string(e.kind_name())}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err = {{"error", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
  return 0;
}
