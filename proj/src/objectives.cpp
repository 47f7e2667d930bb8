#include "laker/objectives.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

namespace laker {

namespace {

constexpr std::uint64_t kStreamC2c = 10ull << 40;
constexpr std::uint64_t kStreamC2r = 11ull << 40;
constexpr std::uint64_t kStreamCpath = 12ull << 40;
constexpr std::uint64_t kStreamMpath = 13ull << 40;

// Cycles through a shuffled stream, reshuffling per pass.
template <typename T>
class Batcher {
 public:
  Batcher(std::vector<const T*> items, std::uint64_t seed, std::uint64_t stream_tag)
      : items_(std::move(items)), seed_(seed), tag_(stream_tag) {
    reshuffle();
  }

  bool empty() const { return items_.empty(); }
  std::size_t size() const { return items_.size(); }

  std::vector<const T*> next(std::size_t batch_size) {
    std::vector<const T*> batch;
    if (items_.empty()) return batch;
    batch_size = std::min(batch_size, items_.size());
    while (batch.size() < batch_size) {
      if (cursor_ == items_.size()) reshuffle();
      batch.push_back(items_[cursor_++]);
    }
    return batch;
  }

 private:
  void reshuffle() {
    Rng rng = Rng::derive(seed_, tag_ + pass_);
    rng.shuffle(items_);
    cursor_ = 0;
    ++pass_;
  }

  std::vector<const T*> items_;
  std::uint64_t seed_;
  std::uint64_t tag_;
  std::uint64_t pass_ = 0;
  std::size_t cursor_ = 0;
};

void check_report_finite(const LossReport& r) {
  for (double v : {r.c2c, r.c2r, r.cpath, r.mpath, r.total}) {
    if (!std::isfinite(v)) {
      throw Error(ErrorKind::NonFiniteInput, "training loss diverged to a non-finite value");
    }
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 2) {
    throw Error(ErrorKind::BatchTooSmall, "batch_size must be >= 2 for in-batch negatives");
  }
  if (tau <= 0.0) throw Error(ErrorKind::ConfigError, "tau must be positive");
  if (steps == 0 && epochs == 0) {
    throw Error(ErrorKind::ConfigError, "either steps or epochs must be positive");
  }
}

Tensor c2c_from_features(const Tensor& a, const Tensor& b, double tau) {
  if (a.shape() != b.shape() || a.rank() != 2 || a.shape()[0] < 2) {
    throw Error(ErrorKind::BatchTooSmall, "contrastive loss needs matching feature rows >= 2");
  }
  if (tau <= 0.0) throw Error(ErrorKind::ConfigError, "tau must be positive");
  Tensor logits = scale(matmul(l2_normalize(a), transpose(l2_normalize(b))), 1.0 / tau);
  std::vector<std::size_t> targets(a.shape()[0]);
  for (std::size_t i = 0; i < targets.size(); ++i) targets[i] = i;
  return cross_entropy(logits, targets);
}

Tensor loss_c2c(const std::vector<const MaskedTriplet*>& batch, const ModelParams& params,
                const Vocab& vocab, const ConceptVocab& concepts, double tau,
                std::size_t max_len) {
  if (batch.size() < 2) {
    throw Error(ErrorKind::BatchTooSmall, "contrastive loss needs a batch of >= 2");
  }
  std::vector<Tensor> a_rows, b_rows;
  a_rows.reserve(batch.size());
  b_rows.reserve(batch.size());
  for (const auto* mt : batch) {
    a_rows.push_back(
        encode(verbalize_triplet(*mt, TripletView::TailMasked, vocab, concepts, max_len), params)
            .feature);
    b_rows.push_back(
        encode(verbalize_triplet(*mt, TripletView::HeadRelMasked, vocab, concepts, max_len),
               params)
            .feature);
  }
  return c2c_from_features(concat(a_rows, 0), concat(b_rows, 0), tau);
}

Tensor loss_c2r(const std::vector<const MaskedTriplet*>& batch, const ModelParams& params,
                const Vocab& vocab, const ConceptVocab& concepts, std::size_t max_len) {
  if (batch.empty()) throw Error(ErrorKind::BatchTooSmall, "empty relation batch");
  std::vector<Tensor> rows;
  std::vector<std::size_t> targets;
  rows.reserve(batch.size());
  for (const auto* mt : batch) {
    auto seq = verbalize_triplet(*mt, TripletView::RelMasked, vocab, concepts, max_len);
    rows.push_back(predict_masked(encode(seq, params), seq.mask_slots, PredictionHead::Relation,
                                  params));
    targets.push_back(relation_index(mt->relation_label));
  }
  return cross_entropy(concat(rows, 0), targets);
}

Tensor loss_cpath(const std::vector<const Path*>& batch, const ModelParams& params,
                  const Vocab& vocab, std::size_t max_len) {
  if (batch.empty()) throw Error(ErrorKind::BatchTooSmall, "empty path batch");
  std::vector<Tensor> logits;
  std::vector<double> labels;
  logits.reserve(batch.size());
  for (const auto* p : batch) {
    logits.push_back(path_logit(encode(verbalize_path(*p, vocab, max_len), params), params));
    labels.push_back(p->polarity == Polarity::Positive ? 1.0 : 0.0);
  }
  return bce(concat(logits, 0), labels);
}

Tensor loss_mpath(const std::vector<const MaskedPath*>& batch, const ModelParams& params,
                  const Vocab& vocab, const ConceptVocab& concepts, std::size_t max_len) {
  if (batch.empty()) throw Error(ErrorKind::BatchTooSmall, "empty masked-path batch");
  std::vector<Tensor> slot_logits;
  std::vector<std::size_t> targets;
  for (const auto* mp : batch) {
    auto seq = verbalize_masked_path(*mp, vocab, concepts, max_len);
    if (seq.mask_slots.empty()) {
      throw Error(ErrorKind::BadSlot, "masked path lost its mask slots");
    }
    slot_logits.push_back(
        predict_masked(encode(seq, params), seq.mask_slots, PredictionHead::Concept, params));
    for (const auto& slot : seq.mask_slots) targets.push_back(slot.target);
  }
  return cross_entropy(concat(slot_logits, 0), targets);
}

std::string loss_report_csv_header() { return "step,c2c,c2r,cpath,mpath,total"; }

std::string loss_report_csv_row(const LossReport& r) {
  std::ostringstream out;
  out.precision(10);
  out << r.step << ',' << r.c2c << ',' << r.c2r << ',' << r.cpath << ',' << r.mpath << ','
      << r.total;
  return out.str();
}

TrainResult train(const Corpus& corpus, const Vocab& vocab, const ConceptVocab& concepts,
                  ModelParams& params, const TrainConfig& cfg, std::ostream* csv) {
  cfg.validate();
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "training corpus is empty");
  if (!params.initialized()) {
    throw Error(ErrorKind::UntrainedModel, "model parameters are not initialized");
  }

  std::vector<const MaskedTriplet*> positives, all_triplets;
  for (const auto& mt : corpus.triplets) {
    all_triplets.push_back(&mt);
    if (mt.base.polarity == Polarity::Positive) positives.push_back(&mt);
  }
  std::vector<const Path*> paths;
  for (const auto& p : corpus.paths) paths.push_back(&p);
  std::vector<const MaskedPath*> masked;
  for (const auto& mp : corpus.masked_paths) masked.push_back(&mp);

  bool run_c2c = cfg.use_c2c && positives.size() >= 2;
  bool run_c2r = cfg.use_c2r && !all_triplets.empty();
  bool run_cpath = cfg.use_cpath && !paths.empty();
  bool run_mpath = cfg.use_mpath && !masked.empty();
  if (!run_c2c && !run_c2r && !run_cpath && !run_mpath) {
    throw Error(ErrorKind::EmptyCorpus, "no usable training stream for the enabled objectives");
  }

  Batcher<MaskedTriplet> c2c_stream(positives, cfg.seed, kStreamC2c);
  Batcher<MaskedTriplet> c2r_stream(all_triplets, cfg.seed, kStreamC2r);
  Batcher<Path> cpath_stream(paths, cfg.seed, kStreamCpath);
  Batcher<MaskedPath> mpath_stream(masked, cfg.seed, kStreamMpath);

  std::size_t steps = cfg.steps;
  if (steps == 0) {
    std::size_t per_epoch =
        (all_triplets.size() + cfg.batch_size - 1) / std::max<std::size_t>(1, cfg.batch_size);
    steps = cfg.epochs * std::max<std::size_t>(1, per_epoch);
  }

  AdamConfig adam_cfg;
  adam_cfg.lr = cfg.lr;
  Adam opt(params.all_tensors(), adam_cfg);

  TrainResult result;
  if (csv) *csv << loss_report_csv_header() << "\n";

  for (std::size_t step = 0; step < steps; ++step) {
    LossReport report;
    report.step = step;

    Tensor total;
    auto accumulate = [&](Tensor term, double weight, double& into) {
      into = term.item();
      Tensor weighted = scale(term, weight);
      total = total.defined() ? add(total, weighted) : weighted;
    };

    if (run_c2c) {
      accumulate(loss_c2c(c2c_stream.next(cfg.batch_size), params, vocab, concepts, cfg.tau,
                          cfg.max_len_triplet),
                 cfg.w_c2c, report.c2c);
    }
    if (run_c2r) {
      accumulate(loss_c2r(c2r_stream.next(cfg.batch_size), params, vocab, concepts,
                          cfg.max_len_triplet),
                 cfg.w_c2r, report.c2r);
    }
    if (run_cpath) {
      accumulate(loss_cpath(cpath_stream.next(cfg.batch_size), params, vocab, cfg.max_len_path),
                 cfg.w_cpath, report.cpath);
    }
    if (run_mpath) {
      accumulate(loss_mpath(mpath_stream.next(cfg.batch_size), params, vocab, concepts,
                            cfg.max_len_path),
                 cfg.w_mpath, report.mpath);
    }

    report.total = total.item();
    check_report_finite(report);

    backward(total);
    opt.step();
    opt.zero_grad();

    if (csv) *csv << loss_report_csv_row(report) << "\n";
    result.reports.push_back(report);
  }
  result.steps_run = steps;
  return result;
}

}  // namespace laker
