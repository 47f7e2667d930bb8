#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "laker/adam.hpp"
#include "laker/encoder.hpp"

namespace laker {

struct TrainConfig {
  std::size_t epochs = 5;
  std::size_t steps = 0;  // 0: derived from epochs over the triplet stream
  std::size_t batch_size = 32;
  double lr = 5e-5;
  double tau = 2.0;
  std::uint64_t seed = 0;
  double w_c2c = 1.0, w_c2r = 1.0, w_cpath = 1.0, w_mpath = 1.0;
  bool use_c2c = true, use_c2r = true, use_cpath = true, use_mpath = true;
  std::size_t max_len_triplet = 64;
  std::size_t max_len_path = 160;

  void validate() const;
};

struct LossReport {
  std::size_t step = 0;
  double c2c = 0.0, c2r = 0.0, cpath = 0.0, mpath = 0.0;
  double total = 0.0;
};

// The contrastive formula over already-extracted feature rows: row i of `a`
// pairs with row i of `b`, every other row is an in-batch negative.
Tensor c2c_from_features(const Tensor& a, const Tensor& b, double tau);

// In-batch contrastive loss over the masked views (h,r,[MASK]) vs
// ([MASK],[MASK],t); row i's positive is column i, temperature tau.
Tensor loss_c2c(const std::vector<const MaskedTriplet*>& batch, const ModelParams& params,
                const Vocab& vocab, const ConceptVocab& concepts, double tau,
                std::size_t max_len);

// Relation classification from the (h,[MASK],t) view; negatives carry the
// NoRelation label.
Tensor loss_c2r(const std::vector<const MaskedTriplet*>& batch, const ModelParams& params,
                const Vocab& vocab, const ConceptVocab& concepts, std::size_t max_len);

// Binary path-polarity classification on the [CLS] feature.
Tensor loss_cpath(const std::vector<const Path*>& batch, const ModelParams& params,
                  const Vocab& vocab, std::size_t max_len);

// Masked concept prediction over paths; mean cross-entropy over all slots.
Tensor loss_mpath(const std::vector<const MaskedPath*>& batch, const ModelParams& params,
                  const Vocab& vocab, const ConceptVocab& concepts, std::size_t max_len);

struct TrainResult {
  std::vector<LossReport> reports;
  std::size_t steps_run = 0;
};

std::string loss_report_csv_header();
std::string loss_report_csv_row(const LossReport& r);

// Round-robin training over the four corpus streams; one optimizer step per
// training step on the weighted sum of the enabled objectives. Deterministic
// under (corpus, params seed, cfg.seed). Streams the CSV report when csv is
// non-null.
TrainResult train(const Corpus& corpus, const Vocab& vocab, const ConceptVocab& concepts,
                  ModelParams& params, const TrainConfig& cfg, std::ostream* csv = nullptr);

}  // namespace laker
