#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "laker/tensor.hpp"
#include "laker/text.hpp"

namespace laker {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t d_model = 64;
  std::size_t ffn = 256;
  std::size_t max_positions = 160;
  double dropout = 0.0;  // desk-scale default; kept for config compatibility
  double ln_eps = 1e-5;

  std::size_t head_dim() const { return d_model / heads; }
  void validate() const;
};

struct LayerParams {
  std::vector<Tensor> w_q, w_k, w_v;  // per head, d_model x head_dim each
  Tensor w_o;                         // d_model x d_model
  Tensor ffn_w1, ffn_b1, ffn_w2, ffn_b2;
  Tensor ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;
};

// One parameter set shared by triplet and path encoding, plus the three
// prediction heads (relation MLP, path logit, concept logits).
struct ModelParams {
  EncoderConfig cfg;
  Tensor token_embedding;  // |vocab| x d
  Tensor pos_embedding;    // max_positions x d
  std::vector<LayerParams> layers;
  Tensor rel_w1, rel_b1, rel_w2, rel_b2;  // d -> d -> |Relation|
  Tensor path_w, path_b;                  // d -> 1
  Tensor concept_w, concept_b;            // d -> |ConceptVocab|

  bool initialized() const { return token_embedding.defined(); }
  std::size_t vocab_size() const { return token_embedding.shape()[0]; }
  std::size_t concept_count() const { return concept_w.shape()[1]; }
  std::vector<std::pair<std::string, Tensor>> named_tensors() const;
  std::vector<Tensor> all_tensors() const;
};

// Weights ~ Normal(0, 0.02), biases zero, layer-norm affine at (1, 0).
ModelParams init_params(const EncoderConfig& cfg, std::size_t vocab_size,
                        std::size_t concept_count, std::uint64_t seed);

// Rebuilds ModelParams from named checkpoint tensors, validating shapes.
ModelParams assemble_params(const EncoderConfig& cfg,
                            const std::vector<std::pair<std::string, Tensor>>& tensors);

// Full post-norm block: masked multi-head attention + FFN with residuals.
// pad_mask[i] == 0 marks a padding position; empty means no padding.
Tensor mha_layer(const Tensor& x, const LayerParams& layer, const EncoderConfig& cfg,
                 const std::vector<std::uint8_t>& pad_mask);

// Per-head attention probabilities (forward only), for inspection and tests.
std::vector<Tensor> attention_probs(const Tensor& x, const LayerParams& layer,
                                    const EncoderConfig& cfg,
                                    const std::vector<std::uint8_t>& pad_mask);

struct Encoded {
  Tensor hidden;   // N x d final-layer states
  Tensor feature;  // 1 x d, the final-layer [CLS] state
};

Encoded encode(const TokenSeq& seq, const ModelParams& params);
// Same, with the sequence right-padded to pad_to positions.
Encoded encode_padded(const TokenSeq& seq, std::size_t pad_to, const ModelParams& params);

enum class PredictionHead { Concept, Relation };

// Concept head: per-slot logits over the concept vocabulary from the hidden
// state at the slot. Relation head: sequence-level logits from the [CLS]
// feature via the two-layer MLP.
Tensor predict_masked(const Encoded& enc, const std::vector<MaskSlot>& slots,
                      PredictionHead head, const ModelParams& params);

// [CLS] feature passed through the binary path classifier, shape 1x1.
Tensor path_logit(const Encoded& enc, const ModelParams& params);

std::size_t relation_index(Relation r);

}  // namespace laker
