#include "laker/encoder.hpp"

#include <cmath>
#include <map>

namespace laker {

namespace {

Tensor pad_bias(const std::vector<std::uint8_t>& pad_mask, std::size_t n) {
  std::vector<double> bias(n * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    if (!pad_mask[j]) {
      for (std::size_t i = 0; i < n; ++i) bias[i * n + j] = -1e30;
    }
  }
  return Tensor::from({n, n}, std::move(bias));
}

Tensor ln_affine(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  return add_rowvec(mul_rowvec(layer_norm(x, eps), gamma), beta);
}

}  // namespace

void EncoderConfig::validate() const {
  if (layers == 0 || heads == 0 || d_model == 0 || ffn == 0 || max_positions == 0) {
    throw Error(ErrorKind::ConfigError, "encoder dimensions must be positive");
  }
  if (d_model % heads != 0) {
    throw Error(ErrorKind::ConfigError, "d_model must be divisible by heads");
  }
}

std::size_t relation_index(Relation r) { return static_cast<std::size_t>(r); }

ModelParams init_params(const EncoderConfig& cfg, std::size_t vocab_size,
                        std::size_t concept_count, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const double std = 0.02;
  std::size_t d = cfg.d_model, dk = cfg.head_dim();

  auto weight = [&](std::vector<std::size_t> shape) {
    return Tensor::randn(std::move(shape), rng, std, true);
  };
  auto zeros = [&](std::vector<std::size_t> shape) {
    return Tensor::zeros(std::move(shape), true);
  };
  auto ones = [&](std::vector<std::size_t> shape) {
    return Tensor::full(std::move(shape), 1.0, true);
  };

  ModelParams p;
  p.cfg = cfg;
  p.token_embedding = weight({vocab_size, d});
  p.pos_embedding = weight({cfg.max_positions, d});
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    LayerParams layer;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      layer.w_q.push_back(weight({d, dk}));
      layer.w_k.push_back(weight({d, dk}));
      layer.w_v.push_back(weight({d, dk}));
    }
    layer.w_o = weight({d, d});
    layer.ffn_w1 = weight({d, cfg.ffn});
    layer.ffn_b1 = zeros({cfg.ffn});
    layer.ffn_w2 = weight({cfg.ffn, d});
    layer.ffn_b2 = zeros({d});
    layer.ln1_gamma = ones({d});
    layer.ln1_beta = zeros({d});
    layer.ln2_gamma = ones({d});
    layer.ln2_beta = zeros({d});
    p.layers.push_back(std::move(layer));
  }
  p.rel_w1 = weight({d, d});
  p.rel_b1 = zeros({d});
  p.rel_w2 = weight({d, kRelationCount});
  p.rel_b2 = zeros({kRelationCount});
  p.path_w = weight({d, 1});
  p.path_b = zeros({1});
  p.concept_w = weight({d, concept_count});
  p.concept_b = zeros({concept_count});
  return p;
}

std::vector<std::pair<std::string, Tensor>> ModelParams::named_tensors() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("token_embedding", token_embedding);
  out.emplace_back("pos_embedding", pos_embedding);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    const auto& lay = layers[l];
    for (std::size_t h = 0; h < lay.w_q.size(); ++h) {
      std::string hs = std::to_string(h);
      out.emplace_back(prefix + "w_q" + hs, lay.w_q[h]);
      out.emplace_back(prefix + "w_k" + hs, lay.w_k[h]);
      out.emplace_back(prefix + "w_v" + hs, lay.w_v[h]);
    }
    out.emplace_back(prefix + "w_o", lay.w_o);
    out.emplace_back(prefix + "ffn_w1", lay.ffn_w1);
    out.emplace_back(prefix + "ffn_b1", lay.ffn_b1);
    out.emplace_back(prefix + "ffn_w2", lay.ffn_w2);
    out.emplace_back(prefix + "ffn_b2", lay.ffn_b2);
    out.emplace_back(prefix + "ln1_gamma", lay.ln1_gamma);
    out.emplace_back(prefix + "ln1_beta", lay.ln1_beta);
    out.emplace_back(prefix + "ln2_gamma", lay.ln2_gamma);
    out.emplace_back(prefix + "ln2_beta", lay.ln2_beta);
  }
  out.emplace_back("rel_w1", rel_w1);
  out.emplace_back("rel_b1", rel_b1);
  out.emplace_back("rel_w2", rel_w2);
  out.emplace_back("rel_b2", rel_b2);
  out.emplace_back("path_w", path_w);
  out.emplace_back("path_b", path_b);
  out.emplace_back("concept_w", concept_w);
  out.emplace_back("concept_b", concept_b);
  return out;
}

std::vector<Tensor> ModelParams::all_tensors() const {
  std::vector<Tensor> out;
  for (auto& [_, t] : named_tensors()) out.push_back(t);
  return out;
}

ModelParams assemble_params(const EncoderConfig& cfg,
                            const std::vector<std::pair<std::string, Tensor>>& tensors) {
  cfg.validate();
  std::map<std::string, Tensor> by_name(tensors.begin(), tensors.end());
  auto take = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw Error(ErrorKind::ValidationError, "checkpoint missing tensor '" + name + "'");
    }
    return it->second;
  };

  ModelParams p;
  p.cfg = cfg;
  p.token_embedding = take("token_embedding");
  p.pos_embedding = take("pos_embedding");
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    LayerParams lay;
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      std::string hs = std::to_string(h);
      lay.w_q.push_back(take(prefix + "w_q" + hs));
      lay.w_k.push_back(take(prefix + "w_k" + hs));
      lay.w_v.push_back(take(prefix + "w_v" + hs));
    }
    lay.w_o = take(prefix + "w_o");
    lay.ffn_w1 = take(prefix + "ffn_w1");
    lay.ffn_b1 = take(prefix + "ffn_b1");
    lay.ffn_w2 = take(prefix + "ffn_w2");
    lay.ffn_b2 = take(prefix + "ffn_b2");
    lay.ln1_gamma = take(prefix + "ln1_gamma");
    lay.ln1_beta = take(prefix + "ln1_beta");
    lay.ln2_gamma = take(prefix + "ln2_gamma");
    lay.ln2_beta = take(prefix + "ln2_beta");
    p.layers.push_back(std::move(lay));
  }
  p.rel_w1 = take("rel_w1");
  p.rel_b1 = take("rel_b1");
  p.rel_w2 = take("rel_w2");
  p.rel_b2 = take("rel_b2");
  p.path_w = take("path_w");
  p.path_b = take("path_b");
  p.concept_w = take("concept_w");
  p.concept_b = take("concept_b");

  if (p.token_embedding.shape()[1] != cfg.d_model ||
      p.pos_embedding.shape() != std::vector<std::size_t>{cfg.max_positions, cfg.d_model}) {
    throw Error(ErrorKind::ShapeMismatch, "checkpoint tensors do not match encoder config");
  }
  return p;
}

std::vector<Tensor> attention_probs(const Tensor& x, const LayerParams& layer,
                                    const EncoderConfig& cfg,
                                    const std::vector<std::uint8_t>& pad_mask) {
  NoGradGuard ng;
  std::size_t n = x.shape()[0];
  double inv_sqrt_dq = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  Tensor bias;
  if (!pad_mask.empty()) bias = pad_bias(pad_mask, n);
  std::vector<Tensor> probs;
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Tensor q = matmul(x, layer.w_q[h]);
    Tensor k = matmul(x, layer.w_k[h]);
    Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_dq);
    if (bias.defined()) scores = add(scores, bias);
    probs.push_back(softmax(scores));
  }
  return probs;
}

Tensor mha_layer(const Tensor& x, const LayerParams& layer, const EncoderConfig& cfg,
                 const std::vector<std::uint8_t>& pad_mask) {
  std::size_t n = x.shape()[0];
  if (x.shape()[1] != cfg.d_model) {
    throw Error(ErrorKind::ShapeMismatch, "mha_layer input width != d_model");
  }
  if (!pad_mask.empty() && pad_mask.size() != n) {
    throw Error(ErrorKind::ShapeMismatch, "pad mask length != sequence length");
  }

  double inv_sqrt_dq = 1.0 / std::sqrt(static_cast<double>(cfg.head_dim()));
  Tensor bias;
  if (!pad_mask.empty()) bias = pad_bias(pad_mask, n);

  std::vector<Tensor> heads;
  heads.reserve(cfg.heads);
  for (std::size_t h = 0; h < cfg.heads; ++h) {
    Tensor q = matmul(x, layer.w_q[h]);
    Tensor k = matmul(x, layer.w_k[h]);
    Tensor v = matmul(x, layer.w_v[h]);
    Tensor scores = scale(matmul(q, transpose(k)), inv_sqrt_dq);
    if (bias.defined()) scores = add(scores, bias);
    heads.push_back(matmul(softmax(scores), v));
  }
  Tensor attn = matmul(concat(heads, 1), layer.w_o);
  Tensor x1 = ln_affine(add(x, attn), layer.ln1_gamma, layer.ln1_beta, cfg.ln_eps);

  Tensor hidden = relu(add_rowvec(matmul(x1, layer.ffn_w1), layer.ffn_b1));
  Tensor ffn_out = add_rowvec(matmul(hidden, layer.ffn_w2), layer.ffn_b2);
  return ln_affine(add(x1, ffn_out), layer.ln2_gamma, layer.ln2_beta, cfg.ln_eps);
}

namespace {

Encoded encode_ids(const std::vector<std::size_t>& ids,
                   const std::vector<std::uint8_t>& pad_mask, const ModelParams& params) {
  if (!params.initialized()) {
    throw Error(ErrorKind::UntrainedModel, "model parameters are not initialized");
  }
  std::size_t n = ids.size();
  if (n == 0) throw Error(ErrorKind::ValidationError, "cannot encode an empty sequence");
  if (n > params.cfg.max_positions) {
    throw Error(ErrorKind::ShapeMismatch, "sequence longer than max_positions");
  }
  for (auto id : ids) {
    if (id >= params.vocab_size()) {
      throw Error(ErrorKind::BadSlot, "token id out of vocabulary range");
    }
  }

  std::vector<std::size_t> positions(n);
  for (std::size_t i = 0; i < n; ++i) positions[i] = i;
  Tensor x = add(gather_rows(params.token_embedding, ids),
                 gather_rows(params.pos_embedding, positions));
  for (const auto& layer : params.layers) {
    x = mha_layer(x, layer, params.cfg, pad_mask);
  }
  return {x, gather_rows(x, {0})};
}

}  // namespace

Encoded encode(const TokenSeq& seq, const ModelParams& params) {
  return encode_ids(seq.ids, {}, params);
}

Encoded encode_padded(const TokenSeq& seq, std::size_t pad_to, const ModelParams& params) {
  if (pad_to < seq.ids.size()) {
    throw Error(ErrorKind::ShapeMismatch, "pad_to shorter than the sequence");
  }
  std::vector<std::size_t> ids = seq.ids;
  std::vector<std::uint8_t> mask(pad_to, 1);
  for (std::size_t i = seq.ids.size(); i < pad_to; ++i) {
    ids.push_back(Vocab::kPad);
    mask[i] = 0;
  }
  return encode_ids(ids, mask, params);
}

Tensor predict_masked(const Encoded& enc, const std::vector<MaskSlot>& slots,
                      PredictionHead head, const ModelParams& params) {
  if (head == PredictionHead::Relation) {
    Tensor h = relu(add_rowvec(matmul(enc.feature, params.rel_w1), params.rel_b1));
    return add_rowvec(matmul(h, params.rel_w2), params.rel_b2);
  }
  if (slots.empty()) {
    throw Error(ErrorKind::BadSlot, "concept prediction needs at least one mask slot");
  }
  std::size_t n = enc.hidden.shape()[0];
  std::vector<std::size_t> positions;
  for (const auto& s : slots) {
    if (s.position >= n) throw Error(ErrorKind::BadSlot, "mask slot outside the sequence");
    positions.push_back(s.position);
  }
  Tensor states = gather_rows(enc.hidden, positions);
  return add_rowvec(matmul(states, params.concept_w), params.concept_b);
}

Tensor path_logit(const Encoded& enc, const ModelParams& params) {
  return add_rowvec(matmul(enc.feature, params.path_w), params.path_b);
}

}  // namespace laker
