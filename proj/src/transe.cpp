#include "laker/transe.hpp"

#include <algorithm>
#include <cmath>

namespace laker {

namespace {

double distance_raw(const std::vector<double>& entities, const std::vector<double>& relations,
                    std::size_t dim, const IdTriplet& t) {
  double s = 0.0;
  const double* h = entities.data() + t.head * dim;
  const double* r = relations.data() + t.relation * dim;
  const double* tl = entities.data() + t.tail * dim;
  for (std::size_t i = 0; i < dim; ++i) {
    double d = h[i] + r[i] - tl[i];
    s += d * d;
  }
  return std::sqrt(s);
}

IdTriplet corrupt(const IdTriplet& t, std::size_t entity_count, Rng& rng) {
  IdTriplet c = t;
  bool corrupt_head = rng.bernoulli(0.5);
  std::size_t pick = rng.below(entity_count);
  if (corrupt_head) {
    while (pick == t.head && entity_count > 1) pick = rng.below(entity_count);
    c.head = pick;
  } else {
    while (pick == t.tail && entity_count > 1) pick = rng.below(entity_count);
    c.tail = pick;
  }
  return c;
}

void normalize_rows(std::vector<double>& m, std::size_t rows, std::size_t dim) {
  for (std::size_t i = 0; i < rows; ++i) {
    double* row = m.data() + i * dim;
    double n = 0.0;
    for (std::size_t j = 0; j < dim; ++j) n += row[j] * row[j];
    n = std::sqrt(n);
    if (n > 0.0) {
      for (std::size_t j = 0; j < dim; ++j) row[j] /= n;
    }
  }
}

}  // namespace

void TransEConfig::validate() const {
  if (dim < 1) throw Error(ErrorKind::ConfigError, "transe dim must be >= 1");
  if (margin <= 0.0) throw Error(ErrorKind::ConfigError, "transe margin must be positive");
  if (neg_per_pos < 1) throw Error(ErrorKind::ConfigError, "transe neg_per_pos must be >= 1");
}

const double* TransEEmbeddings::entity(std::size_t idx) const {
  if (idx >= entity_count) {
    throw Error(ErrorKind::UnknownConcept, "entity index out of range");
  }
  return entities.data() + idx * dim;
}

const double* TransEEmbeddings::relation(std::size_t idx) const {
  if (idx >= kTransERelations) {
    throw Error(ErrorKind::ValidationError, "relation index out of range");
  }
  return relations.data() + idx * dim;
}

std::vector<IdTriplet> id_triplets(const std::vector<Triplet>& positives,
                                   const ConceptVocab& concepts) {
  std::vector<IdTriplet> out;
  for (const auto& t : positives) {
    if (t.polarity != Polarity::Positive) continue;
    if (t.relation == Relation::NoRelation) {
      throw Error(ErrorKind::ValidationError, "NoRelation cannot appear in the TransE graph");
    }
    out.push_back({concepts.index_of(t.head_id), static_cast<std::size_t>(t.relation),
                   concepts.index_of(t.tail_id)});
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

TransEEmbeddings train_transe(const std::vector<IdTriplet>& triplets, std::size_t entity_count,
                              const TransEConfig& cfg) {
  cfg.validate();
  if (triplets.empty() || entity_count == 0) {
    throw Error(ErrorKind::EmptyGraph, "TransE needs at least one positive triplet");
  }
  for (const auto& t : triplets) {
    if (t.head >= entity_count || t.tail >= entity_count || t.relation >= kTransERelations) {
      throw Error(ErrorKind::ValidationError, "triplet index out of range");
    }
  }

  TransEEmbeddings emb;
  emb.dim = cfg.dim;
  emb.entity_count = entity_count;
  emb.entities.resize(entity_count * cfg.dim);
  emb.relations.resize(kTransERelations * cfg.dim);

  Rng init_rng = Rng::derive(cfg.seed, 1);
  double bound = 6.0 / std::sqrt(static_cast<double>(cfg.dim));
  for (auto& v : emb.entities) v = (init_rng.uniform() * 2.0 - 1.0) * bound;
  for (auto& v : emb.relations) v = (init_rng.uniform() * 2.0 - 1.0) * bound;
  normalize_rows(emb.entities, entity_count, cfg.dim);
  normalize_rows(emb.relations, kTransERelations, cfg.dim);

  // Fixed held-out corruption set for the epoch-loss guard.
  Rng eval_rng = Rng::derive(cfg.seed, 2);
  std::vector<IdTriplet> eval_neg;
  eval_neg.reserve(triplets.size());
  for (const auto& t : triplets) eval_neg.push_back(corrupt(t, entity_count, eval_rng));

  auto eval_loss = [&](const std::vector<double>& entities,
                       const std::vector<double>& relations) {
    double loss = 0.0;
    for (std::size_t i = 0; i < triplets.size(); ++i) {
      double pos = distance_raw(entities, relations, cfg.dim, triplets[i]);
      double neg = distance_raw(entities, relations, cfg.dim, eval_neg[i]);
      loss += std::max(0.0, cfg.margin + pos - neg);
    }
    return loss / static_cast<double>(triplets.size());
  };

  double lr = cfg.lr;
  std::vector<double> best_entities = emb.entities;
  std::vector<double> best_relations = emb.relations;
  double best_loss = eval_loss(emb.entities, emb.relations);

  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<double> grad(cfg.dim);
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng rng = Rng::derive(cfg.seed, 100 + epoch);
    rng.shuffle(order);

    for (auto idx : order) {
      const IdTriplet& pos = triplets[idx];
      for (std::size_t j = 0; j < cfg.neg_per_pos; ++j) {
        IdTriplet neg = corrupt(pos, entity_count, rng);
        double dp = distance_raw(emb.entities, emb.relations, cfg.dim, pos);
        double dn = distance_raw(emb.entities, emb.relations, cfg.dim, neg);
        if (cfg.margin + dp - dn <= 0.0) continue;

        double* hp = emb.entities.data() + pos.head * cfg.dim;
        double* tp = emb.entities.data() + pos.tail * cfg.dim;
        double* hn = emb.entities.data() + neg.head * cfg.dim;
        double* tn = emb.entities.data() + neg.tail * cfg.dim;
        double* r = emb.relations.data() + pos.relation * cfg.dim;

        // d||h+r-t|| / dh = (h+r-t)/||h+r-t||; descend on pos, ascend on neg
        if (dp > 1e-12) {
          for (std::size_t i = 0; i < cfg.dim; ++i) grad[i] = (hp[i] + r[i] - tp[i]) / dp;
          for (std::size_t i = 0; i < cfg.dim; ++i) {
            hp[i] -= lr * grad[i];
            r[i] -= lr * grad[i];
            tp[i] += lr * grad[i];
          }
        }
        if (dn > 1e-12) {
          for (std::size_t i = 0; i < cfg.dim; ++i) grad[i] = (hn[i] + r[i] - tn[i]) / dn;
          for (std::size_t i = 0; i < cfg.dim; ++i) {
            hn[i] += lr * grad[i];
            r[i] += lr * grad[i];
            tn[i] -= lr * grad[i];
          }
        }
      }
    }

    normalize_rows(emb.entities, entity_count, cfg.dim);

    double loss = eval_loss(emb.entities, emb.relations);
    if (loss <= best_loss) {
      best_loss = loss;
      best_entities = emb.entities;
      best_relations = emb.relations;
    } else {
      emb.entities = best_entities;
      emb.relations = best_relations;
      lr *= 0.5;
    }
    emb.epoch_losses.push_back(best_loss);
  }

  emb.entities = std::move(best_entities);
  emb.relations = std::move(best_relations);
  return emb;
}

double transe_distance(const TransEEmbeddings& emb, std::size_t head, std::size_t relation,
                       std::size_t tail) {
  return distance_raw(emb.entities, emb.relations, emb.dim, {head, relation, tail});
}

std::vector<double> embed_concept(const ConceptId& id, const TransEEmbeddings& emb,
                                  const ConceptVocab& concepts) {
  std::size_t idx = concepts.index_of(id);
  const double* row = emb.entity(idx);
  return std::vector<double>(row, row + emb.dim);
}

}  // namespace laker
