#pragma once

#include <cstdint>
#include <vector>

#include "laker/extract.hpp"
#include "laker/text.hpp"

namespace laker {

struct TransEConfig {
  std::size_t dim = 32;
  double margin = 1.0;  // gamma
  double lr = 0.01;
  std::size_t epochs = 100;
  std::size_t neg_per_pos = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IdTriplet {
  std::size_t head = 0;
  std::size_t relation = 0;  // 0 SubClassOf, 1 DisjointWith, 2 Synonym
  std::size_t tail = 0;

  auto operator<=>(const IdTriplet&) const = default;
};

constexpr std::size_t kTransERelations = 3;  // NoRelation never appears in edges

struct TransEEmbeddings {
  std::size_t dim = 0;
  std::size_t entity_count = 0;
  std::vector<double> entities;   // entity_count x dim, L2-normalized rows
  std::vector<double> relations;  // kTransERelations x dim
  std::vector<double> epoch_losses;  // non-increasing under the lr-halving guard

  const double* entity(std::size_t idx) const;
  const double* relation(std::size_t idx) const;
};

// Deduplicated, sorted id-level positives over the concept vocabulary.
std::vector<IdTriplet> id_triplets(const std::vector<Triplet>& positives,
                                   const ConceptVocab& concepts);

// Margin ranking over L2 distances with uniform head/tail corruption.
// Entity rows are re-normalized after every epoch; an epoch whose held-out
// loss worsens is rolled back and the learning rate halved.
TransEEmbeddings train_transe(const std::vector<IdTriplet>& triplets, std::size_t entity_count,
                              const TransEConfig& cfg);

double transe_distance(const TransEEmbeddings& emb, std::size_t head, std::size_t relation,
                       std::size_t tail);

std::vector<double> embed_concept(const ConceptId& id, const TransEEmbeddings& emb,
                                  const ConceptVocab& concepts);

}  // namespace laker
