#include "fcre/geometry.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

namespace fcre {

int RankTable::rank_of(RelationId r) const {
  for (std::size_t i = 0; i < relations.size(); ++i) {
    if (relations[i] == r) return ranks[i];
  }
  throw DomainError("rank table: unknown relation " + std::to_string(r));
}

RankTable rank_scores(std::span<const RelationId> relations, std::span<const double> scores) {
  if (relations.empty()) throw DomainError("rank_scores: no relations");
  if (relations.size() != scores.size()) {
    throw DomainError("rank_scores: relation and score counts differ");
  }
  std::unordered_set<RelationId> seen;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (std::isnan(scores[i])) {
      throw DomainError("rank_scores: NaN score for relation " + std::to_string(relations[i]));
    }
    if (!seen.insert(relations[i]).second) {
      throw DomainError("rank_scores: duplicate relation " + std::to_string(relations[i]));
    }
  }

  std::vector<std::size_t> order(relations.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return relations[a] < relations[b];
  });

  RankTable table;
  table.relations.assign(relations.begin(), relations.end());
  table.scores.assign(scores.begin(), scores.end());
  table.ranks.resize(relations.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    table.ranks[order[pos]] = static_cast<int>(pos) + 1;
  }
  return table;
}

}  // namespace fcre
