#pragma once

// Registry of K frozen description vectors per relation and their means.
//
// Note on naming: "shots" is the number of training samples per relation in a
// task, K (k_desc) the number of description vectors per relation.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <vector>

#include "fcre/types.hpp"

namespace fcre {

class DescriptionSet {
 public:
  DescriptionSet() = default;

  /// Adds K description vectors (columns of `vectors`) for relation r. The
  /// first insertion fixes K and the dimension for the whole set.
  void add(RelationId r, Matrix vectors);

  bool contains(RelationId r) const { return entries_.count(r) != 0; }
  /// dim x K. Throws DomainError for an unknown relation.
  const Matrix& vectors(RelationId r) const;
  const Vector& mean(RelationId r) const;

  std::vector<RelationId> relations() const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  Eigen::Index k() const noexcept { return k_; }
  Eigen::Index dim() const noexcept { return dim_; }

  /// Adds every relation of `other`. Throws ProtocolError on duplicates.
  void merge(const DescriptionSet& other);
  DescriptionSet subset(std::span<const RelationId> relations) const;
  /// Single-description set holding each relation's mean vector.
  DescriptionSet means_only() const;

  bool operator==(const DescriptionSet& other) const;

 private:
  struct Entry {
    Matrix vectors;
    Vector mean;
  };
  std::map<RelationId, Entry> entries_;
  Eigen::Index k_ = 0;
  Eigen::Index dim_ = 0;
};

Vector mean_description(const DescriptionSet& set, RelationId r);

/// JSON Lines: {"relation": <id>, "vectors": [[d floats], ... K arrays]}.
DescriptionSet parse_descriptions(std::istream& in, Eigen::Index expected_dim);
DescriptionSet ingest_descriptions(const std::filesystem::path& path, Eigen::Index expected_dim);
void write_descriptions(std::ostream& out, const DescriptionSet& set);

/// d_r^k = normalize(normalize(center_r) + spread * g_k) with g_k ~ N(0, I),
/// drawn in ascending relation order from a generator seeded with `seed`.
DescriptionSet synth_descriptions(std::uint64_t seed, const std::map<RelationId, Vector>& centers,
                                  int k, double spread);

}  // namespace fcre
