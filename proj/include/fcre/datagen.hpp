#pragma once

// Seeded synthetic task streams and the JSON Lines dataset format.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>

#include <nlohmann/json.hpp>

#include "fcre/task_stream.hpp"

namespace fcre {

struct SyntheticSpec {
  int n_tasks = 8;
  int n_way = 5;
  int shots = 5;
  int test_per_relation = 20;
  int feature_dim = 32;
  /// Minimum pairwise angle between class centers, in radians.
  double cluster_separation = 1.0;
  /// Per-coordinate standard deviation of the Gaussian sample noise.
  double within_class_noise = 0.15;
  /// Training samples per relation in the first task.
  int task1_oversample = 100;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SyntheticSpec&) const = default;
};

struct GeneratedStream {
  TaskStream stream;
  /// Unit-norm class centers in feature space, keyed by relation id.
  std::map<RelationId, Vector> centers;
};

GeneratedStream generate_stream(const SyntheticSpec& spec);

/// JSON Lines: {"task": t, "relation": id, "split": "train"|"test", "features": [...]}.
/// Task numbers are 1-based and must be contiguous.
TaskStream parse_dataset(std::istream& in);
TaskStream ingest_dataset(const std::filesystem::path& path);
void write_dataset(std::ostream& out, const TaskStream& stream);

nlohmann::ordered_json to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

}  // namespace fcre
