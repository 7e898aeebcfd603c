#pragma once

// Memory-based continual training over a task stream.
//
// Each task runs: extend the description registry, train on the task, select
// L memory samples per new relation, rebuild all prototypes with the current
// encoder, then rehearse on the old memory together with the task data.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcre/descriptions.hpp"
#include "fcre/encoder.hpp"
#include "fcre/hyperparams.hpp"
#include "fcre/inference.hpp"
#include "fcre/task_stream.hpp"

namespace fcre {

using MemoryBuffer = std::map<RelationId, std::vector<Sample>>;

/// Full-batch training when a phase has at most this many samples.
inline constexpr std::size_t kFullBatchLimit = 64;
inline constexpr std::size_t kMiniBatchSize = 32;

/// Relative distance difference below which two memory candidates tie.
inline constexpr double kMemoryTieTolerance = 1e-12;

/// Indices of the `memory_size` embeddings closest to their centroid, ordered
/// by distance with ties broken by ascending index.
std::vector<std::size_t> select_memory(std::span<const Vector> embeddings, int memory_size);

std::vector<Sample> select_memory(std::span<const Sample> samples, const EncoderParams& encoder,
                                  int memory_size);

/// Relations with an empty memory are skipped with a warning.
PrototypeStore build_prototypes(const MemoryBuffer& memory, const EncoderParams& encoder);

struct ContinualState {
  EncoderParams encoder;
  BilinearForm bilinear;
  Adam optimizer;
  MemoryBuffer memory;
  PrototypeStore prototypes;
  DescriptionSet descriptions;     // descriptions of every seen relation
  std::vector<RelationId> seen;    // in order of arrival
  std::vector<Head> heads;
  std::vector<MetricsReport> metrics;  // one report per head
  std::mt19937_64 rng;
  int tasks_completed = 0;

  /// Encoder and W are drawn from `init_seed`; batch shuffling uses `shuffle_seed`.
  static ContinualState initialize(const EncoderShape& shape, const HyperParams& hp,
                                   std::uint64_t init_seed, std::uint64_t shuffle_seed,
                                   std::vector<Head> heads);
};

struct EpochStats {
  int steps = 0;
  double mean_loss = 0.0;
  int degenerate_terms = 0;
};

/// One optimizer step on `batch` (>= 2 samples).
double train_step(ContinualState& state, std::span<const Sample> batch, const HyperParams& hp,
                  int* degenerate_terms = nullptr);

EpochStats train_epoch(ContinualState& state, std::span<const Sample> data, const HyperParams& hp);

/// Runs task `task_index` (0-based) of `stream` and appends one metrics row per head.
/// Throws ProtocolError if the task reuses a seen relation or lacks descriptions.
void run_task(ContinualState& state, const TaskStream& stream, std::size_t task_index,
              const DescriptionSet& all_descriptions, const HyperParams& hp);

struct Checkpoint {
  int task = 0;
  EncoderParams encoder;
  Matrix bilinear;
  MemoryBuffer memory;
  std::vector<RelationId> relations;
};

nlohmann::ordered_json checkpoint_json(const ContinualState& state);
Checkpoint checkpoint_from_json(const nlohmann::json& j);

}  // namespace fcre
