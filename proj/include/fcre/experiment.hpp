#pragma once

// Config-driven experiments: data preparation, multi-seed runs, and reports.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fcre/continual.hpp"
#include "fcre/datagen.hpp"
#include "fcre/descriptions.hpp"
#include "fcre/encoder.hpp"
#include "fcre/hyperparams.hpp"
#include "fcre/inference.hpp"

namespace fcre {

enum class DataMode { Synthetic, Files };
enum class DescriptionSource { KSet, RawMean };

struct Ablation {
  bool use_sc = true;
  bool use_st = true;
  bool use_hm = true;
  bool use_mi = true;
  /// RawMean trains and infers with a single description per relation (the K-set mean).
  DescriptionSource description_source = DescriptionSource::KSet;

  bool operator==(const Ablation&) const = default;
};

struct ExperimentConfig {
  DataMode data_mode = DataMode::Synthetic;
  SyntheticSpec synthetic;
  std::string dataset_path;
  std::string descriptions_path;
  /// Noise scale of synthesized descriptions around their latent anchor.
  double description_spread = 0.1;
  /// Seed of the shared initial encoder, the analogue of a pretrained backbone.
  std::uint64_t backbone_seed = 0;
  HyperParams hyper;
  EncoderShape encoder;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::vector<Head> heads{Head::Ncm, Head::Dri};
  Ablation ablation;
  std::string out_dir = "runs";

  /// Throws DomainError on invalid values. `check_files` also requires input files to exist.
  void validate(bool check_files = false) const;
  /// Hyperparameters with ablated betas zeroed.
  HyperParams effective_hyperparams() const;
  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::ordered_json to_json(const ExperimentConfig& config);
/// Missing keys keep their defaults.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string serialize_config(const ExperimentConfig& config);

/// 64-bit SplitMix finalizer used to derive independent seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Task stream and full description registry for one seed.
struct PreparedData {
  TaskStream stream;
  DescriptionSet descriptions;
};

/// Synthetic mode: draws the stream for `seed` and anchors each relation's
/// descriptions at the backbone encoding of its feature-space class center.
/// File mode: loads both files (the seed is ignored).
PreparedData prepare_data(const ExperimentConfig& config, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  std::string run_id;
  bool ok = false;
  std::string error;
  std::vector<MetricsReport> reports;
};

/// Runs the whole stream for one seed. When `run_dir` is given, writes
/// config.json, metrics.csv and one checkpoint per task under it.
SeedOutcome run_seed(const ExperimentConfig& config, std::uint64_t seed,
                     const std::optional<std::filesystem::path>& run_dir = std::nullopt,
                     const PreparedData* data = nullptr);

std::string run_id(const ExperimentConfig& config, std::uint64_t seed);

struct GenerateSummary {
  std::filesystem::path dataset;
  std::filesystem::path descriptions;
  std::size_t dataset_rows = 0;
  std::size_t description_rows = 0;
};

/// Writes dataset.jsonl and descriptions.jsonl for the first configured seed.
GenerateSummary cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out_dir);

struct RunSummary {
  std::vector<SeedOutcome> outcomes;
  bool all_ok() const;
};

/// One run directory per seed plus <out>/summary.csv. Seeds run on up to
/// `max_workers` threads; results are written in seed order.
RunSummary cmd_run(const ExperimentConfig& config, unsigned max_workers = 1);

void write_summary_csv(std::ostream& out, const RunSummary& summary);

/// Per-input accuracy trajectories with a DRI minus NCM delta column.
/// Writes a text table to `table` and plot-ready CSV to `plot_csv`.
/// Throws ParseError naming the missing column on malformed input.
void cmd_report(const std::vector<std::filesystem::path>& csv_paths, std::ostream& table,
                std::ostream& plot_csv);

}  // namespace fcre
