// fcre: generate synthetic streams, run continual experiments, compare reports.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "fcre/experiment.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::string seeds;
  std::string heads;
  bool no_sc = false;
  bool no_st = false;
  bool no_hm = false;
  bool no_mi = false;
  int k_desc = 0;
  double alpha = -1.0;
  double epsilon = -1.0;
  std::string out;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_path, "Experiment config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "Seed or comma-separated seed list");
  cmd->add_option("--head", o.heads, "Inference heads, e.g. ncm,dri");
  cmd->add_flag("--no-sc", o.no_sc, "Disable the supervised contrastive loss");
  cmd->add_flag("--no-st", o.no_st, "Disable the hard soft-margin triplet loss");
  cmd->add_flag("--no-hm", o.no_hm, "Disable the hard margin loss");
  cmd->add_flag("--no-mi", o.no_mi, "Disable the mutual information loss");
  cmd->add_option("--k-desc", o.k_desc, "Descriptions per relation")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", o.alpha, "DRI weight of the prototype-distance rank")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--epsilon", o.epsilon, "DRI rank offset")->check(CLI::PositiveNumber);
  cmd->add_option("--out", o.out, "Output directory");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

fcre::ExperimentConfig resolve_config(const Overrides& o) {
  fcre::ExperimentConfig c = o.config_path.empty() ? fcre::ExperimentConfig{}
                                                   : fcre::load_config(o.config_path);
  if (!o.seeds.empty()) {
    c.seeds.clear();
    for (const auto& s : split_list(o.seeds)) c.seeds.push_back(std::stoull(s));
  }
  if (!o.heads.empty()) {
    c.heads.clear();
    for (const auto& h : split_list(o.heads)) c.heads.push_back(fcre::parse_head(h));
  }
  if (o.no_sc) c.ablation.use_sc = false;
  if (o.no_st) c.ablation.use_st = false;
  if (o.no_hm) c.ablation.use_hm = false;
  if (o.no_mi) c.ablation.use_mi = false;
  if (o.k_desc > 0) c.hyper.k_desc = o.k_desc;
  if (o.alpha >= 0.0) c.hyper.alpha = o.alpha;
  if (o.epsilon > 0.0) c.hyper.epsilon = o.epsilon;
  if (!o.out.empty()) c.out_dir = o.out;
  return c;
}

unsigned worker_cap() {
  if (const char* env = std::getenv("FCRE_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
    spdlog::warn("ignoring invalid FCRE_THREADS='{}'", env);
  }
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot continual classification with description-pivot training"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error"}));

  Overrides gen_opts;
  auto* gen = app.add_subcommand("generate", "Write a synthetic dataset and its descriptions");
  add_override_flags(gen, gen_opts);

  Overrides run_opts;
  auto* run = app.add_subcommand("run", "Run the continual experiment for every seed");
  add_override_flags(run, run_opts);
  bool dump_config = false;
  run->add_flag("--print-config", dump_config, "Print the resolved config and exit");

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Compare metrics.csv files");
  report->add_option("inputs", report_inputs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Plot-ready CSV output path");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*gen) {
      fcre::ExperimentConfig c = resolve_config(gen_opts);
      const auto s = fcre::cmd_generate(c, c.out_dir);
      std::cout << fmt::format("wrote {} ({} rows)\nwrote {} ({} relations)\n", s.dataset.string(),
                               s.dataset_rows, s.descriptions.string(), s.description_rows);
      return 0;
    }
    if (*run) {
      fcre::ExperimentConfig c = resolve_config(run_opts);
      if (dump_config) {
        std::cout << fcre::serialize_config(c);
        return 0;
      }
      const auto summary = fcre::cmd_run(c, worker_cap());
      fcre::write_summary_csv(std::cout, summary);
      return summary.all_ok() ? 0 : 1;
    }
    if (*report) {
      std::vector<std::filesystem::path> paths(report_inputs.begin(), report_inputs.end());
      if (report_out.empty()) {
        std::ostringstream discard;
        fcre::cmd_report(paths, std::cout, discard);
      } else {
        std::ofstream plot(report_out, std::ios::binary);
        if (!plot) throw std::runtime_error("cannot write " + report_out);
        fcre::cmd_report(paths, std::cout, plot);
      }
      return 0;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
