#pragma once

#include <cstdint>
#include <string>

#include "healvit/model.hpp"
#include "healvit/training.hpp"

namespace healvit::config {

// Everything a run needs beyond command-line paths, parsed from "key = value"
// lines. '#' starts a comment, blank lines are skipped, and unknown or
// repeated keys raise std::invalid_argument naming the key, so typos cannot
// silently fall back to defaults. Absent keys keep their defaults.
struct RunConfig {
  model::ModelConfig model;
  train::OptimizerConfig optimizer;
  std::string phases;  // curriculum spec, e.g. "1x500@cosine:2.5e-4,2x50@fixed:1e-7"
  std::uint64_t seed = 0;
  int batch_size = 1;
  // Optional path defaults; command-line flags take precedence.
  std::string data_dir;
  std::string out_path;
  std::string trace_path;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

}  // namespace healvit::config
