#pragma once

#include <string>
#include <vector>

#include "ifr/core/kvconfig.hpp"
#include "ifr/data/degrade.hpp"
#include "ifr/model/config.hpp"

namespace ifr {

// One flat key=value namespace covering the model, the trainer, the
// degradation pipeline, and run plumbing. Commands resolve it in three layers:
// struct defaults, then the --config file, then individual flags. The resolved
// result is written to <out>/config_snapshot.txt, and feeding that snapshot
// back as --config reproduces the run.
struct RunConfig {
  EngineConfig engine;
  TrainConfig train;
  DegradeConfig degrade;

  std::string train_manifest;
  std::string val_manifest;
  std::string test_manifest;
  std::string checkpoint;
  std::string image;
  std::string out;

  int n = 1000;      // synth: sample count
  int max_len = 10;  // synth: longest label
  int steps = 0;     // eval/demo/sweep: iteration count; 0 = checkpoint's test_steps

  std::string kernels;  // sweep grid "lo:hi:step" over odd blur kernel sizes
  std::string ratios;   // sweep grid over down-up ratios
  std::string stages;   // fusion ablation rows, triples separated by '|'

  // Rejects unknown keys by name (std::invalid_argument).
  static RunConfig resolve(const KvConfig& kv);

  // Fully resolved key set; path keys are included only when nonempty.
  KvConfig snapshot() const;
};

void degrade_to_kv(const DegradeConfig& c, KvConfig& kv);
DegradeConfig degrade_from_kv(const KvConfig& kv);

// Inclusive numeric grid "lo:hi:step", step > 0, lo <= hi. Throws
// std::invalid_argument naming `key` on malformed input.
std::vector<double> parse_range(const std::string& key, const std::string& value);

// Entry point behind main(). Exit codes: 0 success, 2 usage or validation
// (including missing input files), 1 runtime failure.
int ifr_cli_main(int argc, char** argv);

}  // namespace ifr
