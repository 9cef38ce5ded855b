#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifr/core/kvconfig.hpp"

namespace ifr {

enum class PixelNorm { kL1, kL2 };

// Architecture and objective knobs. The checkpoint file embeds this snapshot
// so a saved model rebuilds without external context.
struct EngineConfig {
  int c_str = 512;  // recognizer width C; stage channels are C/8..C
  int c_ir = 64;    // restoration branch width
  int max_t = 16;   // decoding steps; labels may be at most max_t - 1 long
  std::vector<int> fusion = {1, 3, 5};  // encoder stages fed to the fusion module
  int train_steps = 3;
  int test_steps = 3;
  double lambda = 10.0;  // pixel-loss weight in the joint objective
  bool detach_between_steps = false;
  PixelNorm pixel_norm = PixelNorm::kL1;
  std::string charset = "0123456789abcdefghijklmnopqrstuvwxyz";
  bool rrf = true;  // multi-scale fusion path; off = shallow-feature-only restoration
  bool quantize_metrics = true;
  uint64_t init_seed = 1;

  void validate() const;  // throws std::invalid_argument
  void to_kv(KvConfig& kv) const;
  static EngineConfig from_kv(const KvConfig& kv);
};

struct TrainConfig {
  int epochs = 6;
  int batch_size = 16;
  double lr = 1.0;
  std::vector<int> decay_epochs = {4, 5};  // lr *= decay_factor after each listed epoch
  double decay_factor = 0.1;
  double rho = 0.9;
  double adadelta_eps = 1e-6;
  uint64_t seed = 1;
  int checkpoint_every = 0;  // extra numbered checkpoints; 0 = only last/best
  bool redegrade_each_epoch = true;

  void validate() const;
  void to_kv(KvConfig& kv) const;
  static TrainConfig from_kv(const KvConfig& kv);
};

std::vector<int> parse_int_list(const std::string& key, const std::string& value);
std::string format_int_list(const std::vector<int>& v);

}  // namespace ifr
