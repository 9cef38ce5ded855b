#include "ifr/model/config.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ifr {

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ',')) {
    if (part.empty()) continue;
    out.push_back(static_cast<int>(parse_long(key, part)));
  }
  return out;
}

std::string format_int_list(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

void EngineConfig::validate() const {
  if (c_str < 8 || c_str % 8 != 0)
    throw std::invalid_argument("c_str must be a positive multiple of 8 (stage widths are C/8..C)");
  if (c_ir < 4 || c_ir % 4 != 0)
    throw std::invalid_argument("c_ir must be a positive multiple of 4 (attention bottleneck is C_ir/4)");
  if (max_t < 2) throw std::invalid_argument("max_t must be at least 2 (one symbol plus end marker)");
  if (train_steps < 1 || test_steps < 1) throw std::invalid_argument("step counts must be >= 1");
  if (lambda < 0) throw std::invalid_argument("lambda must be >= 0");
  if (fusion.size() != 3) throw std::invalid_argument("fusion must name exactly 3 encoder stages");
  std::set<int> uniq(fusion.begin(), fusion.end());
  if (uniq.size() != 3 || *uniq.begin() < 1 || *uniq.rbegin() > 5)
    throw std::invalid_argument("fusion stages must be 3 distinct values in 1..5");
  if (!std::is_sorted(fusion.begin(), fusion.end()))
    throw std::invalid_argument("fusion stages must be listed in ascending order");
  if (charset.empty()) throw std::invalid_argument("charset must not be empty");
}

void EngineConfig::to_kv(KvConfig& kv) const {
  kv.set("c_str", std::to_string(c_str));
  kv.set("c_ir", std::to_string(c_ir));
  kv.set("max_t", std::to_string(max_t));
  kv.set("fusion_stages", format_int_list(fusion));
  kv.set("train_steps", std::to_string(train_steps));
  kv.set("test_steps", std::to_string(test_steps));
  kv.set("lambda", format_double(lambda));
  kv.set("detach_between_steps", detach_between_steps ? "true" : "false");
  kv.set("pixel_norm", pixel_norm == PixelNorm::kL1 ? "l1" : "l2");
  kv.set("charset", charset);
  kv.set("rrf", rrf ? "true" : "false");
  kv.set("quantize_metrics", quantize_metrics ? "true" : "false");
  kv.set("init_seed", std::to_string(init_seed));
}

EngineConfig EngineConfig::from_kv(const KvConfig& kv) {
  EngineConfig c;
  if (kv.has("c_str")) c.c_str = static_cast<int>(parse_long("c_str", kv.get("c_str")));
  if (kv.has("c_ir")) c.c_ir = static_cast<int>(parse_long("c_ir", kv.get("c_ir")));
  if (kv.has("max_t")) c.max_t = static_cast<int>(parse_long("max_t", kv.get("max_t")));
  if (kv.has("fusion_stages")) c.fusion = parse_int_list("fusion_stages", kv.get("fusion_stages"));
  if (kv.has("train_steps")) c.train_steps = static_cast<int>(parse_long("train_steps", kv.get("train_steps")));
  if (kv.has("test_steps")) c.test_steps = static_cast<int>(parse_long("test_steps", kv.get("test_steps")));
  if (kv.has("lambda")) c.lambda = parse_double("lambda", kv.get("lambda"));
  if (kv.has("detach_between_steps"))
    c.detach_between_steps = parse_bool("detach_between_steps", kv.get("detach_between_steps"));
  if (kv.has("pixel_norm")) {
    const std::string& v = kv.get("pixel_norm");
    if (v == "l1")
      c.pixel_norm = PixelNorm::kL1;
    else if (v == "l2")
      c.pixel_norm = PixelNorm::kL2;
    else
      throw std::invalid_argument("config key 'pixel_norm': expected l1 or l2, got '" + v + "'");
  }
  if (kv.has("charset")) c.charset = kv.get("charset");
  if (kv.has("rrf")) c.rrf = parse_bool("rrf", kv.get("rrf"));
  if (kv.has("quantize_metrics")) c.quantize_metrics = parse_bool("quantize_metrics", kv.get("quantize_metrics"));
  if (kv.has("init_seed")) c.init_seed = static_cast<uint64_t>(parse_long("init_seed", kv.get("init_seed")));
  c.validate();
  return c;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (lr <= 0) throw std::invalid_argument("lr must be positive");
  if (decay_factor <= 0 || decay_factor > 1) throw std::invalid_argument("decay_factor must be in (0, 1]");
  if (rho <= 0 || rho >= 1) throw std::invalid_argument("rho must be in (0, 1)");
  if (adadelta_eps <= 0) throw std::invalid_argument("adadelta_eps must be positive");
  if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
}

void TrainConfig::to_kv(KvConfig& kv) const {
  kv.set("epochs", std::to_string(epochs));
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("lr", format_double(lr));
  kv.set("decay_epochs", format_int_list(decay_epochs));
  kv.set("decay_factor", format_double(decay_factor));
  kv.set("rho", format_double(rho));
  kv.set("adadelta_eps", format_double(adadelta_eps));
  kv.set("seed", std::to_string(seed));
  kv.set("checkpoint_every", std::to_string(checkpoint_every));
  kv.set("redegrade_each_epoch", redegrade_each_epoch ? "true" : "false");
}

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
  TrainConfig c;
  if (kv.has("epochs")) c.epochs = static_cast<int>(parse_long("epochs", kv.get("epochs")));
  if (kv.has("batch_size")) c.batch_size = static_cast<int>(parse_long("batch_size", kv.get("batch_size")));
  if (kv.has("lr")) c.lr = parse_double("lr", kv.get("lr"));
  if (kv.has("decay_epochs")) c.decay_epochs = parse_int_list("decay_epochs", kv.get("decay_epochs"));
  if (kv.has("decay_factor")) c.decay_factor = parse_double("decay_factor", kv.get("decay_factor"));
  if (kv.has("rho")) c.rho = parse_double("rho", kv.get("rho"));
  if (kv.has("adadelta_eps")) c.adadelta_eps = parse_double("adadelta_eps", kv.get("adadelta_eps"));
  if (kv.has("seed")) c.seed = static_cast<uint64_t>(parse_long("seed", kv.get("seed")));
  if (kv.has("checkpoint_every"))
    c.checkpoint_every = static_cast<int>(parse_long("checkpoint_every", kv.get("checkpoint_every")));
  if (kv.has("redegrade_each_epoch"))
    c.redegrade_each_epoch = parse_bool("redegrade_each_epoch", kv.get("redegrade_each_epoch"));
  c.validate();
  return c;
}

}  // namespace ifr
