#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ifr/core/image.hpp"
#include "ifr/data/charset.hpp"
#include "ifr/data/degrade.hpp"
#include "ifr/data/render.hpp"

namespace ifr {

// A training or evaluation pair. dq is reproducible from (hq, seed, config).
struct PairedSample {
  Image hq;
  Image dq;
  std::string label;
  uint64_t seed = 0;
};

struct ManifestEntry {
  std::string id;
  std::string label;
  std::string hq_rel;  // path relative to the manifest directory
  uint64_t seed = 0;   // degradation seed
};

// Renders n samples with uniformly drawn lengths 1..max_len and uniformly
// drawn symbols, writes them as 8-bit greyscale PNGs under out_dir/img plus a
// JSON-lines manifest (fields id, label, hq, seed). Pure function of its
// arguments: rebuilding yields byte-identical files. Returns the manifest
// path.
std::string build_dataset(int n, const Charset& charset, int max_len, uint64_t seed,
                          const std::string& out_dir, const RenderStyle& style = {});

// Parses a manifest; errors name the offending line number. Unknown JSON
// fields are ignored.
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Loads pairs lazily: clean images are read once up front, degraded views are
// produced on demand from the stored seed. Iteration order follows the
// manifest.
class PairedDataset {
 public:
  PairedDataset(const std::string& manifest_path, DegradeConfig cfg);

  size_t size() const { return entries_.size(); }
  const ManifestEntry& entry(size_t i) const { return entries_[i]; }
  const Image& hq(size_t i) const { return hq_[i]; }

  // dq from the manifest seed.
  PairedSample get(size_t i) const;

  // dq from a seed re-derived with `salt` (used to refresh degradations
  // between training epochs without touching the stored data).
  PairedSample get_salted(size_t i, uint64_t salt) const;

  const DegradeConfig& config() const { return cfg_; }

 private:
  std::vector<ManifestEntry> entries_;
  std::vector<Image> hq_;
  DegradeConfig cfg_;
};

}  // namespace ifr
