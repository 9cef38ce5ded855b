#include "ifr/data/dataset.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "ifr/core/png.hpp"
#include "ifr/core/rng.hpp"

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace ifr {
namespace {

// Per-sample sub-streams; labels, rendering and degradation must stay
// independent so changing one knob never shifts the others.
constexpr uint64_t kLabelStream = 0;
constexpr uint64_t kRenderStream = 1;
constexpr uint64_t kDegradeStream = 2;

std::string sample_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

}  // namespace

std::string build_dataset(int n, const Charset& charset, int max_len, uint64_t seed,
                          const std::string& out_dir, const RenderStyle& style) {
  if (n < 1) throw std::invalid_argument("build_dataset: n must be >= 1");
  if (max_len < 1) throw std::invalid_argument("build_dataset: max_len must be >= 1");

  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "img", ec);
  if (ec) throw std::runtime_error("build_dataset: cannot create " + out_dir + ": " + ec.message());

  std::string manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("build_dataset: cannot write " + manifest_path);

  for (int i = 0; i < n; ++i) {
    uint64_t s = derive_seed(seed, static_cast<uint64_t>(i));
    Rng label_rng(derive_seed(s, kLabelStream));
    int len = 1 + label_rng.uniform_int(max_len);
    std::string label;
    for (int j = 0; j < len; ++j) label.push_back(charset.symbol(label_rng.uniform_int(charset.size())));

    Image hq = render_text(label, derive_seed(s, kRenderStream), style);
    std::string rel = "img/" + sample_id(i) + ".png";
    write_png_gray8((fs::path(out_dir) / rel).string(), hq);

    ordered_json rec;
    rec["id"] = sample_id(i);
    rec["label"] = label;
    rec["hq"] = rel;
    rec["seed"] = derive_seed(s, kDegradeStream);
    mf << rec.dump() << '\n';
  }
  mf.close();
  if (!mf) throw std::runtime_error("build_dataset: write failed for " + manifest_path);
  return manifest_path;
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json rec;
    try {
      rec = ordered_json::parse(line);
      ManifestEntry e;
      e.id = rec.at("id").get<std::string>();
      e.label = rec.at("label").get<std::string>();
      e.hq_rel = rec.at("hq").get<std::string>();
      e.seed = rec.at("seed").get<uint64_t>();
      out.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw std::runtime_error("manifest " + path + " line " + std::to_string(lineno) + ": " + ex.what());
    }
  }
  return out;
}

PairedDataset::PairedDataset(const std::string& manifest_path, DegradeConfig cfg)
    : entries_(read_manifest(manifest_path)), cfg_(std::move(cfg)) {
  cfg_.validate();
  fs::path root = fs::path(manifest_path).parent_path();
  hq_.reserve(entries_.size());
  for (size_t i = 0; i < entries_.size(); ++i) {
    try {
      hq_.push_back(read_png_gray((root / entries_[i].hq_rel).string()));
    } catch (const std::exception& ex) {
      throw std::runtime_error("manifest " + manifest_path + " line " + std::to_string(i + 1) + ": " + ex.what());
    }
  }
}

PairedSample PairedDataset::get(size_t i) const {
  const ManifestEntry& e = entries_[i];
  return PairedSample{hq_[i], degrade(hq_[i], e.seed, cfg_), e.label, e.seed};
}

PairedSample PairedDataset::get_salted(size_t i, uint64_t salt) const {
  const ManifestEntry& e = entries_[i];
  uint64_t s = derive_seed(e.seed, salt);
  return PairedSample{hq_[i], degrade(hq_[i], s, cfg_), e.label, s};
}

}  // namespace ifr
