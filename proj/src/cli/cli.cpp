#include "ifr/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "ifr/core/png.hpp"
#include "ifr/data/dataset.hpp"
#include "ifr/model/checkpoint.hpp"
#include "ifr/train/trainer.hpp"

namespace ifr {

void degrade_to_kv(const DegradeConfig& c, KvConfig& kv) {
  kv.set("kernel_min", std::to_string(c.kernel_min));
  kv.set("kernel_max", std::to_string(c.kernel_max));
  kv.set("ratio_min", format_double(c.ratio_min));
  kv.set("ratio_max", format_double(c.ratio_max));
  kv.set("mix_clean", format_double(c.mix_clean));
  kv.set("mix_blur", format_double(c.mix_blur));
  kv.set("mix_downup", format_double(c.mix_downup));
  kv.set("mix_both", format_double(c.mix_both));
  kv.set("sigma_rule", c.sigma_rule == SigmaRule::kAuto ? "auto" : "fixed");
  kv.set("sigma_fixed", format_double(c.sigma_fixed));
}

DegradeConfig degrade_from_kv(const KvConfig& kv) {
  DegradeConfig c;
  if (kv.has("kernel_min")) c.kernel_min = static_cast<int>(parse_long("kernel_min", kv.get("kernel_min")));
  if (kv.has("kernel_max")) c.kernel_max = static_cast<int>(parse_long("kernel_max", kv.get("kernel_max")));
  if (kv.has("ratio_min")) c.ratio_min = parse_double("ratio_min", kv.get("ratio_min"));
  if (kv.has("ratio_max")) c.ratio_max = parse_double("ratio_max", kv.get("ratio_max"));
  if (kv.has("mix_clean")) c.mix_clean = parse_double("mix_clean", kv.get("mix_clean"));
  if (kv.has("mix_blur")) c.mix_blur = parse_double("mix_blur", kv.get("mix_blur"));
  if (kv.has("mix_downup")) c.mix_downup = parse_double("mix_downup", kv.get("mix_downup"));
  if (kv.has("mix_both")) c.mix_both = parse_double("mix_both", kv.get("mix_both"));
  if (kv.has("sigma_rule")) {
    const std::string& v = kv.get("sigma_rule");
    if (v == "auto")
      c.sigma_rule = SigmaRule::kAuto;
    else if (v == "fixed")
      c.sigma_rule = SigmaRule::kFixed;
    else
      throw std::invalid_argument("config key 'sigma_rule': expected auto or fixed, got '" + v + "'");
  }
  if (kv.has("sigma_fixed")) c.sigma_fixed = parse_double("sigma_fixed", kv.get("sigma_fixed"));
  c.validate();
  return c;
}

RunConfig RunConfig::resolve(const KvConfig& kv) {
  static const std::set<std::string> known = {
      // model
      "c_str", "c_ir", "max_t", "fusion_stages", "train_steps", "test_steps", "lambda",
      "detach_between_steps", "pixel_norm", "charset", "rrf", "quantize_metrics", "init_seed",
      // trainer
      "epochs", "batch_size", "lr", "decay_epochs", "decay_factor", "rho", "adadelta_eps", "seed",
      "checkpoint_every", "redegrade_each_epoch",
      // degradation
      "kernel_min", "kernel_max", "ratio_min", "ratio_max", "mix_clean", "mix_blur", "mix_downup",
      "mix_both", "sigma_rule", "sigma_fixed",
      // plumbing
      "train_manifest", "val_manifest", "test_manifest", "checkpoint", "image", "out", "n",
      "max_len", "steps", "kernels", "ratios", "stages"};
  for (const auto& k : kv.keys())
    if (!known.count(k)) throw std::invalid_argument("unknown config key '" + k + "'");

  RunConfig rc;
  rc.engine = EngineConfig::from_kv(kv);
  rc.train = TrainConfig::from_kv(kv);
  rc.degrade = degrade_from_kv(kv);
  rc.train_manifest = kv.get_or("train_manifest", "");
  rc.val_manifest = kv.get_or("val_manifest", "");
  rc.test_manifest = kv.get_or("test_manifest", "");
  rc.checkpoint = kv.get_or("checkpoint", "");
  rc.image = kv.get_or("image", "");
  rc.out = kv.get_or("out", "");
  if (kv.has("n")) rc.n = static_cast<int>(parse_long("n", kv.get("n")));
  if (kv.has("max_len")) rc.max_len = static_cast<int>(parse_long("max_len", kv.get("max_len")));
  if (kv.has("steps")) rc.steps = static_cast<int>(parse_long("steps", kv.get("steps")));
  if (rc.steps < 0) throw std::invalid_argument("steps must be >= 0 (0 = use the checkpoint's test_steps)");
  rc.kernels = kv.get_or("kernels", "");
  rc.ratios = kv.get_or("ratios", "");
  rc.stages = kv.get_or("stages", "");
  return rc;
}

KvConfig RunConfig::snapshot() const {
  KvConfig kv;
  engine.to_kv(kv);
  train.to_kv(kv);
  degrade_to_kv(degrade, kv);
  kv.set("n", std::to_string(n));
  kv.set("max_len", std::to_string(max_len));
  kv.set("steps", std::to_string(steps));
  auto put = [&kv](const char* key, const std::string& v) {
    if (!v.empty()) kv.set(key, v);
  };
  put("train_manifest", train_manifest);
  put("val_manifest", val_manifest);
  put("test_manifest", test_manifest);
  put("checkpoint", checkpoint);
  put("image", image);
  put("out", out);
  put("kernels", kernels);
  put("ratios", ratios);
  put("stages", stages);
  return kv;
}

std::vector<double> parse_range(const std::string& key, const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string part;
  while (std::getline(ss, part, ':')) parts.push_back(part);
  if (parts.size() != 3)
    throw std::invalid_argument("config key '" + key + "': expected lo:hi:step, got '" + value + "'");
  double lo = parse_double(key, parts[0]);
  double hi = parse_double(key, parts[1]);
  double step = parse_double(key, parts[2]);
  if (step <= 0 || lo > hi)
    throw std::invalid_argument("config key '" + key + "': need step > 0 and lo <= hi in '" + value + "'");
  std::vector<double> out;
  for (double v = lo; v <= hi + 1e-9; v += step) out.push_back(v);
  return out;
}

namespace {

namespace fs = std::filesystem;

void require_value(const char* what, const std::string& v) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + " is required");
}

void require_file(const char* what, const std::string& path) {
  require_value(what, path);
  if (!fs::exists(path)) throw std::invalid_argument(std::string(what) + " not found: " + path);
}

void write_snapshot(const RunConfig& rc) {
  std::error_code ec;
  fs::create_directories(rc.out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + rc.out + ": " + ec.message());
  rc.snapshot().save((fs::path(rc.out) / "config_snapshot.txt").string());
}

std::string fmt_row(double accuracy, double ssim_v, double psnr_v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f", accuracy, ssim_v, psnr_v);
  return buf;
}

void check_labels(const PairedDataset& ds, const Charset& cs, int max_t) {
  for (size_t i = 0; i < ds.size(); ++i) {
    const ManifestEntry& e = ds.entry(i);
    std::vector<int> ids;
    try {
      ids = cs.encode(e.label);
    } catch (const std::invalid_argument& ex) {
      throw std::invalid_argument(std::string(ex.what()) + " (sample " + e.id + ")");
    }
    if (static_cast<int>(ids.size()) > max_t - 1)
      throw std::invalid_argument("label '" + e.label + "' (sample " + e.id + ") is longer than max_t - 1 = " +
                                  std::to_string(max_t - 1));
  }
}

// Shared by `train` and the training ablations: loads the paired data, trains
// a fresh model, and leaves log.csv plus last/best checkpoints under rc.out.
IfrModel<float> run_training(const RunConfig& rc, std::ostream* progress) {
  require_value("--out", rc.out);
  require_file("--train-manifest", rc.train_manifest);
  std::string val_path = rc.val_manifest.empty() ? rc.train_manifest : rc.val_manifest;
  if (!rc.val_manifest.empty()) require_file("--val-manifest", rc.val_manifest);

  PairedDataset train_ds(rc.train_manifest, rc.degrade);
  PairedDataset val_ds(val_path, rc.degrade);
  Charset cs(rc.engine.charset);
  check_labels(train_ds, cs, rc.engine.max_t);
  check_labels(val_ds, cs, rc.engine.max_t);

  IfrModel<float> model(rc.engine);
  write_snapshot(rc);
  train_model(model, train_ds, val_ds, rc.train, rc.out, progress);
  return model;
}

EvalRow final_row(const IfrModel<float>& model, const std::string& manifest, const RunConfig& rc) {
  PairedDataset ds(manifest, rc.degrade);
  EvalReport rep = evaluate_model(model, ds, model.cfg.test_steps, rc.train.batch_size);
  return rep.rows.back();
}

int cmd_synth(RunConfig rc) {
  require_value("--out", rc.out);
  if (rc.n < 1) throw std::invalid_argument("n must be >= 1");
  if (rc.max_len < 1) throw std::invalid_argument("max_len must be >= 1");
  Charset cs(rc.engine.charset);
  write_snapshot(rc);
  std::string manifest = build_dataset(rc.n, cs, rc.max_len, rc.train.seed, rc.out);
  std::cout << "wrote " << rc.n << " samples under " << rc.out << "\nmanifest: " << manifest << "\n";
  return 0;
}

int cmd_train(RunConfig rc) {
  IfrModel<float> model = run_training(rc, &std::cout);
  std::cout << "checkpoints: " << (fs::path(rc.out) / "ckpt_last.ifr").string() << ", "
            << (fs::path(rc.out) / "ckpt_best.ifr").string() << "\n";
  return 0;
}

int cmd_eval(RunConfig rc) {
  require_value("--out", rc.out);
  require_file("--checkpoint", rc.checkpoint);
  require_file("--manifest", rc.test_manifest);
  IfrModel<float> model = load_checkpoint<float>(rc.checkpoint);
  int steps = rc.steps > 0 ? rc.steps : model.cfg.test_steps;
  rc.engine = model.cfg;
  rc.steps = steps;
  write_snapshot(rc);

  PairedDataset ds(rc.test_manifest, rc.degrade);
  EvalReport rep = evaluate_model(model, ds, steps, rc.train.batch_size);
  std::string report = (fs::path(rc.out) / "report.csv").string();
  write_eval_csv(rep, report);
  char head[96];
  std::snprintf(head, sizeof(head), "n=%d  input: ssim=%.6f psnr=%.6f", rep.n, rep.input_ssim, rep.input_psnr);
  std::cout << head << "\n";
  for (const auto& r : rep.rows)
    std::cout << "step " << r.step << ": accuracy,ssim,psnr = " << fmt_row(r.accuracy, r.ssim, r.psnr) << "\n";
  std::cout << "report: " << report << "\n";
  return 0;
}

int cmd_demo(RunConfig rc) {
  require_value("--out", rc.out);
  require_file("--checkpoint", rc.checkpoint);
  require_file("--image", rc.image);
  IfrModel<float> model = load_checkpoint<float>(rc.checkpoint);
  int steps = rc.steps > 0 ? rc.steps : model.cfg.test_steps;
  rc.engine = model.cfg;
  rc.steps = steps;
  write_snapshot(rc);

  Image in = read_png_gray(rc.image);
  if (in.h != kCanvasH || in.w != kCanvasW) in = bilinear_resize(in, kCanvasH, kCanvasW);
  nn::NoGradGuard no_grad;
  nn::Tensor<float> t = images_to_tensor<float>({in});
  IterationTrace<float> trace = iterate(model, t, steps, nullptr);
  for (int k = 0; k < steps; ++k) {
    const StepRecord<float>& s = trace.steps[static_cast<size_t>(k)];
    Image restored = quantize8(plane_to_image(s.restored, 0));
    std::string path = (fs::path(rc.out) / ("step_" + std::to_string(k + 1) + ".png")).string();
    write_png_gray8(path, restored);
    const Recognition& r = s.recognitions[0];
    char line[160];
    std::snprintf(line, sizeof(line), "step %d: \"%s\"  confidence %.4f  (%s)", k + 1, r.text.c_str(),
                  std::exp(r.confidence), r.direction == Direction::kLR ? "forward" : "reverse");
    std::cout << line << "\n";
  }
  return 0;
}

int cmd_ablate_steps(RunConfig rc) {
  require_value("--out", rc.out);
  require_file("--checkpoint", rc.checkpoint);
  require_file("--manifest", rc.test_manifest);
  IfrModel<float> model = load_checkpoint<float>(rc.checkpoint);
  int steps = rc.steps > 0 ? rc.steps : model.cfg.test_steps;
  rc.engine = model.cfg;
  rc.steps = steps;
  write_snapshot(rc);

  PairedDataset ds(rc.test_manifest, rc.degrade);
  EvalReport rep = evaluate_model(model, ds, steps, rc.train.batch_size);
  std::string report = (fs::path(rc.out) / "ablate_steps.csv").string();
  write_eval_csv(rep, report);
  for (const auto& r : rep.rows)
    std::cout << "steps=" << r.step << ": accuracy,ssim,psnr = " << fmt_row(r.accuracy, r.ssim, r.psnr) << "\n";
  std::cout << "report: " << report << "\n";
  return 0;
}

std::vector<std::vector<int>> parse_stage_sets(const std::string& spec) {
  std::vector<std::vector<int>> sets;
  std::stringstream ss(spec);
  std::string part;
  while (std::getline(ss, part, '|'))
    if (!part.empty()) sets.push_back(parse_int_list("stages", part));
  if (sets.empty()) throw std::invalid_argument("stages must name at least one stage triple");
  return sets;
}

std::string stage_label(const std::vector<int>& stages) {
  std::string s;
  for (size_t i = 0; i < stages.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(stages[i]);
  }
  return s;
}

int cmd_ablate_fusion(RunConfig rc) {
  require_value("--out", rc.out);
  if (rc.stages.empty()) rc.stages = "1,2,3|2,3,4|1,3,5";
  std::vector<std::vector<int>> sets = parse_stage_sets(rc.stages);
  write_snapshot(rc);

  std::vector<std::pair<std::string, EvalRow>> rows;
  for (const auto& stages : sets) {
    RunConfig sub = rc;
    sub.engine.fusion = stages;
    sub.engine.validate();
    sub.out = (fs::path(rc.out) / ("fusion_" + stage_label(stages))).string();
    std::cout << "== fusion stages " << stage_label(stages) << " ==\n";
    IfrModel<float> model = run_training(sub, &std::cout);
    std::string eval_manifest = !rc.test_manifest.empty()
                                    ? rc.test_manifest
                                    : (!rc.val_manifest.empty() ? rc.val_manifest : rc.train_manifest);
    rows.emplace_back(stage_label(stages), final_row(model, eval_manifest, rc));
  }

  std::string report = (fs::path(rc.out) / "ablate_fusion.csv").string();
  std::ofstream f(report, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report: " + report);
  f << "stages,accuracy,ssim,psnr\n";
  for (const auto& [label, row] : rows) {
    f << label << ',' << fmt_row(row.accuracy, row.ssim, row.psnr) << "\n";
    std::cout << "stages " << label << ": accuracy,ssim,psnr = " << fmt_row(row.accuracy, row.ssim, row.psnr)
              << "\n";
  }
  std::cout << "report: " << report << "\n";
  return 0;
}

int cmd_ablate_rrf(RunConfig rc) {
  require_value("--out", rc.out);
  write_snapshot(rc);

  std::vector<std::pair<std::string, EvalRow>> rows;
  for (bool on : {true, false}) {
    RunConfig sub = rc;
    sub.engine.rrf = on;
    sub.out = (fs::path(rc.out) / (on ? "rrf_on" : "rrf_off")).string();
    std::cout << "== fusion " << (on ? "enabled" : "disabled") << " ==\n";
    IfrModel<float> model = run_training(sub, &std::cout);
    std::string eval_manifest = !rc.test_manifest.empty()
                                    ? rc.test_manifest
                                    : (!rc.val_manifest.empty() ? rc.val_manifest : rc.train_manifest);
    rows.emplace_back(on ? "on" : "off", final_row(model, eval_manifest, rc));
  }

  std::string report = (fs::path(rc.out) / "ablate_rrf.csv").string();
  std::ofstream f(report, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report: " + report);
  f << "rrf,accuracy,ssim,psnr\n";
  for (const auto& [label, row] : rows) {
    f << label << ',' << fmt_row(row.accuracy, row.ssim, row.psnr) << "\n";
    std::cout << "rrf " << label << ": accuracy,ssim,psnr = " << fmt_row(row.accuracy, row.ssim, row.psnr) << "\n";
  }
  std::cout << "accuracy delta (on - off): " << rows[0].second.accuracy - rows[1].second.accuracy << "\n";
  std::cout << "report: " << report << "\n";
  return 0;
}

int cmd_sweep(RunConfig rc) {
  require_value("--out", rc.out);
  require_file("--checkpoint", rc.checkpoint);
  require_file("--manifest", rc.test_manifest);
  if (rc.kernels.empty() == rc.ratios.empty())
    throw std::invalid_argument("pass exactly one of --kernels or --ratios");
  IfrModel<float> model = load_checkpoint<float>(rc.checkpoint);
  int steps = rc.steps > 0 ? rc.steps : model.cfg.test_steps;
  rc.engine = model.cfg;
  rc.steps = steps;
  write_snapshot(rc);

  bool kernel_sweep = !rc.kernels.empty();
  std::vector<double> grid = parse_range(kernel_sweep ? "kernels" : "ratios", kernel_sweep ? rc.kernels : rc.ratios);

  std::string report = (fs::path(rc.out) / "sweep.csv").string();
  std::ofstream f(report, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report: " + report);
  f << "severity,accuracy,ssim,psnr\n";
  for (double v : grid) {
    DegradeConfig dc = rc.degrade;
    if (kernel_sweep) {
      int k = static_cast<int>(std::lround(v));
      if (std::abs(v - k) > 1e-9 || k < 1 || k % 2 == 0)
        throw std::invalid_argument("kernel sizes must be odd positive integers, got " + std::to_string(v));
      dc.kernel_min = dc.kernel_max = k;
      dc.mix_clean = 0;
      dc.mix_blur = 1;
      dc.mix_downup = 0;
      dc.mix_both = 0;
    } else {
      dc.ratio_min = dc.ratio_max = v;
      dc.mix_clean = 0;
      dc.mix_blur = 0;
      dc.mix_downup = 1;
      dc.mix_both = 0;
    }
    dc.validate();
    PairedDataset ds(rc.test_manifest, dc);
    EvalReport rep = evaluate_model(model, ds, steps, rc.train.batch_size);
    const EvalRow& row = rep.rows.back();
    char sev[32];
    std::snprintf(sev, sizeof(sev), "%g", v);
    f << sev << ',' << fmt_row(row.accuracy, row.ssim, row.psnr) << "\n";
    std::cout << (kernel_sweep ? "kernel " : "ratio ") << sev
              << ": accuracy,ssim,psnr = " << fmt_row(row.accuracy, row.ssim, row.psnr) << "\n";
    f.flush();
  }
  std::cout << "report: " << report << "\n";
  return 0;
}

}  // namespace

int ifr_cli_main(int argc, char** argv) {
  CLI::App app{"Scene-text recognition with an iteratively fused restoration branch"};
  app.require_subcommand(1);

  // Every flag funnels into the same flat key space so that the resolution
  // order is always file < --set < named flag.
  std::string config_path;
  std::vector<std::string> sets;
  std::string out, train_manifest, val_manifest, test_manifest, checkpoint, image, charset;
  std::string n, max_len, seed, steps, epochs, batch_size, kernels, ratios, stages;

  struct Binding {
    CLI::Option* opt;
    const char* key;
    std::string* slot;
  };
  std::vector<Binding> binds;
  auto add = [&binds](CLI::App* cmd, const std::string& flag, const char* key, std::string* slot,
                      const std::string& desc) {
    binds.push_back({cmd->add_option(flag, *slot, desc), key, slot});
  };
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "key=value config file; flags override its values");
    cmd->add_option("--set", sets, "extra key=value override, repeatable");
    add(cmd, "--out", "out", &out, "output directory");
  };

  CLI::App* synth = app.add_subcommand("synth", "render a paired dataset of clean text images");
  add_common(synth);
  add(synth, "--n", "n", &n, "sample count");
  add(synth, "--charset", "charset", &charset, "symbol inventory");
  add(synth, "--max-len", "max_len", &max_len, "longest label");
  add(synth, "--seed", "seed", &seed, "master seed");

  CLI::App* train = app.add_subcommand("train", "train a model on a synthesized dataset");
  add_common(train);
  add(train, "--train-manifest", "train_manifest", &train_manifest, "training manifest");
  add(train, "--val-manifest", "val_manifest", &val_manifest, "validation manifest (default: training set)");
  add(train, "--seed", "seed", &seed, "training seed");
  add(train, "--epochs", "epochs", &epochs, "epoch count");
  add(train, "--batch-size", "batch_size", &batch_size, "batch size");

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint, writing report.csv");
  add_common(eval);
  add(eval, "--checkpoint", "checkpoint", &checkpoint, "model checkpoint");
  add(eval, "--manifest", "test_manifest", &test_manifest, "evaluation manifest");
  add(eval, "--steps", "steps", &steps, "iteration count (default: checkpoint's)");

  CLI::App* demo = app.add_subcommand("demo", "run one image, writing step_k.png per iteration");
  add_common(demo);
  add(demo, "--checkpoint", "checkpoint", &checkpoint, "model checkpoint");
  add(demo, "--image", "image", &image, "input PNG (resized to 32x128 if needed)");
  add(demo, "--steps", "steps", &steps, "iteration count (default: checkpoint's)");

  CLI::App* ablate = app.add_subcommand("ablate", "comparison studies");
  ablate->require_subcommand(1);
  CLI::App* ab_steps = ablate->add_subcommand("steps", "one checkpoint evaluated at 1..K iterations");
  add_common(ab_steps);
  add(ab_steps, "--checkpoint", "checkpoint", &checkpoint, "model checkpoint");
  add(ab_steps, "--manifest", "test_manifest", &test_manifest, "evaluation manifest");
  add(ab_steps, "--max-steps", "steps", &steps, "largest iteration count");
  CLI::App* ab_fusion = ablate->add_subcommand("fusion", "retrain per encoder-stage selection");
  add_common(ab_fusion);
  add(ab_fusion, "--train-manifest", "train_manifest", &train_manifest, "training manifest");
  add(ab_fusion, "--val-manifest", "val_manifest", &val_manifest, "validation manifest");
  add(ab_fusion, "--test-manifest", "test_manifest", &test_manifest, "evaluation manifest");
  add(ab_fusion, "--stages", "stages", &stages, "stage triples, e.g. 1,2,3|2,3,4|1,3,5");
  CLI::App* ab_rrf = ablate->add_subcommand("rrf", "retrain with the fusion path on and off");
  add_common(ab_rrf);
  add(ab_rrf, "--train-manifest", "train_manifest", &train_manifest, "training manifest");
  add(ab_rrf, "--val-manifest", "val_manifest", &val_manifest, "validation manifest");
  add(ab_rrf, "--test-manifest", "test_manifest", &test_manifest, "evaluation manifest");

  CLI::App* sweep = app.add_subcommand("sweep", "accuracy versus degradation severity");
  add_common(sweep);
  add(sweep, "--checkpoint", "checkpoint", &checkpoint, "model checkpoint");
  add(sweep, "--manifest", "test_manifest", &test_manifest, "evaluation manifest");
  add(sweep, "--kernels", "kernels", &kernels, "blur kernel grid lo:hi:step (odd sizes)");
  add(sweep, "--ratios", "ratios", &ratios, "down-up ratio grid lo:hi:step");
  add(sweep, "--steps", "steps", &steps, "iteration count (default: checkpoint's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    KvConfig kv;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw std::invalid_argument("--config not found: " + config_path);
      kv = KvConfig::load(config_path);
    }
    for (const std::string& s : sets) {
      size_t eq = s.find('=');
      if (eq == std::string::npos || eq == 0)
        throw std::invalid_argument("--set expects key=value, got '" + s + "'");
      std::string key = s.substr(0, eq);
      while (!key.empty() && key.back() == ' ') key.pop_back();
      std::string value = s.substr(eq + 1);
      while (!value.empty() && value.front() == ' ') value.erase(value.begin());
      kv.set(key, value);
    }
    for (const Binding& b : binds)
      if (b.opt->count() > 0) kv.set(b.key, *b.slot);
    RunConfig rc = RunConfig::resolve(kv);

    if (*synth) return cmd_synth(std::move(rc));
    if (*train) return cmd_train(std::move(rc));
    if (*eval) return cmd_eval(std::move(rc));
    if (*demo) return cmd_demo(std::move(rc));
    if (*ab_steps) return cmd_ablate_steps(std::move(rc));
    if (*ab_fusion) return cmd_ablate_fusion(std::move(rc));
    if (*ab_rrf) return cmd_ablate_rrf(std::move(rc));
    if (*sweep) return cmd_sweep(std::move(rc));
    throw std::logic_error("no subcommand dispatched");
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace ifr
