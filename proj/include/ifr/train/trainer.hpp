#pragma once

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "ifr/model/checkpoint.hpp"
#include "ifr/train/adadelta.hpp"
#include "ifr/train/evaluate.hpp"

namespace ifr {

struct EpochLog {
  int epoch = 0;
  double lr = 0.0;
  double rec = 0.0;
  double pixel = 0.0;
  double total = 0.0;
  EvalReport val;
};

namespace train_detail {

inline void write_log_header(std::ofstream& f, int steps) {
  f << "epoch,lr,rec_loss,pixel_loss,total_loss";
  for (int s = 1; s <= steps; ++s) f << ",acc_step" << s;
  for (int s = 1; s <= steps; ++s) f << ",psnr_step" << s;
  for (int s = 1; s <= steps; ++s) f << ",ssim_step" << s;
  f << "\n";
}

inline void write_log_row(std::ofstream& f, const EpochLog& log) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d,%.6g,%.6f,%.6f,%.6f", log.epoch, log.lr, log.rec, log.pixel, log.total);
  f << buf;
  for (const auto& r : log.val.rows) {
    std::snprintf(buf, sizeof(buf), ",%.6f", r.accuracy);
    f << buf;
  }
  for (const auto& r : log.val.rows) {
    std::snprintf(buf, sizeof(buf), ",%.6f", r.psnr);
    f << buf;
  }
  for (const auto& r : log.val.rows) {
    std::snprintf(buf, sizeof(buf), ",%.6f", r.ssim);
    f << buf;
  }
  f << "\n";
  f.flush();
}

}  // namespace train_detail

// Full training loop: seeded shuffling, fixed-size batches with the last
// partial batch kept, Adadelta updates, per-epoch validation, a CSV log, and
// last/best/periodic checkpoints under out_dir. Model selection is word
// accuracy at the final test step. `progress`, when given, receives one line
// per epoch.
template <typename T>
std::vector<EpochLog> train_model(IfrModel<T>& model, const PairedDataset& train_ds,
                                  const PairedDataset& val_ds, const TrainConfig& tc,
                                  const std::string& out_dir, std::ostream* progress = nullptr) {
  tc.validate();
  if (train_ds.size() == 0) throw std::invalid_argument("train: empty training set");
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("train: cannot create " + out_dir + ": " + ec.message());
  {
    // Fail on an unwritable output directory before spending time training.
    std::ofstream probe((fs::path(out_dir) / "log.csv").string(), std::ios::binary);
    if (!probe) throw std::runtime_error("train: cannot write into " + out_dir);
  }

  const Charset& charset = model.recognizer.charset();
  Adadelta<T> opt(model.params, tc.rho, tc.adadelta_eps);
  std::ofstream log_file((fs::path(out_dir) / "log.csv").string(), std::ios::binary);
  train_detail::write_log_header(log_file, model.cfg.test_steps);

  std::vector<EpochLog> logs;
  double lr = tc.lr;
  double best_acc = -1.0;
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    std::vector<size_t> order(train_ds.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Rng shuffle_rng(derive_seed(tc.seed, static_cast<uint64_t>(epoch)));
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.uniform_int(static_cast<int>(i)));
      std::swap(order[i - 1], order[j]);
    }

    double rec_sum = 0.0, pix_sum = 0.0, tot_sum = 0.0;
    size_t seen = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(tc.batch_size)) {
      size_t end = std::min(order.size(), start + static_cast<size_t>(tc.batch_size));
      std::vector<Image> dq_imgs, hq_imgs;
      std::vector<std::vector<int>> labels;
      for (size_t k = start; k < end; ++k) {
        PairedSample s = tc.redegrade_each_epoch
                             ? train_ds.get_salted(order[k], static_cast<uint64_t>(epoch))
                             : train_ds.get(order[k]);
        labels.push_back(charset.encode(s.label));
        dq_imgs.push_back(std::move(s.dq));
        hq_imgs.push_back(std::move(s.hq));
      }
      nn::Tensor<T> dq = images_to_tensor<T>(dq_imgs);
      nn::Tensor<T> hq = images_to_tensor<T>(hq_imgs);

      model.params.zero_grad();
      IterationTrace<T> trace = iterate(model, dq, model.cfg.train_steps, &labels);
      LossBreakdown<T> loss = total_loss(trace, hq, model.cfg);
      nn::backward(loss.total_node);
      opt.step(lr);

      size_t bsz = end - start;
      rec_sum += static_cast<double>(loss.rec) * bsz;
      pix_sum += static_cast<double>(loss.pixel) * bsz;
      tot_sum += static_cast<double>(loss.total) * bsz;
      seen += bsz;
    }

    EpochLog log;
    log.epoch = epoch;
    log.lr = lr;
    log.rec = rec_sum / seen;
    log.pixel = pix_sum / seen;
    log.total = tot_sum / seen;
    log.val = evaluate_model(model, val_ds, model.cfg.test_steps, tc.batch_size);
    train_detail::write_log_row(log_file, log);
    logs.push_back(log);
    if (progress) {
      char line[160];
      std::snprintf(line, sizeof(line), "epoch %d/%d  lr=%g  total=%.4f  val_acc=%.4f  val_psnr=%.2f",
                    epoch, tc.epochs, lr, log.total, log.val.rows.back().accuracy,
                    log.val.rows.back().psnr);
      *progress << line << std::endl;
    }

    save_checkpoint(model, (fs::path(out_dir) / "ckpt_last.ifr").string());
    double acc = log.val.rows.back().accuracy;
    if (acc > best_acc) {
      best_acc = acc;
      save_checkpoint(model, (fs::path(out_dir) / "ckpt_best.ifr").string());
    }
    if (tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0)
      save_checkpoint(model, (fs::path(out_dir) / ("ckpt_epoch" + std::to_string(epoch) + ".ifr")).string());

    if (std::find(tc.decay_epochs.begin(), tc.decay_epochs.end(), epoch) != tc.decay_epochs.end())
      lr *= tc.decay_factor;
  }
  return logs;
}

}  // namespace ifr
