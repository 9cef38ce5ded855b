#pragma once

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ifr/data/dataset.hpp"
#include "ifr/metrics/metrics.hpp"
#include "ifr/model/engine.hpp"

namespace ifr {

template <typename T>
nn::Tensor<T> images_to_tensor(const std::vector<Image>& imgs) {
  if (imgs.empty()) throw std::invalid_argument("images_to_tensor: empty batch");
  int b = static_cast<int>(imgs.size()), h = imgs[0].h, w = imgs[0].w;
  std::vector<T> data(static_cast<size_t>(b) * h * w);
  for (int i = 0; i < b; ++i) {
    if (imgs[static_cast<size_t>(i)].h != h || imgs[static_cast<size_t>(i)].w != w)
      throw std::invalid_argument("images_to_tensor: mixed shapes in batch");
    const auto& src = imgs[static_cast<size_t>(i)].data;
    for (size_t j = 0; j < src.size(); ++j) data[static_cast<size_t>(i) * src.size() + j] = static_cast<T>(src[j]);
  }
  return nn::Tensor<T>::from_data({b, 1, h, w}, std::move(data));
}

template <typename T>
Image plane_to_image(const nn::Tensor<T>& t, int b) {
  int h = t.dim(2), w = t.dim(3);
  Image img(h, w);
  const T* src = t.val().data() + static_cast<size_t>(b) * t.dim(1) * h * w;
  for (size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<double>(src[i]);
  return img;
}

struct EvalRow {
  int step = 0;
  double accuracy = 0.0;
  double ssim = 0.0;
  double psnr = 0.0;  // mean of per-sample values capped at 100 dB
  int n = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;  // one per step 1..max_steps
  double input_psnr = 0.0;    // degraded input vs clean, same cap
  double input_ssim = 0.0;
  int n = 0;
};

namespace eval_detail {

inline double capped(double v) { return std::min(v, kPsnrReportCap); }

}  // namespace eval_detail

// Batched inference over a paired dataset: per step, word accuracy of the
// step's recognition plus mean PSNR/SSIM of the step's restored image against
// the clean target. Metrics are computed on 8-bit-quantized images when the
// model config asks for report parity with written PNGs.
template <typename T>
EvalReport evaluate_model(const IfrModel<T>& model, const PairedDataset& ds, int max_steps,
                          int batch_size) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  if (max_steps < 1) throw std::invalid_argument("evaluate: max_steps must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("evaluate: batch_size must be >= 1");
  nn::NoGradGuard no_grad;
  bool q = model.cfg.quantize_metrics;

  std::vector<std::string> gts;
  std::vector<std::vector<std::string>> preds(static_cast<size_t>(max_steps));
  std::vector<double> psnr_sum(static_cast<size_t>(max_steps), 0.0), ssim_sum(static_cast<size_t>(max_steps), 0.0);
  double in_psnr = 0.0, in_ssim = 0.0;

  for (size_t start = 0; start < ds.size(); start += static_cast<size_t>(batch_size)) {
    size_t end = std::min(ds.size(), start + static_cast<size_t>(batch_size));
    std::vector<Image> dq_imgs, hq_imgs;
    for (size_t i = start; i < end; ++i) {
      PairedSample s = ds.get(i);
      gts.push_back(s.label);
      dq_imgs.push_back(std::move(s.dq));
      hq_imgs.push_back(std::move(s.hq));
    }
    nn::Tensor<T> dq = images_to_tensor<T>(dq_imgs);
    IterationTrace<T> trace = iterate(model, dq, max_steps, nullptr);

    for (size_t i = 0; i < dq_imgs.size(); ++i) {
      Image hq_m = q ? quantize8(hq_imgs[i]) : hq_imgs[i];
      Image dq_m = q ? quantize8(dq_imgs[i]) : dq_imgs[i];
      in_psnr += eval_detail::capped(psnr(dq_m, hq_m));
      in_ssim += ssim(dq_m, hq_m);
      for (int n = 0; n < max_steps; ++n) {
        const StepRecord<T>& step = trace.steps[static_cast<size_t>(n)];
        preds[static_cast<size_t>(n)].push_back(step.recognitions[i].text);
        Image r = plane_to_image(step.restored, static_cast<int>(i));
        Image r_m = q ? quantize8(std::move(r)) : clamp01(std::move(r));
        psnr_sum[static_cast<size_t>(n)] += eval_detail::capped(psnr(r_m, hq_m));
        ssim_sum[static_cast<size_t>(n)] += ssim(r_m, hq_m);
      }
    }
  }

  EvalReport rep;
  rep.n = static_cast<int>(ds.size());
  rep.input_psnr = in_psnr / rep.n;
  rep.input_ssim = in_ssim / rep.n;
  for (int n = 0; n < max_steps; ++n) {
    EvalRow row;
    row.step = n + 1;
    row.n = rep.n;
    row.accuracy = word_accuracy(preds[static_cast<size_t>(n)], gts);
    row.psnr = psnr_sum[static_cast<size_t>(n)] / rep.n;
    row.ssim = ssim_sum[static_cast<size_t>(n)] / rep.n;
    rep.rows.push_back(row);
  }
  return rep;
}

inline void write_eval_csv(const EvalReport& rep, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write report: " + path);
  f << "step,accuracy,ssim,psnr\n";
  char buf[128];
  for (const auto& r : rep.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f\n", r.step, r.accuracy, r.ssim, r.psnr);
    f << buf;
  }
  if (!f) throw std::runtime_error("write failed for report: " + path);
}

}  // namespace ifr
