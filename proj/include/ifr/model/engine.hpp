#pragma once

#include <string>
#include <vector>

#include "ifr/model/config.hpp"
#include "ifr/model/recognizer.hpp"
#include "ifr/model/restorer.hpp"

namespace ifr {

// The full two-branch model. Parameter initialization is a pure function of
// the config (including init_seed), so two models built from the same config
// are bit-identical before training.
template <typename T>
struct IfrModel {
  EngineConfig cfg;
  nn::ParamRegistry<T> params;
  Recognizer<T> recognizer;
  Restorer<T> restorer;

  explicit IfrModel(EngineConfig c) : cfg(std::move(c)) {
    cfg.validate();
    Rng rng(cfg.init_seed);
    Charset charset(cfg.charset);
    recognizer = Recognizer<T>(params, "rec", cfg.c_str, cfg.max_t, charset, rng);
    std::vector<int> stage_channels = {cfg.c_str / 8, cfg.c_str / 4, cfg.c_str / 2, cfg.c_str, cfg.c_str};
    restorer = Restorer<T>(params, "res", cfg.c_ir, cfg.fusion, stage_channels, cfg.rrf, rng);
  }

  IfrModel(const IfrModel&) = delete;
  IfrModel& operator=(const IfrModel&) = delete;
  IfrModel(IfrModel&&) = default;
  IfrModel& operator=(IfrModel&&) = default;
};

template <typename T>
struct StepRecord {
  std::vector<nn::Tensor<T>> p_lr, p_rl;  // teacher-forced distributions, one (B,K) per step
  std::vector<Recognition> recognitions;  // inference mode only
  nn::Tensor<T> restored;                 // (B,1,32,128)
  nn::Tensor<T> rec_loss;                 // scalar node, teacher mode only
};

template <typename T>
struct IterationTrace {
  nn::Tensor<T> input_dq;
  std::vector<StepRecord<T>> steps;
  bool teacher_forced = false;
};

// Runs the alternating recognize/restore loop: step 1 consumes the degraded
// input, every later step consumes the previous step's restored image in
// both the encoder and the fusion module. Gradients flow through the whole
// chain unless cfg.detach_between_steps cuts the step boundary.
template <typename T>
IterationTrace<T> iterate(const IfrModel<T>& model, const nn::Tensor<T>& dq, int steps,
                          const std::vector<std::vector<int>>* teacher) {
  if (steps < 1) throw std::invalid_argument("iterate: steps must be >= 1");
  IterationTrace<T> trace;
  trace.input_dq = dq;
  trace.teacher_forced = teacher != nullptr;
  nn::Tensor<T> cur = dq;
  for (int n = 0; n < steps; ++n) {
    StepRecord<T> rec;
    MultiScale<T> feats = model.recognizer.encode(cur);
    nn::Tensor<T> attn = model.recognizer.attention(feats);
    nn::Tensor<T> attn_rev = model.recognizer.attention_reversed(attn);
    const nn::Tensor<T>& f5 = feats.stages[4];
    if (teacher) {
      rec.p_lr = model.recognizer.decode(f5, attn, Direction::kLR, teacher);
      rec.p_rl = model.recognizer.decode(f5, attn_rev, Direction::kRL, teacher);
      rec.rec_loss = model.recognizer.loss(rec.p_lr, rec.p_rl, *teacher);
    } else {
      rec.recognitions = model.recognizer.recognize(f5, attn, attn_rev);
    }
    rec.restored = model.restorer.run(cur, feats);
    cur = model.cfg.detach_between_steps ? rec.restored.detach() : rec.restored;
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

template <typename T>
struct LossBreakdown {
  T rec = T(0);
  T pixel = T(0);
  T lambda = T(0);
  T total = T(0);
  nn::Tensor<T> total_node;
};

// Joint objective: recognition loss averaged over steps plus lambda times the
// pixel loss over all restored steps.
template <typename T>
LossBreakdown<T> total_loss(const IterationTrace<T>& trace, const nn::Tensor<T>& hq,
                            const EngineConfig& cfg) {
  if (!trace.teacher_forced || trace.steps.empty())
    throw std::logic_error("total_loss: trace must come from a teacher-forced iterate");
  nn::Tensor<T> rec_acc;
  std::vector<nn::Tensor<T>> restored;
  for (const auto& s : trace.steps) {
    rec_acc = rec_acc.defined() ? nn::add(rec_acc, s.rec_loss) : s.rec_loss;
    restored.push_back(s.restored);
  }
  nn::Tensor<T> rec = nn::mul_scalar(rec_acc, T(1) / static_cast<T>(trace.steps.size()));
  nn::Tensor<T> pix = pixel_loss(restored, hq, cfg.pixel_norm);
  nn::Tensor<T> total = nn::add(rec, nn::mul_scalar(pix, static_cast<T>(cfg.lambda)));

  LossBreakdown<T> out;
  out.rec = rec.item();
  out.pixel = pix.item();
  out.lambda = static_cast<T>(cfg.lambda);
  out.total = total.item();
  out.total_node = total;
  return out;
}

}  // namespace ifr
