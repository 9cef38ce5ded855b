#pragma once

#include <array>
#include <string>
#include <vector>

#include "ifr/data/charset.hpp"
#include "ifr/nn/layers.hpp"

namespace ifr {

enum class Direction { kLR, kRL };

struct Recognition {
  std::string text;  // reading order, at most max_t - 1 symbols
  Direction direction = Direction::kLR;
  double confidence = 0.0;  // mean log-probability of the chosen decode, <= 0
};

template <typename T>
struct MultiScale {
  std::array<nn::Tensor<T>, 5> stages;
};

// Recognition branch: a 5-stage strided encoder, a fully convolutional
// alignment module emitting one spatial attention map per decoding step, and
// two direction-specific recurrent decoders over the final feature stage.
template <typename T>
class Recognizer {
 public:
  static constexpr int kInputH = 32;
  static constexpr int kInputW = 128;

  Recognizer() = default;

  Recognizer(nn::ParamRegistry<T>& reg, const std::string& prefix, int c, int max_t,
             const Charset& charset, Rng& rng)
      : C_(c), maxT_(max_t), charset_(charset), K_(charset.num_classes()) {
    int cs[5] = {c / 8, c / 4, c / 2, c, c};
    int strides[5][2] = {{2, 2}, {2, 2}, {2, 2}, {2, 1}, {2, 1}};
    int cin = 1;
    for (int i = 0; i < 5; ++i) {
      std::string s = prefix + ".fe.s" + std::to_string(i + 1);
      fe_c1_[i] = nn::Conv2d<T>(reg, s + ".c1", cin, cs[i], 3, 3, strides[i][0], strides[i][1], 1, 1, rng);
      fe_n1_[i] = nn::InstanceNorm2d<T>(reg, s + ".n1", cs[i]);
      fe_c2_[i] = nn::Conv2d<T>(reg, s + ".c2", cs[i], cs[i], 3, 3, 1, 1, 1, 1, rng);
      fe_n2_[i] = nn::InstanceNorm2d<T>(reg, s + ".n2", cs[i]);
      cin = cs[i];
    }
    int d = c / 4;
    for (int i = 0; i < 5; ++i)
      cam_proj_[i] = nn::Conv2d<T>(reg, prefix + ".cam.p" + std::to_string(i + 1), cs[i], d, 1, 1, 1, 1, 0, 0, rng);
    cam_enc1_ = nn::Conv2d<T>(reg, prefix + ".cam.e1", d, d, 3, 3, 1, 2, 1, 1, rng);
    cam_enc2_ = nn::Conv2d<T>(reg, prefix + ".cam.e2", d, d, 3, 3, 1, 2, 1, 1, rng);
    cam_dec1_ = nn::ConvTranspose2d<T>(reg, prefix + ".cam.d1", d, d, 3, 3, 1, 2, 1, 1, 0, 1, rng);
    cam_dec2_ = nn::ConvTranspose2d<T>(reg, prefix + ".cam.d2", d, d, 3, 3, 1, 2, 1, 1, 0, 1, rng);
    cam_head_ = nn::Conv2d<T>(reg, prefix + ".cam.head", d, max_t, 1, 1, 1, 1, 0, 0, rng);
    int emb_dim = c / 4;
    dec_lr_ = Decoder(reg, prefix + ".dec.lr", K_ + 1, emb_dim, c, K_, rng);
    dec_rl_ = Decoder(reg, prefix + ".dec.rl", K_ + 1, emb_dim, c, K_, rng);
  }

  int max_t() const { return maxT_; }
  int num_classes() const { return K_; }
  const Charset& charset() const { return charset_; }

  MultiScale<T> encode(const nn::Tensor<T>& img) const {
    if (img.rank() != 4 || img.dim(1) != 1 || img.dim(2) != kInputH || img.dim(3) != kInputW)
      throw std::invalid_argument(
          "feature_encode: expected (b,1," + std::to_string(kInputH) + "," + std::to_string(kInputW) +
          "), got (" + std::to_string(img.dim(0)) + "," + std::to_string(img.dim(1)) + "," +
          std::to_string(img.dim(2)) + "," + std::to_string(img.dim(3)) + ")");
    MultiScale<T> out;
    nn::Tensor<T> x = img;
    for (int i = 0; i < 5; ++i) {
      x = nn::relu(fe_n1_[i](fe_c1_[i](x)));
      x = nn::relu(fe_n2_[i](fe_c2_[i](x)));
      out.stages[static_cast<size_t>(i)] = x;
    }
    return out;
  }

  // One spatial attention map per decoding step on the final stage's grid,
  // each normalized to sum 1.
  nn::Tensor<T> attention(const MultiScale<T>& f) const {
    const nn::Tensor<T>& f5 = f.stages[4];
    int hg = f5.dim(2), wg = f5.dim(3);
    nn::Tensor<T> agg;
    for (int i = 0; i < 5; ++i) {
      nn::Tensor<T> p = nn::adaptive_avg_pool(cam_proj_[i](f.stages[static_cast<size_t>(i)]), hg, wg);
      agg = i == 0 ? p : nn::add(agg, p);
    }
    nn::Tensor<T> e1 = nn::relu(cam_enc1_(agg));
    nn::Tensor<T> e2 = nn::relu(cam_enc2_(e1));
    nn::Tensor<T> d1 = nn::add(nn::relu(cam_dec1_(e2)), e1);
    nn::Tensor<T> d2 = nn::relu(cam_dec2_(d1));
    nn::Tensor<T> logits = cam_head_(d2);  // (B, maxT, hg, wg)
    int b = logits.dim(0);
    nn::Tensor<T> flat = nn::reshape(logits, {b, maxT_, hg * wg});
    return nn::reshape(nn::softmax_lastdim(flat), {b, maxT_, hg, wg});
  }

  // Attention bank for the right-to-left decoder: the same maps in reversed
  // step order, so the tail channels specialize on trailing characters and
  // the two directions never pull one channel toward different positions.
  nn::Tensor<T> attention_reversed(const nn::Tensor<T>& attn) const { return nn::reverse1(attn); }

  // Per-step class distributions, maxT_ rows of shape (B, K). With a teacher
  // the previous symbol is ground truth (reading order; reversed internally
  // for RL); otherwise the previous argmax. RL decodes the reversed sequence.
  std::vector<nn::Tensor<T>> decode(const nn::Tensor<T>& f5, const nn::Tensor<T>& attn, Direction dir,
                                    const std::vector<std::vector<int>>* teacher) const {
    const Decoder& dec = dir == Direction::kLR ? dec_lr_ : dec_rl_;
    int b = f5.dim(0), hg = f5.dim(2), wg = f5.dim(3), s = hg * wg;
    nn::Tensor<T> feat = nn::reshape(f5, {b, C_, s});
    nn::Tensor<T> amaps = nn::reshape(attn, {b, maxT_, s});
    nn::Tensor<T> ctx = nn::attention_context(feat, amaps);  // (B, maxT, C)

    std::vector<std::vector<int>> seq;  // teacher symbols in decode order, EOS padded
    if (teacher) {
      seq.reserve(teacher->size());
      for (const auto& ids : *teacher) {
        if (static_cast<int>(ids.size()) > maxT_ - 1)
          throw std::invalid_argument("decode: teacher longer than " + std::to_string(maxT_ - 1) + " symbols");
        std::vector<int> t(ids);
        if (dir == Direction::kRL) std::reverse(t.begin(), t.end());
        t.resize(static_cast<size_t>(maxT_), charset_.eos());
        seq.push_back(std::move(t));
      }
      if (static_cast<int>(seq.size()) != b) throw std::invalid_argument("decode: teacher batch size mismatch");
    }

    std::vector<nn::Tensor<T>> out;
    out.reserve(static_cast<size_t>(maxT_));
    nn::Tensor<T> h = nn::Tensor<T>::zeros({b, C_});
    std::vector<int> prev(static_cast<size_t>(b), K_);  // start token
    for (int t = 0; t < maxT_; ++t) {
      nn::Tensor<T> emb = dec.emb(prev);
      nn::Tensor<T> c_t = nn::reshape(nn::slice1(ctx, t, t + 1), {b, C_});
      h = dec.cell(nn::concat1<T>({emb, c_t}), h);
      nn::Tensor<T> probs = nn::softmax_lastdim(dec.cls(h));
      if (teacher) {
        for (int i = 0; i < b; ++i) prev[static_cast<size_t>(i)] = seq[static_cast<size_t>(i)][static_cast<size_t>(t)];
      } else {
        for (int i = 0; i < b; ++i) prev[static_cast<size_t>(i)] = argmax_row(probs, i);
      }
      out.push_back(std::move(probs));
    }
    return out;
  }

  // Decodes both directions and keeps, per sample, the candidate with the
  // higher mean log-probability (ties and equal text go left-to-right).
  std::vector<Recognition> recognize(const nn::Tensor<T>& f5, const nn::Tensor<T>& attn,
                                     const nn::Tensor<T>& attn_rev) const {
    std::vector<nn::Tensor<T>> p_lr = decode(f5, attn, Direction::kLR, nullptr);
    std::vector<nn::Tensor<T>> p_rl = decode(f5, attn_rev, Direction::kRL, nullptr);
    int b = f5.dim(0);
    std::vector<Recognition> out(static_cast<size_t>(b));
    for (int i = 0; i < b; ++i) {
      auto [lr_text, lr_conf] = read_off(p_lr, i);
      auto [rl_text, rl_conf] = read_off(p_rl, i);
      std::reverse(rl_text.begin(), rl_text.end());
      Recognition& r = out[static_cast<size_t>(i)];
      if (rl_text == lr_text || rl_conf <= lr_conf) {
        r = {lr_text, Direction::kLR, lr_conf};
      } else {
        r = {rl_text, Direction::kRL, rl_conf};
      }
    }
    return out;
  }

  // Mean over the batch of the per-sample bidirectional negative
  // log-likelihood: -(1/2) * sum over the label plus end marker, both
  // directions. Probabilities clamped at 1e-12 before the log.
  nn::Tensor<T> loss(const std::vector<nn::Tensor<T>>& p_lr, const std::vector<nn::Tensor<T>>& p_rl,
                     const std::vector<std::vector<int>>& labels) const {
    int b = static_cast<int>(labels.size());
    int max_len = 0;
    for (const auto& ids : labels) {
      if (static_cast<int>(ids.size()) > maxT_ - 1)
        throw std::invalid_argument("recognition loss: label longer than " + std::to_string(maxT_ - 1));
      max_len = std::max(max_len, static_cast<int>(ids.size()));
    }
    nn::Tensor<T> acc = nn::Tensor<T>::zeros({b});
    for (int d = 0; d < 2; ++d) {
      const auto& probs = d == 0 ? p_lr : p_rl;
      for (int t = 0; t <= max_len && t < maxT_; ++t) {
        std::vector<int> target(static_cast<size_t>(b));
        std::vector<T> mask(static_cast<size_t>(b));
        for (int i = 0; i < b; ++i) {
          const auto& ids = labels[static_cast<size_t>(i)];
          int len = static_cast<int>(ids.size());
          int pos = d == 0 ? t : len - 1 - t;  // RL reads the label reversed
          target[static_cast<size_t>(i)] = t < len ? ids[static_cast<size_t>(pos)] : charset_.eos();
          mask[static_cast<size_t>(i)] = t <= len ? T(1) : T(0);
        }
        nn::Tensor<T> lg = nn::log_op(nn::clamp_min(nn::select_index(probs[static_cast<size_t>(t)], target), T(1e-12)));
        acc = nn::add(acc, nn::mul(lg, nn::Tensor<T>::from_data({b}, std::move(mask))));
      }
    }
    return nn::mul_scalar(nn::sum_all(acc), T(-0.5) / static_cast<T>(b));
  }

 private:
  struct Decoder {
    nn::EmbeddingTable<T> emb;
    nn::GRUCell<T> cell;
    nn::Linear<T> cls;

    Decoder() = default;
    Decoder(nn::ParamRegistry<T>& reg, const std::string& name, int vocab, int emb_dim, int c, int k, Rng& rng)
        : emb(reg, name + ".emb", vocab, emb_dim, rng),
          cell(reg, name + ".cell", emb_dim + c, c, rng),
          cls(reg, name + ".cls", c, k, rng) {}
  };

  int argmax_row(const nn::Tensor<T>& probs, int row) const {
    const T* p = probs.val().data() + static_cast<size_t>(row) * K_;
    int best = 0;
    for (int k = 1; k < K_; ++k)
      if (p[k] > p[best]) best = k;
    return best;
  }

  // Greedy transcript for one sample: symbols until the first end marker (at
  // most maxT-1), plus the mean log-probability of the consumed steps.
  std::pair<std::string, double> read_off(const std::vector<nn::Tensor<T>>& probs, int row) const {
    std::string text;
    double logp = 0.0;
    int steps = 0;
    for (int t = 0; t < maxT_; ++t) {
      const T* p = probs[static_cast<size_t>(t)].val().data() + static_cast<size_t>(row) * K_;
      int best = 0;
      for (int k = 1; k < K_; ++k)
        if (p[k] > p[best]) best = k;
      logp += std::log(std::max(static_cast<double>(p[best]), 1e-12));
      ++steps;
      if (best == charset_.eos()) break;
      if (static_cast<int>(text.size()) < maxT_ - 1) text.push_back(charset_.symbol(best));
    }
    return {text, logp / steps};
  }

  int C_ = 0;
  int maxT_ = 0;
  Charset charset_;
  int K_ = 0;
  std::array<nn::Conv2d<T>, 5> fe_c1_, fe_c2_;
  std::array<nn::InstanceNorm2d<T>, 5> fe_n1_, fe_n2_;
  std::array<nn::Conv2d<T>, 5> cam_proj_;
  nn::Conv2d<T> cam_enc1_, cam_enc2_, cam_head_;
  nn::ConvTranspose2d<T> cam_dec1_, cam_dec2_;
  Decoder dec_lr_, dec_rl_;
};

}  // namespace ifr
