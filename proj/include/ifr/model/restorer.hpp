#pragma once

#include <string>
#include <vector>

#include "ifr/model/config.hpp"
#include "ifr/model/recognizer.hpp"
#include "ifr/nn/layers.hpp"

namespace ifr {

// Restoration branch: multi-scale fusion of recognizer features with a
// shallow image feature, a residual channel-attention trunk, and a sigmoid
// reconstruction head. Same-resolution in and out.
template <typename T>
class Restorer {
 public:
  Restorer() = default;

  // stage_channels: encoder stage widths (C/8..C) for the fusion reducers.
  Restorer(nn::ParamRegistry<T>& reg, const std::string& prefix, int c_ir, std::vector<int> fusion,
           const std::vector<int>& stage_channels, bool rrf, Rng& rng)
      : c_ir_(c_ir), fusion_(std::move(fusion)), rrf_(rrf) {
    shallow_ = nn::Conv2d<T>(reg, prefix + ".shallow", 1, c_ir, 3, 3, 1, 1, 1, 1, rng);
    for (size_t j = 0; j < fusion_.size(); ++j) {
      int s = fusion_[j];
      reduce_[j] = nn::Conv2d<T>(reg, prefix + ".reduce" + std::to_string(s),
                                 stage_channels[static_cast<size_t>(s - 1)], c_ir / 4, 1, 1, 1, 1, 0, 0, rng);
    }
    int cat = c_ir + 3 * (c_ir / 4);
    proj_ = nn::Conv2d<T>(reg, prefix + ".proj", cat, c_ir, 1, 1, 1, 1, 0, 0, rng);
    for (int i = 0; i < 4; ++i) rcab_[i] = Rcab(reg, prefix + ".rcab" + std::to_string(i + 1), c_ir, rng);
    group_conv_[0] = nn::Conv2d<T>(reg, prefix + ".g1.conv", c_ir, c_ir, 3, 3, 1, 1, 1, 1, rng);
    group_conv_[1] = nn::Conv2d<T>(reg, prefix + ".g2.conv", c_ir, c_ir, 3, 3, 1, 1, 1, 1, rng);
    trunk_conv_ = nn::Conv2d<T>(reg, prefix + ".trunk.conv", c_ir, c_ir, 3, 3, 1, 1, 1, 1, rng);
    head_ = nn::Conv2d<T>(reg, prefix + ".head", c_ir, 1, 3, 3, 1, 1, 1, 1, rng);
  }

  // Shallow image feature plus reduced/upsampled encoder stages (ascending,
  // shallow last), projected back to c_ir channels. With the fusion path off
  // the stage maps are zero constants: the restorer sees only the image and
  // no gradient reaches the recognizer through here.
  nn::Tensor<T> fuse(const nn::Tensor<T>& img, const MultiScale<T>& feats) const {
    int b = img.dim(0), h = img.dim(2), w = img.dim(3);
    std::vector<nn::Tensor<T>> parts;
    for (size_t j = 0; j < fusion_.size(); ++j) {
      if (rrf_) {
        const nn::Tensor<T>& stage = feats.stages[static_cast<size_t>(fusion_[j] - 1)];
        parts.push_back(nn::bilinear_resize_op(reduce_[j](stage), h, w));
      } else {
        parts.push_back(nn::Tensor<T>::zeros({b, c_ir_ / 4, h, w}));
      }
    }
    parts.push_back(shallow_(img));
    return proj_(nn::concat1(parts));
  }

  // Two residual groups of two channel-attention blocks each, a long skip
  // over the whole trunk, then a 3x3 head squashed by a sigmoid.
  nn::Tensor<T> restore(const nn::Tensor<T>& fused) const {
    nn::Tensor<T> g1 = nn::add(fused, group_conv_[0](rcab_[1](rcab_[0](fused))));
    nn::Tensor<T> g2 = nn::add(g1, group_conv_[1](rcab_[3](rcab_[2](g1))));
    nn::Tensor<T> trunk = nn::add(fused, trunk_conv_(g2));
    return nn::sigmoid(head_(trunk));
  }

  // Full step: fused restoration, or the unmodified input when stubbed (the
  // stub exposes the iteration wiring to tests).
  nn::Tensor<T> run(const nn::Tensor<T>& img, const MultiScale<T>& feats) const {
    if (identity_stub) return img;
    return restore(fuse(img, feats));
  }

  bool identity_stub = false;

 private:
  // x + CA(conv(relu(conv(x)))) where CA rescales channels by a squeezed
  // statistic: sigmoid(f2(relu(f1(global average)))), bottleneck c/4.
  struct Rcab {
    nn::Conv2d<T> c1, c2;
    nn::Linear<T> f1, f2;

    Rcab() = default;
    Rcab(nn::ParamRegistry<T>& reg, const std::string& name, int c, Rng& rng)
        : c1(reg, name + ".c1", c, c, 3, 3, 1, 1, 1, 1, rng),
          c2(reg, name + ".c2", c, c, 3, 3, 1, 1, 1, 1, rng),
          f1(reg, name + ".f1", c, c / 4, rng),
          f2(reg, name + ".f2", c / 4, c, rng) {}

    nn::Tensor<T> operator()(const nn::Tensor<T>& x) const {
      int b = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
      nn::Tensor<T> u = c2(nn::relu(c1(x)));
      nn::Tensor<T> g = nn::reshape(nn::mean_spatial(u), {b, c});
      g = nn::sigmoid(f2(nn::relu(f1(g))));
      nn::Tensor<T> scale = nn::broadcast_spatial(nn::reshape(g, {b, c, 1, 1}), h, w);
      return nn::add(x, nn::mul(u, scale));
    }
  };

  int c_ir_ = 0;
  std::vector<int> fusion_;
  bool rrf_ = true;
  nn::Conv2d<T> shallow_;
  std::array<nn::Conv2d<T>, 3> reduce_;
  nn::Conv2d<T> proj_;
  std::array<Rcab, 4> rcab_;
  std::array<nn::Conv2d<T>, 2> group_conv_;
  nn::Conv2d<T> trunk_conv_;
  nn::Conv2d<T> head_;
};

// (1/N) * mean absolute (or squared) difference between each restored step
// and the clean target, averaged over batch and pixels.
template <typename T>
nn::Tensor<T> pixel_loss(const std::vector<nn::Tensor<T>>& restored, const nn::Tensor<T>& hq,
                         PixelNorm norm) {
  if (restored.empty()) throw std::invalid_argument("pixel_loss: at least one restored image required");
  nn::Tensor<T> acc;
  for (const auto& r : restored) {
    nn::Tensor<T> diff = nn::sub(hq, r);
    nn::Tensor<T> term = nn::mean_all(norm == PixelNorm::kL1 ? nn::abs_op(diff) : nn::square(diff));
    acc = acc.defined() ? nn::add(acc, term) : term;
  }
  return nn::mul_scalar(acc, T(1) / static_cast<T>(restored.size()));
}

}  // namespace ifr
