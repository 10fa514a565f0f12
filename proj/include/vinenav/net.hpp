#pragma once

// Small convolutional networks with an exact reverse pass. Samples are
// processed one at a time: activations live in row-major (H*W) x C matrices
// and convolutions run as im2col products.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vinenav/rng.hpp"

namespace vinenav {

enum class LayerKind { Conv, MaxPool, GlobalAvgPool, Dense };

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int kernel = 0;  // Conv kernel size, MaxPool window
  int filters = 0;
  int stride = 1;
  int units = 0;
  bool relu = true;

  static LayerSpec conv(int k, int f, int s) { return {LayerKind::Conv, k, f, s, 0, true}; }
  static LayerSpec max_pool(int p) { return {LayerKind::MaxPool, p, 0, p, 0, false}; }
  static LayerSpec global_avg_pool() { return {LayerKind::GlobalAvgPool, 0, 0, 1, 0, false}; }
  static LayerSpec dense(int units, bool relu = true) { return {LayerKind::Dense, 0, 0, 1, units, relu}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Image trunk followed by a dense head. The extra vector is concatenated to
/// the trunk features at the first dense layer. image_height == 0 means no
/// trunk: the head sees the extra vector alone.
struct ArchSpec {
  int image_height = 0;
  int image_width = 0;
  int image_channels = 1;
  int extra = 0;
  std::vector<LayerSpec> layers;

  [[nodiscard]] std::string describe() const {
    std::ostringstream os;
    os << "in " << image_height << 'x' << image_width << 'x' << image_channels << " +" << extra;
    for (const auto& l : layers) {
      switch (l.kind) {
        case LayerKind::Conv: os << " | conv k" << l.kernel << " f" << l.filters << " s" << l.stride; break;
        case LayerKind::MaxPool: os << " | maxpool " << l.kernel; break;
        case LayerKind::GlobalAvgPool: os << " | gap"; break;
        case LayerKind::Dense: os << " | dense " << l.units << (l.relu ? " relu" : ""); break;
      }
    }
    return os.str();
  }

  friend bool operator==(const ArchSpec&, const ArchSpec&) = default;
};

/// Depth trunk shared by actor and critic: 112 -> 56 -> 56 -> 28 -> 14 -> 14 -> 32 features.
inline std::vector<LayerSpec> depth_trunk() {
  return {LayerSpec::conv(3, 32, 2), LayerSpec::conv(3, 32, 1), LayerSpec::max_pool(2),
          LayerSpec::conv(3, 32, 2), LayerSpec::conv(3, 32, 1), LayerSpec::global_avg_pool()};
}

inline ArchSpec actor_arch(int image = 112) {
  ArchSpec a{image, image, 1, 3, depth_trunk()};
  a.layers.push_back(LayerSpec::dense(256));
  a.layers.push_back(LayerSpec::dense(256));
  a.layers.push_back(LayerSpec::dense(4, false));
  return a;
}

inline ArchSpec critic_arch(int image = 112) {
  ArchSpec a{image, image, 1, 5, depth_trunk()};
  a.layers.push_back(LayerSpec::dense(256));
  a.layers.push_back(LayerSpec::dense(256));
  a.layers.push_back(LayerSpec::dense(1, false));
  return a;
}

/// Plain MLP on a state vector, used for vision-free problems.
inline ArchSpec mlp_arch(int inputs, std::vector<int> hidden, int outputs) {
  ArchSpec a{0, 0, 0, inputs, {}};
  for (int h : hidden) a.layers.push_back(LayerSpec::dense(h));
  a.layers.push_back(LayerSpec::dense(outputs, false));
  return a;
}

/// TF-style "same" padding: output = ceil(in / stride), extra padding at the end.
struct ConvGeometry {
  int in_h, in_w, in_c, out_h, out_w, k, stride, pad_top, pad_left;
};

inline ConvGeometry same_padding(int h, int w, int c, int k, int s) {
  const int oh = (h + s - 1) / s, ow = (w + s - 1) / s;
  const int ph = std::max((oh - 1) * s + k - h, 0), pw = std::max((ow - 1) * s + k - w, 0);
  return {h, w, c, oh, ow, k, s, ph / 2, pw / 2};
}

/// One named slice of the flat parameter vector.
struct ParamBlock {
  std::string name;
  int rows = 0;
  int cols = 0;
  std::size_t offset = 0;
  [[nodiscard]] std::size_t size() const { return std::size_t(rows) * cols; }
};

struct LayerLayout {
  LayerSpec spec;
  int in_h = 0, in_w = 0, in_c = 0;  // dense layers: in_h = in_w = 1, in_c = fan-in
  int out_h = 0, out_w = 0, out_c = 0;
  ConvGeometry geom{};
  int weight_block = -1;  // index into the shape table
  bool concat_here = false;
};

template <typename Scalar>
class Network {
 public:
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

  struct Tape {
    std::vector<Mat> in;   // input of every layer
    std::vector<Mat> out;  // output of every layer, after activation
    std::vector<std::vector<int>> argmax;
  };

  Network() = default;

  explicit Network(ArchSpec arch) : arch_(std::move(arch)) {
    int h = arch_.image_height, w = arch_.image_width, c = arch_.image_channels;
    bool flat = arch_.image_height == 0;
    if (flat) h = w = 1, c = 0;
    std::size_t offset = 0;
    int conv_i = 0, dense_i = 0;
    for (const auto& spec : arch_.layers) {
      LayerLayout L;
      L.spec = spec;
      switch (spec.kind) {
        case LayerKind::Conv: {
          if (flat) throw std::invalid_argument("conv layer after the flatten point");
          L.geom = same_padding(h, w, c, spec.kernel, spec.stride);
          L.in_h = h, L.in_w = w, L.in_c = c;
          h = L.geom.out_h, w = L.geom.out_w, c = spec.filters;
          const std::string name = "conv" + std::to_string(++conv_i);
          L.weight_block = int(shapes_.size());
          shapes_.push_back({name + ".w", spec.kernel * spec.kernel * L.in_c, spec.filters, offset});
          offset += shapes_.back().size();
          shapes_.push_back({name + ".b", 1, spec.filters, offset});
          offset += spec.filters;
          break;
        }
        case LayerKind::MaxPool:
          if (flat) throw std::invalid_argument("pool layer after the flatten point");
          L.in_h = h, L.in_w = w, L.in_c = c;
          h /= spec.kernel, w /= spec.kernel;
          break;
        case LayerKind::GlobalAvgPool:
          if (flat) throw std::invalid_argument("duplicate global pool");
          L.in_h = h, L.in_w = w, L.in_c = c;
          h = w = 1;
          flat = true;
          break;
        case LayerKind::Dense: {
          if (!flat) throw std::invalid_argument("dense layer before the flatten point");
          if (dense_i == 0) {
            L.concat_here = true;
            c += arch_.extra;
          }
          L.in_h = L.in_w = 1, L.in_c = c;
          c = spec.units;
          const std::string name = "dense" + std::to_string(++dense_i);
          L.weight_block = int(shapes_.size());
          shapes_.push_back({name + ".w", L.in_c, spec.units, offset});
          offset += shapes_.back().size();
          shapes_.push_back({name + ".b", 1, spec.units, offset});
          offset += spec.units;
          break;
        }
      }
      L.out_h = h, L.out_w = w, L.out_c = c;
      layout_.push_back(L);
    }
    if (layout_.empty() || layout_.back().spec.kind != LayerKind::Dense)
      throw std::invalid_argument("network must end in a dense layer");
    params_ = Vec::Zero(Eigen::Index(offset));
  }

  [[nodiscard]] const ArchSpec& arch() const { return arch_; }
  [[nodiscard]] const std::vector<ParamBlock>& shapes() const { return shapes_; }
  [[nodiscard]] const std::vector<LayerLayout>& layout() const { return layout_; }
  [[nodiscard]] std::size_t parameter_count() const { return std::size_t(params_.size()); }
  [[nodiscard]] int outputs() const { return layout_.back().out_c; }
  [[nodiscard]] int feature_size() const {
    for (const auto& L : layout_)
      if (L.concat_here) return L.in_c - arch_.extra;
    return 0;
  }
  [[nodiscard]] std::size_t image_size() const {
    return std::size_t(arch_.image_height) * arch_.image_width * arch_.image_channels;
  }

  Vec& params() { return params_; }
  [[nodiscard]] const Vec& params() const { return params_; }

  /// Fan-in scaled uniform weights and biases, U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  void init(Rng& rng) {
    for (const auto& L : layout_) {
      if (L.weight_block < 0) continue;
      const auto& wb = shapes_[std::size_t(L.weight_block)];
      const auto& bb = shapes_[std::size_t(L.weight_block) + 1];
      const double bound = 1.0 / std::sqrt(double(wb.rows));
      for (std::size_t i = 0; i < wb.size(); ++i) params_[Eigen::Index(wb.offset + i)] = Scalar(rng.uniform(-bound, bound));
      for (std::size_t i = 0; i < bb.size(); ++i) params_[Eigen::Index(bb.offset + i)] = Scalar(rng.uniform(-bound, bound));
    }
  }

  /// Forward pass of one sample. `image` holds H*W*C values in HWC order.
  RowVec forward(std::span<const Scalar> image, std::span<const Scalar> extra, Tape* tape = nullptr) const {
    check_inputs(image, extra);
    if (tape) {
      tape->in.assign(layout_.size(), Mat());
      tape->out.assign(layout_.size(), Mat());
      tape->argmax.assign(layout_.size(), {});
    }
    Mat x;
    if (arch_.image_height > 0)
      x = Eigen::Map<const Mat>(image.data(), arch_.image_height * arch_.image_width, arch_.image_channels);
    else
      x.resize(1, 0);
    Mat cols;
    std::vector<int> arg;
    for (std::size_t l = 0; l < layout_.size(); ++l) {
      const auto& L = layout_[l];
      if (L.concat_here) {
        Mat joined(1, L.in_c);
        joined.leftCols(x.cols()) = x;
        for (int i = 0; i < arch_.extra; ++i) joined(0, x.cols() + i) = extra[std::size_t(i)];
        x = std::move(joined);
      }
      if (tape) tape->in[l] = x;
      Mat y;
      switch (L.spec.kind) {
        case LayerKind::Conv: {
          im2col(x, L.geom, cols);
          y = cols * weights(L);
          y.rowwise() += bias(L);
          break;
        }
        case LayerKind::MaxPool:
          y = max_pool(x, L, arg);
          if (tape) tape->argmax[l] = arg;
          break;
        case LayerKind::GlobalAvgPool:
          y = x.colwise().mean();
          break;
        case LayerKind::Dense:
          y = x * weights(L) + bias(L);
          break;
      }
      if (L.spec.relu) y = y.cwiseMax(Scalar(0));
      if (tape) tape->out[l] = y;
      x = std::move(y);
    }
    return x;
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output) for
  /// the sample recorded in `tape`. Optionally returns d(loss)/d(extra).
  /// With head_only the pass stops at the concatenation point.
  void backward(const Tape& tape, const RowVec& d_out, Vec& grad, RowVec* d_extra = nullptr,
                bool head_only = false) const {
    if (!d_out.allFinite()) throw std::domain_error("non-finite loss gradient");
    if (grad.size() != params_.size()) grad = Vec::Zero(params_.size());
    Mat dy = d_out;
    Mat cols, dcols;
    for (std::size_t li = layout_.size(); li-- > 0;) {
      const auto& L = layout_[li];
      if (L.spec.relu) dy = dy.cwiseProduct((tape.out[li].array() > Scalar(0)).template cast<Scalar>().matrix());
      Mat dx;
      switch (L.spec.kind) {
        case LayerKind::Dense: {
          weight_grad(L, grad).noalias() += tape.in[li].transpose() * dy;
          bias_grad(L, grad) += dy.colwise().sum();
          dx.noalias() = dy * weights(L).transpose();
          break;
        }
        case LayerKind::Conv: {
          im2col(tape.in[li], L.geom, cols);
          weight_grad(L, grad).noalias() += cols.transpose() * dy;
          bias_grad(L, grad) += dy.colwise().sum();
          if (li > 0) {
            dcols.noalias() = dy * weights(L).transpose();
            col2im(dcols, L.geom, dx);
          }
          break;
        }
        case LayerKind::MaxPool: {
          dx = Mat::Zero(Eigen::Index(L.in_h) * L.in_w, L.in_c);
          const auto& arg = tape.argmax[li];
          for (Eigen::Index r = 0; r < dy.rows(); ++r)
            for (Eigen::Index c = 0; c < dy.cols(); ++c) dx(arg[std::size_t(r * dy.cols() + c)], c) += dy(r, c);
          break;
        }
        case LayerKind::GlobalAvgPool: {
          const Eigen::Index n = Eigen::Index(L.in_h) * L.in_w;
          dx = (dy / Scalar(n)).replicate(n, 1);
          break;
        }
      }
      if (L.concat_here) {
        const Eigen::Index nf = L.in_c - arch_.extra;
        if (d_extra) *d_extra = dx.rightCols(arch_.extra);
        if (head_only || nf == 0) return;
        dx = dx.leftCols(nf).eval();
      }
      dy = std::move(dx);
      if (dy.size() == 0) return;
    }
  }

 private:
  void check_inputs(std::span<const Scalar> image, std::span<const Scalar> extra) const {
    if (image.size() != image_size())
      throw std::invalid_argument("image size " + std::to_string(image.size()) + " != " + std::to_string(image_size()));
    if (extra.size() != std::size_t(arch_.extra))
      throw std::invalid_argument("extra input size " + std::to_string(extra.size()) + " != " +
                                  std::to_string(arch_.extra));
  }

  [[nodiscard]] Eigen::Map<const Mat> weights(const LayerLayout& L) const {
    const auto& b = shapes_[std::size_t(L.weight_block)];
    return {params_.data() + b.offset, b.rows, b.cols};
  }
  [[nodiscard]] Eigen::Map<const RowVec> bias(const LayerLayout& L) const {
    const auto& b = shapes_[std::size_t(L.weight_block) + 1];
    return {params_.data() + b.offset, b.cols};
  }
  Eigen::Map<Mat> weight_grad(const LayerLayout& L, Vec& g) const {
    const auto& b = shapes_[std::size_t(L.weight_block)];
    return {g.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<RowVec> bias_grad(const LayerLayout& L, Vec& g) const {
    const auto& b = shapes_[std::size_t(L.weight_block) + 1];
    return {g.data() + b.offset, b.cols};
  }

  static void im2col(const Mat& x, const ConvGeometry& g, Mat& cols) {
    const int kc = g.k * g.k * g.in_c;
    cols.resize(Eigen::Index(g.out_h) * g.out_w, kc);
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        const Eigen::Index row = Eigen::Index(oy) * g.out_w + ox;
        for (int ky = 0; ky < g.k; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          for (int kx = 0; kx < g.k; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            auto dst = cols.block(row, (ky * g.k + kx) * g.in_c, 1, g.in_c);
            if (iy < 0 || iy >= g.in_h || ix < 0 || ix >= g.in_w)
              dst.setZero();
            else
              dst = x.row(Eigen::Index(iy) * g.in_w + ix);
          }
        }
      }
    }
  }

  static void col2im(const Mat& cols, const ConvGeometry& g, Mat& x) {
    x = Mat::Zero(Eigen::Index(g.in_h) * g.in_w, g.in_c);
    for (int oy = 0; oy < g.out_h; ++oy) {
      for (int ox = 0; ox < g.out_w; ++ox) {
        const Eigen::Index row = Eigen::Index(oy) * g.out_w + ox;
        for (int ky = 0; ky < g.k; ++ky) {
          const int iy = oy * g.stride - g.pad_top + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          for (int kx = 0; kx < g.k; ++kx) {
            const int ix = ox * g.stride - g.pad_left + kx;
            if (ix < 0 || ix >= g.in_w) continue;
            x.row(Eigen::Index(iy) * g.in_w + ix) += cols.block(row, (ky * g.k + kx) * g.in_c, 1, g.in_c);
          }
        }
      }
    }
  }

  static Mat max_pool(const Mat& x, const LayerLayout& L, std::vector<int>& arg) {
    const int p = L.spec.kernel, oh = L.out_h, ow = L.out_w, c = L.in_c;
    Mat y(Eigen::Index(oh) * ow, c);
    arg.assign(std::size_t(oh) * ow * c, 0);
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox)
        for (int ch = 0; ch < c; ++ch) {
          int best = (oy * p) * L.in_w + ox * p;
          for (int dy = 0; dy < p; ++dy)
            for (int dx = 0; dx < p; ++dx) {
              const int idx = (oy * p + dy) * L.in_w + ox * p + dx;
              if (x(idx, ch) > x(best, ch)) best = idx;
            }
          const std::size_t o = std::size_t(oy * ow + ox);
          y(Eigen::Index(o), ch) = x(best, ch);
          arg[o * std::size_t(c) + std::size_t(ch)] = best;
        }
    return y;
  }

  ArchSpec arch_;
  std::vector<LayerLayout> layout_;
  std::vector<ParamBlock> shapes_;
  Vec params_;
};

/// Per-layer parameter totals in layer order, for reporting.
template <typename Scalar>
std::vector<std::pair<std::string, std::size_t>> parameter_ledger(const Network<Scalar>& net) {
  std::vector<std::pair<std::string, std::size_t>> out;
  const auto& s = net.shapes();
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    const auto name = s[i].name.substr(0, s[i].name.find('.'));
    out.emplace_back(name, s[i].size() + s[i + 1].size());
  }
  return out;
}

/// Adam over a flat parameter vector.
template <typename Scalar>
class Adam {
 public:
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  explicit Adam(std::size_t n = 0, double lr = 2e-4, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), b1_(beta1), b2_(beta2), eps_(eps), m_(Vec::Zero(Eigen::Index(n))), v_(Vec::Zero(Eigen::Index(n))) {}

  void step(Vec& params, const Vec& grad) {
    if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("adam size mismatch");
    ++t_;
    m_ = Scalar(b1_) * m_ + Scalar(1 - b1_) * grad;
    v_ = Scalar(b2_) * v_ + Scalar(1 - b2_) * grad.cwiseProduct(grad);
    const double c1 = 1.0 - std::pow(b1_, double(t_));
    const double c2 = 1.0 - std::pow(b2_, double(t_));
    const Scalar step = Scalar(lr_ / c1);
    params.array() -= step * m_.array() / ((v_.array() / Scalar(c2)).sqrt() + Scalar(eps_));
  }

  [[nodiscard]] long steps() const { return t_; }
  [[nodiscard]] double learning_rate() const { return lr_; }
  void set_learning_rate(double lr) { lr_ = lr; }

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  Vec m_, v_;
};

}  // namespace vinenav
