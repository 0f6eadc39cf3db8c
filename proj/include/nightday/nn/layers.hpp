#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "nightday/core/error.hpp"
#include "nightday/core/random.hpp"
#include "nightday/core/tensor.hpp"
#include "nightday/nn/im2col.hpp"

namespace nightday::nn {

template <class T>
struct Param {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Param() = default;
  Param(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

/// Per-call record of whatever a layer needs for its backward pass.
template <class T>
struct Tape {
  std::vector<Tensor<T>> saved;
  std::vector<Tape> children;
};

template <class T>
class Layer {
 public:
  virtual ~Layer() = default;

  /// `tape` may be null for inference-only calls.
  virtual Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const = 0;
  virtual Tensor<T> backward(const Tensor<T>& grad_out, const Tape<T>& tape) = 0;
  virtual void parameters(std::vector<Param<T>*>& out) { (void)out; }
  virtual std::unique_ptr<Layer> clone() const = 0;
};

namespace detail {

template <class T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using MatrixMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <class T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

template <class T>
ConstMatrixMap<T> cmap(const T* p, Eigen::Index rows, Eigen::Index cols, Eigen::Index stride) {
  return ConstMatrixMap<T>(p, rows, cols, Eigen::OuterStride<>(stride));
}
template <class T>
MatrixMap<T> mmap(T* p, Eigen::Index rows, Eigen::Index cols, Eigen::Index stride) {
  return MatrixMap<T>(p, rows, cols, Eigen::OuterStride<>(stride));
}

// Output rows per im2col chunk, keeping the unfolded buffer bounded.
inline int chunk_rows(std::size_t patch, int wo, int ho) {
  constexpr std::size_t budget = std::size_t{1} << 23;
  const std::size_t per_row = std::max<std::size_t>(1, patch * static_cast<std::size_t>(wo));
  return std::clamp(static_cast<int>(budget / per_row), 1, std::max(ho, 1));
}

inline void require_rank3(const std::vector<int>& shape, const char* where) {
  if (shape.size() != 3) throw ShapeError(std::string(where) + ": expected a [C,H,W] tensor");
}

}  // namespace detail

/// 2-D convolution; weight [Cout, Cin, k, k], bias [Cout].
template <class T>
class Conv2d final : public Layer<T> {
 public:
  Conv2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry)
      : in_(in_channels), out_(out_channels), geom_(geometry),
        weight_(name + ".weight", Tensor<T>({out_channels, in_channels, geometry.kernel, geometry.kernel})),
        bias_(name + ".bias", Tensor<T>({out_channels})) {}

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    detail::require_rank3(x.shape(), "conv2d");
    if (x.dim(0) != in_) throw ShapeError("conv2d: channel mismatch");
    const int h = x.dim(1), w = x.dim(2);
    const int ho = geom_.out(h), wo = geom_.out(w);
    if (ho <= 0 || wo <= 0) throw ShapeError("conv2d: input smaller than kernel");
    if (geom_.padding == Padding::reflect && (geom_.pad >= h || geom_.pad >= w))
      throw ShapeError("conv2d: reflection padding exceeds input");
    const std::size_t patch = static_cast<std::size_t>(in_) * geom_.kernel * geom_.kernel;
    const std::size_t n = static_cast<std::size_t>(ho) * wo;
    Tensor<T> y({out_, ho, wo});
    const auto wmat = detail::cmap(weight_.value.data(), out_, patch, patch);
    const int step = detail::chunk_rows(patch, wo, ho);
    std::vector<T> col;
    for (int r0 = 0; r0 < ho; r0 += step) {
      const int r1 = std::min(ho, r0 + step);
      const std::size_t cols = static_cast<std::size_t>(r1 - r0) * wo;
      col.resize(patch * cols);
      im2col(x.data(), in_, h, w, geom_, r0, r1, col.data());
      auto ymat = detail::mmap(y.data() + static_cast<std::size_t>(r0) * wo, out_, cols, n);
      ymat.noalias() = wmat * detail::cmap(col.data(), patch, cols, cols);
    }
    for (int c = 0; c < out_; ++c) {
      T* yc = y.data() + c * n;
      const T b = bias_.value[c];
      for (std::size_t i = 0; i < n; ++i) yc[i] += b;
    }
    if (tape) tape->saved = {x};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    const Tensor<T>& x = tape.saved.at(0);
    const int h = x.dim(1), w = x.dim(2);
    const int ho = geom_.out(h), wo = geom_.out(w);
    const std::size_t patch = static_cast<std::size_t>(in_) * geom_.kernel * geom_.kernel;
    const std::size_t n = static_cast<std::size_t>(ho) * wo;
    if (gy.shape() != std::vector<int>{out_, ho, wo}) throw ShapeError("conv2d backward: gradient shape");
    Tensor<T> gx(x.shape());
    const auto wmat = detail::cmap(weight_.value.data(), out_, patch, patch);
    auto gw = detail::mmap(weight_.grad.data(), out_, patch, patch);
    const int step = detail::chunk_rows(patch, wo, ho);
    std::vector<T> col, gcol;
    for (int r0 = 0; r0 < ho; r0 += step) {
      const int r1 = std::min(ho, r0 + step);
      const std::size_t cols = static_cast<std::size_t>(r1 - r0) * wo;
      col.resize(patch * cols);
      gcol.resize(patch * cols);
      im2col(x.data(), in_, h, w, geom_, r0, r1, col.data());
      const auto gmat = detail::cmap(gy.data() + static_cast<std::size_t>(r0) * wo, out_, cols, n);
      gw.noalias() += gmat * detail::cmap(col.data(), patch, cols, cols).transpose();
      detail::mmap(gcol.data(), patch, cols, cols).noalias() = wmat.transpose() * gmat;
      col2im(gcol.data(), in_, h, w, geom_, r0, r1, gx.data());
    }
    for (int c = 0; c < out_; ++c) {
      const T* g = gy.data() + c * n;
      T s = T(0);
      for (std::size_t i = 0; i < n; ++i) s += g[i];
      bias_.grad[c] += s;
    }
    return gx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Conv2d>(*this); }

  Param<T>& weight() { return weight_; }
  Param<T>& bias() { return bias_; }
  const ConvGeometry& geometry() const { return geom_; }

 private:
  int in_, out_;
  ConvGeometry geom_;
  Param<T> weight_, bias_;
};

/// Transposed convolution with zero padding; weight [Cin, Cout, k, k].
/// Output size is (in - 1) * stride - 2 * pad + kernel + output_padding.
template <class T>
class ConvTranspose2d final : public Layer<T> {
 public:
  ConvTranspose2d(std::string name, int in_channels, int out_channels, ConvGeometry geometry, int output_padding)
      : in_(in_channels), out_(out_channels), geom_(geometry), output_padding_(output_padding),
        weight_(name + ".weight", Tensor<T>({in_channels, out_channels, geometry.kernel, geometry.kernel})),
        bias_(name + ".bias", Tensor<T>({out_channels})) {
    geom_.padding = Padding::zero;
  }

  int out_size(int in) const { return (in - 1) * geom_.stride - 2 * geom_.pad + geom_.kernel + output_padding_; }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    detail::require_rank3(x.shape(), "conv_transpose2d");
    if (x.dim(0) != in_) throw ShapeError("conv_transpose2d: channel mismatch");
    const int h = x.dim(1), w = x.dim(2);
    const int ho = out_size(h), wo = out_size(w);
    if (geom_.out(ho) != h || geom_.out(wo) != w) throw ShapeError("conv_transpose2d: inconsistent geometry");
    const std::size_t patch = static_cast<std::size_t>(out_) * geom_.kernel * geom_.kernel;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<T> col(patch * n);
    detail::mmap(col.data(), patch, n, n).noalias() =
        detail::cmap(weight_.value.data(), in_, patch, patch).transpose() * detail::cmap(x.data(), in_, n, n);
    Tensor<T> y({out_, ho, wo});
    col2im(col.data(), out_, ho, wo, geom_, 0, h, y.data());
    const std::size_t no = static_cast<std::size_t>(ho) * wo;
    for (int c = 0; c < out_; ++c) {
      T* yc = y.data() + c * no;
      for (std::size_t i = 0; i < no; ++i) yc[i] += bias_.value[c];
    }
    if (tape) tape->saved = {x};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    const Tensor<T>& x = tape.saved.at(0);
    const int h = x.dim(1), w = x.dim(2);
    const int ho = out_size(h), wo = out_size(w);
    const std::size_t patch = static_cast<std::size_t>(out_) * geom_.kernel * geom_.kernel;
    const std::size_t n = static_cast<std::size_t>(h) * w;
    std::vector<T> gcol(patch * n);
    im2col(gy.data(), out_, ho, wo, geom_, 0, h, gcol.data());
    const auto gmat = detail::cmap(gcol.data(), patch, n, n);
    const auto xmat = detail::cmap(x.data(), in_, n, n);
    detail::mmap(weight_.grad.data(), in_, patch, patch).noalias() += xmat * gmat.transpose();
    Tensor<T> gx(x.shape());
    detail::mmap(gx.data(), in_, n, n).noalias() = detail::cmap(weight_.value.data(), in_, patch, patch) * gmat;
    const std::size_t no = static_cast<std::size_t>(ho) * wo;
    for (int c = 0; c < out_; ++c) {
      const T* g = gy.data() + c * no;
      T s = T(0);
      for (std::size_t i = 0; i < no; ++i) s += g[i];
      bias_.grad[c] += s;
    }
    return gx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<ConvTranspose2d>(*this); }

 private:
  int in_, out_;
  ConvGeometry geom_;
  int output_padding_;
  Param<T> weight_, bias_;
};

/// Per-channel standardization over the channel's own H×W, then gain and bias.
/// Zero-variance channels map to `bias` (eps keeps the division finite).
template <class T>
Tensor<T> instance_normalize(const Tensor<T>& x, std::span<const T> gain, std::span<const T> bias, T eps,
                             Tensor<T>* normalized = nullptr, std::vector<T>* inv_std = nullptr) {
  detail::require_rank3(x.shape(), "instance_normalize");
  const int channels = x.dim(0);
  const std::size_t n = static_cast<std::size_t>(x.dim(1)) * x.dim(2);
  if (n == 0) throw ShapeError("instance_normalize: empty spatial extent");
  if (!(eps > T(0))) throw ArgumentError("instance_normalize: eps must be positive");
  if (gain.size() != static_cast<std::size_t>(channels) || bias.size() != static_cast<std::size_t>(channels))
    throw ShapeError("instance_normalize: gain/bias size mismatch");
  if (!x.all_finite()) throw NumericError("instance_normalize: non-finite input");
  Tensor<T> y(x.shape());
  if (normalized) *normalized = Tensor<T>(x.shape());
  if (inv_std) inv_std->assign(static_cast<std::size_t>(channels), T(0));
  for (int c = 0; c < channels; ++c) {
    const T* xc = x.data() + c * n;
    // statistics are taken about the first element so constant channels stay exact
    const T shift = xc[0];
    T mean = T(0);
    for (std::size_t i = 0; i < n; ++i) mean += xc[i] - shift;
    mean /= static_cast<T>(n);
    T var = T(0);
    for (std::size_t i = 0; i < n; ++i) var += (xc[i] - shift - mean) * (xc[i] - shift - mean);
    var /= static_cast<T>(n);
    const T istd = T(1) / std::sqrt(var + eps);
    T* yc = y.data() + c * n;
    for (std::size_t i = 0; i < n; ++i) {
      const T xhat = (xc[i] - shift - mean) * istd;
      if (normalized) (*normalized)[c * n + i] = xhat;
      yc[i] = xhat * gain[c] + bias[c];
    }
    if (inv_std) (*inv_std)[c] = istd;
  }
  return y;
}

template <class T>
class InstanceNorm final : public Layer<T> {
 public:
  InstanceNorm(std::string name, int channels, T eps = T(1e-5))
      : eps_(eps), gain_(name + ".gain", Tensor<T>({channels}, T(1))), bias_(name + ".bias", Tensor<T>({channels})) {}

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    if (!tape) return instance_normalize<T>(x, gain_.value.values(), bias_.value.values(), eps_);
    Tensor<T> xhat;
    std::vector<T> istd;
    Tensor<T> y = instance_normalize<T>(x, gain_.value.values(), bias_.value.values(), eps_, &xhat, &istd);
    const int channels = static_cast<int>(istd.size());
    tape->saved = {std::move(xhat), Tensor<T>({channels}, std::move(istd))};
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    const Tensor<T>& xhat = tape.saved.at(0);
    const Tensor<T>& istd = tape.saved.at(1);
    const int channels = xhat.dim(0);
    const std::size_t n = static_cast<std::size_t>(xhat.dim(1)) * xhat.dim(2);
    Tensor<T> gx(xhat.shape());
    for (int c = 0; c < channels; ++c) {
      const T* g = gy.data() + c * n;
      const T* xh = xhat.data() + c * n;
      T sum_g = T(0), sum_gx = T(0);
      for (std::size_t i = 0; i < n; ++i) {
        sum_g += g[i];
        sum_gx += g[i] * xh[i];
      }
      gain_.grad[c] += sum_gx;
      bias_.grad[c] += sum_g;
      const T scale = gain_.value[c] * istd[c];
      const T mean_g = sum_g / static_cast<T>(n), mean_gx = sum_gx / static_cast<T>(n);
      T* out = gx.data() + c * n;
      for (std::size_t i = 0; i < n; ++i) out[i] = scale * (g[i] - mean_g - xh[i] * mean_gx);
    }
    return gx;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    out.push_back(&gain_);
    out.push_back(&bias_);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<InstanceNorm>(*this); }

 private:
  T eps_;
  Param<T> gain_, bias_;
};

/// slope 0 gives ReLU.
template <class T>
class LeakyRelu final : public Layer<T> {
 public:
  explicit LeakyRelu(T slope = T(0)) : slope_(slope) {}

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : slope_ * x[i];
    if (tape) tape->saved = {x};
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    const Tensor<T>& x = tape.saved.at(0);
    Tensor<T> gx(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] = x[i] > T(0) ? gy[i] : slope_ * gy[i];
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<LeakyRelu>(*this); }

 private:
  T slope_;
};

template <class T>
class Tanh final : public Layer<T> {
 public:
  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    Tensor<T> y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
    if (tape) tape->saved = {y};
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    const Tensor<T>& y = tape.saved.at(0);
    Tensor<T> gx(y.shape());
    for (std::size_t i = 0; i < y.size(); ++i) gx[i] = gy[i] * (T(1) - y[i] * y[i]);
    return gx;
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Tanh>(*this); }
};

template <class T>
class Sequential final : public Layer<T> {
 public:
  Sequential() = default;
  Sequential(const Sequential& other) {
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  Sequential& operator=(const Sequential& other) {
    if (this != &other) *this = Sequential(other);
    return *this;
  }
  Sequential(Sequential&&) noexcept = default;
  Sequential& operator=(Sequential&&) noexcept = default;

  template <class L, class... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  std::size_t size() const { return layers_.size(); }

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    if (tape) tape->children.assign(layers_.size(), Tape<T>{});
    Tensor<T> y = x;
    for (std::size_t i = 0; i < layers_.size(); ++i) y = layers_[i]->forward(y, tape ? &tape->children[i] : nullptr);
    return y;
  }

  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    Tensor<T> g = gy;
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, tape.children.at(i));
    return g;
  }

  void parameters(std::vector<Param<T>*>& out) override {
    for (auto& l : layers_) l->parameters(out);
  }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Sequential>(*this); }

 private:
  std::vector<std::unique_ptr<Layer<T>>> layers_;
};

/// y = x + body(x)
template <class T>
class Residual final : public Layer<T> {
 public:
  explicit Residual(Sequential<T> body) : body_(std::move(body)) {}

  Tensor<T> forward(const Tensor<T>& x, Tape<T>* tape) const override {
    if (tape) tape->children.assign(1, Tape<T>{});
    Tensor<T> y = body_.forward(x, tape ? &tape->children[0] : nullptr);
    require_same_shape(y, x, "residual");
    y += x;
    return y;
  }
  Tensor<T> backward(const Tensor<T>& gy, const Tape<T>& tape) override {
    Tensor<T> gx = body_.backward(gy, tape.children.at(0));
    gx += gy;
    return gx;
  }
  void parameters(std::vector<Param<T>*>& out) override { body_.parameters(out); }
  std::unique_ptr<Layer<T>> clone() const override { return std::make_unique<Residual>(*this); }

 private:
  Sequential<T> body_;
};

/// Fills every weight tensor from N(0, stddev); biases stay zero, norm gains one.
template <class T>
void init_normal(std::vector<Param<T>*> params, Rng& rng, double stddev) {
  for (Param<T>* p : params) {
    if (p->value.rank() >= 2) {
      for (auto& v : p->value.values()) v = static_cast<T>(rng.normal(0.0, stddev));
    }
  }
}

template <class T>
std::size_t parameter_count(const std::vector<Param<T>*>& params) {
  std::size_t n = 0;
  for (const Param<T>* p : params) n += p->value.size();
  return n;
}

template <class T>
void zero_grad(const std::vector<Param<T>*>& params) {
  for (Param<T>* p : params) p->zero_grad();
}

}  // namespace nightday::nn
