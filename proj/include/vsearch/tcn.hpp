#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "vsearch/geometry.hpp"
#include "vsearch/rng.hpp"

namespace vsearch {

/// tanh over a contiguous array. Floats use a clamped odd/even rational approximation (max abs
/// error ~1e-7) that vectorizes; other types use std::tanh.
template <class T>
void tanh_inplace(T* x, int n) {
  if constexpr (std::is_same_v<T, float>) {
#pragma omp simd
    for (int i = 0; i < n; ++i) {
      const float v = std::clamp(x[i], -7.90531110763549805f, 7.90531110763549805f);
      const float v2 = v * v;
      float p = v2 * -2.76076847742355e-16f + 2.00018790482477e-13f;
      p = p * v2 + -8.60467152213735e-11f;
      p = p * v2 + 5.12229709037114e-08f;
      p = p * v2 + 1.48572235717979e-05f;
      p = p * v2 + 6.37261928875436e-04f;
      p = p * v2 + 4.89352455891786e-03f;
      p = p * v;
      float q = v2 * 1.19825839466702e-06f + 1.18534705686654e-04f;
      q = q * v2 + 2.26843463243900e-03f;
      q = q * v2 + 4.89352518554385e-03f;
      x[i] = p / q;
    }
  } else {
    for (int i = 0; i < n; ++i) x[i] = std::tanh(x[i]);
  }
}

struct TcnShape {
  int n_beams = 897;
  int k = 9;          // history length
  int channels = 8;   // hidden conv channels per encoder
  bool label_branch = true;

  void validate() const {
    if (n_beams < 1) throw std::invalid_argument("n_beams must be positive");
    if (k < 3) throw std::invalid_argument("history length k must be at least 3");
    if (k > n_beams) throw std::invalid_argument("history length exceeds beam count");
    if (channels < 1) throw std::invalid_argument("channels must be positive");
  }
  bool operator==(const TcnShape&) const = default;
};

/// Offsets of each parameter tensor inside the flat parameter vector.
struct TcnLayout {
  struct Tensor {
    std::string name;
    std::vector<int> dims;
    std::size_t offset = 0;
    std::size_t size = 0;
    int fan_in = 1;
  };

  std::vector<Tensor> tensors;
  std::size_t total = 0;

  // scan encoder: conv [C][k][k], bias [C], linear [C], bias [1]; label encoder likewise;
  // pose encoder: conv [C][3], bias [C], dense [n][C*3*(k-2)], bias [n]
  enum Index { scan_w, scan_b, scan_v, scan_c, label_w, label_b, label_v, label_c, pose_w, pose_b, pose_v, pose_c };

  static TcnLayout make(const TcnShape& s) {
    TcnLayout l;
    const int c = s.channels, k = s.k, n = s.n_beams, pf = c * 3 * (k - 2);
    const auto add = [&](std::string name, std::vector<int> dims, int fan_in) {
      std::size_t sz = 1;
      for (int d : dims) sz *= static_cast<std::size_t>(d);
      l.tensors.push_back({std::move(name), std::move(dims), l.total, sz, fan_in});
      l.total += sz;
    };
    for (const char* enc : {"scan", "label"}) {
      const std::string e = enc;
      add(e + ".conv.weight", {c, k, k}, k * k);
      add(e + ".conv.bias", {c}, k * k);
      add(e + ".linear.weight", {c}, c);
      add(e + ".linear.bias", {1}, c);
    }
    add("pose.conv.weight", {c, 3}, 3);
    add("pose.conv.bias", {c}, 3);
    add("pose.linear.weight", {n, pf}, pf);
    add("pose.linear.bias", {n}, pf);
    return l;
  }
  const Tensor& operator[](Index i) const { return tensors[static_cast<std::size_t>(i)]; }
};

/// One window of classifier input. Rows are time steps ordered oldest to newest.
template <class T>
struct TcnInput {
  std::vector<T> poses;   // [k][3] normalized (x/20, y/20, theta/pi)
  std::vector<T> ranges;  // [k][n] normalized by max range
  std::vector<T> labels;  // [k][n]: k-1 label rows then their EWA row
};

inline constexpr double kPosePositionScale = 1.0 / 20.0;
inline constexpr double kPoseAngleScale = 1.0 / std::numbers::pi;

/// Three temporal-convolutional encoders over pose, range and label history. Scan and label
/// encoders convolve a [k x k] kernel with circular padding along the beams; the pose encoder uses
/// a [1 x 3] kernel over time followed by a dense layer to beam resolution. Every layer is tanh
/// activated and the output is tanh((pose + scan) * label).
template <class T>
class TcnModel {
 public:
  TcnModel() : TcnModel(TcnShape{}) {}
  explicit TcnModel(const TcnShape& shape) : shape_(shape), layout_(TcnLayout::make(shape)), params_(layout_.total, T(0)) {
    shape_.validate();
  }

  const TcnShape& shape() const { return shape_; }
  const TcnLayout& layout() const { return layout_; }
  std::span<T> params() { return params_; }
  std::span<const T> params() const { return params_; }
  int n_beams() const { return shape_.n_beams; }
  int k() const { return shape_.k; }

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& t : layout_.tensors) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(t.fan_in));
      std::uniform_real_distribution<double> u(-bound, bound);
      for (std::size_t i = 0; i < t.size; ++i) params_[t.offset + i] = static_cast<T>(u(rng));
    }
  }

  /// Activations kept for the backward pass.
  struct Cache {
    std::vector<T> scan_pad, label_pad;  // [k][n + k - 1]
    std::vector<T> scan_a, label_a;      // [C][n] hidden tanh
    std::vector<T> scan_y, label_y;      // [n]
    std::vector<T> pose_in;              // [k][3]
    std::vector<T> pose_a;               // [C][3][k-2]
    std::vector<T> pose_y;               // [n]
    std::vector<T> sum;                  // pose_y + scan_y
    std::vector<T> out;                  // [n]
  };

  void check_input(const TcnInput<T>& in) const {
    const auto k = static_cast<std::size_t>(shape_.k), n = static_cast<std::size_t>(shape_.n_beams);
    if (in.poses.size() != 3 * k || in.ranges.size() != k * n || in.labels.size() != k * n)
      throw std::domain_error("classifier input shape mismatch");
  }

  const std::vector<T>& forward(const TcnInput<T>& in, Cache& c) const {
    check_input(in);
    const int n = shape_.n_beams;
    encode_circular(in.ranges, TcnLayout::scan_w, c.scan_pad, c.scan_a, c.scan_y);
    if (shape_.label_branch) encode_circular(in.labels, TcnLayout::label_w, c.label_pad, c.label_a, c.label_y);
    c.pose_in = in.poses;
    encode_pose(in.poses, c.pose_a, c.pose_y);
    c.sum.resize(static_cast<std::size_t>(n));
    c.out.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const auto u = static_cast<std::size_t>(j);
      c.sum[u] = c.pose_y[u] + c.scan_y[u];
      c.out[u] = shape_.label_branch ? c.sum[u] * c.label_y[u] : c.sum[u];
    }
    tanh_inplace(c.out.data(), n);
    return c.out;
  }

  /// Accumulates d(loss)/d(params) into grad given d(loss)/d(out).
  void backward(const Cache& c, std::span<const T> d_out, std::span<T> grad) const {
    const int n = shape_.n_beams;
    const auto un = static_cast<std::size_t>(n);
    std::vector<T> d_sum(un), d_label(un);
    for (std::size_t j = 0; j < un; ++j) {
      const T dq = d_out[j] * (T(1) - c.out[j] * c.out[j]);
      if (shape_.label_branch) {
        d_sum[j] = dq * c.label_y[j];
        d_label[j] = dq * c.sum[j];
      } else {
        d_sum[j] = dq;
      }
    }
    backprop_circular(c.scan_pad, c.scan_a, c.scan_y, d_sum, TcnLayout::scan_w, grad);
    if (shape_.label_branch) backprop_circular(c.label_pad, c.label_a, c.label_y, d_label, TcnLayout::label_w, grad);
    backprop_pose(c.pose_in, c.pose_a, c.pose_y, d_sum, grad);
  }

 private:
  std::size_t off(TcnLayout::Index i) const { return layout_[i].offset; }

  void encode_circular(const std::vector<T>& x, TcnLayout::Index base, std::vector<T>& pad, std::vector<T>& a,
                       std::vector<T>& y) const {
    const int n = shape_.n_beams, k = shape_.k, C = shape_.channels;
    const int left = (k - 1) / 2;
    const int width = n + k - 1;
    pad.resize(static_cast<std::size_t>(k * width));
    for (int t = 0; t < k; ++t) {
      const T* row = x.data() + static_cast<std::size_t>(t) * n;
      T* prow = pad.data() + static_cast<std::size_t>(t) * width;
      for (int m = 0; m < width; ++m) prow[m] = row[((m - left) % n + n) % n];
    }
    const auto ib = static_cast<TcnLayout::Index>(base);
    const T* w = params_.data() + off(ib);
    const T* b = params_.data() + off(static_cast<TcnLayout::Index>(base + 1));
    const T* v = params_.data() + off(static_cast<TcnLayout::Index>(base + 2));
    const T beta = params_[off(static_cast<TcnLayout::Index>(base + 3))];
    a.assign(static_cast<std::size_t>(C * n), T(0));
    y.assign(static_cast<std::size_t>(n), beta);
    for (int ch = 0; ch < C; ++ch) {
      T* h = a.data() + static_cast<std::size_t>(ch) * n;
      for (int j = 0; j < n; ++j) h[j] = b[ch];
      for (int t = 0; t < k; ++t)
        for (int m = 0; m < k; ++m) {
          const T wv = w[(ch * k + t) * k + m];
          const T* src = pad.data() + static_cast<std::size_t>(t) * width + m;
#pragma omp simd
          for (int j = 0; j < n; ++j) h[j] += wv * src[j];
        }
      tanh_inplace(h, n);
      const T vc = v[ch];
#pragma omp simd
      for (int j = 0; j < n; ++j) y[static_cast<std::size_t>(j)] += vc * h[j];
    }
    tanh_inplace(y.data(), n);
  }

  void backprop_circular(const std::vector<T>& pad, const std::vector<T>& a, const std::vector<T>& y,
                         const std::vector<T>& d_y, TcnLayout::Index base, std::span<T> grad) const {
    const int n = shape_.n_beams, k = shape_.k, C = shape_.channels;
    const int width = n + k - 1;
    const T* v = params_.data() + off(static_cast<TcnLayout::Index>(base + 2));
    T* gw = grad.data() + off(base);
    T* gb = grad.data() + off(static_cast<TcnLayout::Index>(base + 1));
    T* gv = grad.data() + off(static_cast<TcnLayout::Index>(base + 2));
    T* gc = grad.data() + off(static_cast<TcnLayout::Index>(base + 3));
    std::vector<T> dz(static_cast<std::size_t>(n)), dh(static_cast<std::size_t>(n));
    T sum_dz = 0;
    for (int j = 0; j < n; ++j) {
      const auto u = static_cast<std::size_t>(j);
      dz[u] = d_y[u] * (T(1) - y[u] * y[u]);
      sum_dz += dz[u];
    }
    *gc += sum_dz;
    for (int ch = 0; ch < C; ++ch) {
      const T* h = a.data() + static_cast<std::size_t>(ch) * n;
      T acc_v = 0, acc_b = 0;
      const T vc = v[ch];
#pragma omp simd reduction(+ : acc_v, acc_b)
      for (int j = 0; j < n; ++j) {
        acc_v += dz[static_cast<std::size_t>(j)] * h[j];
        const T g = dz[static_cast<std::size_t>(j)] * vc * (T(1) - h[j] * h[j]);
        dh[static_cast<std::size_t>(j)] = g;
        acc_b += g;
      }
      gv[ch] += acc_v;
      gb[ch] += acc_b;
      for (int t = 0; t < k; ++t)
        for (int m = 0; m < k; ++m) {
          const T* src = pad.data() + static_cast<std::size_t>(t) * width + m;
          T acc = 0;
#pragma omp simd reduction(+ : acc)
          for (int j = 0; j < n; ++j) acc += dh[static_cast<std::size_t>(j)] * src[j];
          gw[(ch * k + t) * k + m] += acc;
        }
    }
  }

  void encode_pose(const std::vector<T>& p, std::vector<T>& a, std::vector<T>& y) const {
    const int n = shape_.n_beams, k = shape_.k, C = shape_.channels, tw = k - 2;
    const int pf = C * 3 * tw;
    const T* w = params_.data() + off(TcnLayout::pose_w);
    const T* b = params_.data() + off(TcnLayout::pose_b);
    const T* dense = params_.data() + off(TcnLayout::pose_v);
    const T* bias = params_.data() + off(TcnLayout::pose_c);
    a.resize(static_cast<std::size_t>(pf));
    for (int ch = 0; ch < C; ++ch)
      for (int r = 0; r < 3; ++r)
        for (int t = 0; t < tw; ++t) {
          T s = b[ch];
          for (int m = 0; m < 3; ++m) s += w[ch * 3 + m] * p[static_cast<std::size_t>((t + m) * 3 + r)];
          a[static_cast<std::size_t>((ch * 3 + r) * tw + t)] = s;
        }
    tanh_inplace(a.data(), pf);
    y.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
      const T* row = dense + static_cast<std::size_t>(j) * pf;
      T s = 0;
#pragma omp simd reduction(+ : s)
      for (int f = 0; f < pf; ++f) s += row[f] * a[static_cast<std::size_t>(f)];
      y[static_cast<std::size_t>(j)] = s + bias[j];
    }
    tanh_inplace(y.data(), n);
  }

  void backprop_pose(const std::vector<T>& p, const std::vector<T>& a, const std::vector<T>& y, const std::vector<T>& d_y,
                     std::span<T> grad) const {
    const int n = shape_.n_beams, k = shape_.k, C = shape_.channels, tw = k - 2;
    const int pf = C * 3 * tw;
    const T* dense = params_.data() + off(TcnLayout::pose_v);
    T* gw = grad.data() + off(TcnLayout::pose_w);
    T* gb = grad.data() + off(TcnLayout::pose_b);
    T* gdense = grad.data() + off(TcnLayout::pose_v);
    T* gbias = grad.data() + off(TcnLayout::pose_c);
    std::vector<T> da(static_cast<std::size_t>(pf), T(0));
    for (int j = 0; j < n; ++j) {
      const auto u = static_cast<std::size_t>(j);
      const T dz = d_y[u] * (T(1) - y[u] * y[u]);
      gbias[j] += dz;
      const T* row = dense + u * static_cast<std::size_t>(pf);
      T* grow = gdense + u * static_cast<std::size_t>(pf);
#pragma omp simd
      for (int f = 0; f < pf; ++f) {
        grow[f] += dz * a[static_cast<std::size_t>(f)];
        da[static_cast<std::size_t>(f)] += dz * row[f];
      }
    }
    for (int ch = 0; ch < C; ++ch)
      for (int r = 0; r < 3; ++r)
        for (int t = 0; t < tw; ++t) {
          const auto idx = static_cast<std::size_t>((ch * 3 + r) * tw + t);
          const T dg = da[idx] * (T(1) - a[idx] * a[idx]);
          gb[ch] += dg;
          for (int m = 0; m < 3; ++m) gw[ch * 3 + m] += dg * p[static_cast<std::size_t>((t + m) * 3 + r)];
        }
  }

 public:
  /// Forward + backward for one sample with MSE against `target`; returns the sample loss
  /// (mean over beams) and adds scale * gradient into grad.
  T loss_and_gradient(const TcnInput<T>& in, std::span<const std::int8_t> target, Cache& c, std::span<T> grad,
                      T scale = T(1)) const {
    forward(in, c);
    const auto n = static_cast<std::size_t>(shape_.n_beams);
    std::vector<T> d_out(n);
    T loss = 0;
    for (std::size_t j = 0; j < n; ++j) {
      const T e = c.out[j] - static_cast<T>(target[j]);
      loss += e * e;
      d_out[j] = scale * T(2) * e / static_cast<T>(n);
    }
    backward(c, d_out, grad);
    return loss / static_cast<T>(n);
  }

  T loss(const TcnInput<T>& in, std::span<const std::int8_t> target, Cache& c) const {
    forward(in, c);
    T l = 0;
    for (std::size_t j = 0; j < c.out.size(); ++j) {
      const T e = c.out[j] - static_cast<T>(target[j]);
      l += e * e;
    }
    return l / static_cast<T>(c.out.size());
  }

 private:
  TcnShape shape_;
  TcnLayout layout_;
  std::vector<T> params_;
};

/// Newest-weighted exponential average over k-1 label rows ([rows][n], oldest first).
template <class T>
std::vector<T> ewa_labels(std::span<const T> est_labels, int rows, int n, double decay) {
  if (rows < 1) throw std::invalid_argument("EWA needs at least one label row");
  if (est_labels.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(n))
    throw std::domain_error("label history shape mismatch");
  std::vector<double> w(static_cast<std::size_t>(rows));
  double total = 0.0;
  for (int r = 0; r < rows; ++r) {
    w[static_cast<std::size_t>(r)] = std::pow(decay, rows - 1 - r);
    total += w[static_cast<std::size_t>(r)];
  }
  std::vector<T> out(static_cast<std::size_t>(n), T(0));
  for (int r = 0; r < rows; ++r) {
    const T wr = static_cast<T>(w[static_cast<std::size_t>(r)] / total);
    const T* row = est_labels.data() + static_cast<std::size_t>(r) * n;
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(j)] += wr * row[j];
  }
  return out;
}

/// Non-negative logits are map points (+1), negative ones non-map (-1).
template <class T>
std::vector<std::int8_t> classify_threshold(std::span<const T> logits) {
  std::vector<std::int8_t> out(logits.size());
  for (std::size_t j = 0; j < logits.size(); ++j) out[j] = logits[j] >= T(0) ? 1 : -1;
  return out;
}

/// Fraction of beams whose labels agree.
inline double accuracy(std::span<const std::int8_t> pred, std::span<const std::int8_t> truth) {
  if (pred.size() != truth.size()) throw std::domain_error("accuracy: label vectors differ in length");
  if (pred.empty()) return 1.0;
  std::size_t hits = 0;
  for (std::size_t j = 0; j < pred.size(); ++j) hits += pred[j] == truth[j] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

}  // namespace vsearch
