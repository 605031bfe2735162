#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsearch/dataset.hpp"
#include "vsearch/tcn.hpp"

namespace vsearch {

struct TrainConfig {
  int epochs = 20;
  double corruption_rate = 0.10;
  double ewa_decay = 0.5;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  int channels = 8;
  int k = 9;
  bool label_branch = true;
  int eval_stride = 1;  // evaluate every n-th held-out window
  double eval_corruption_rate = 0.0;  // history corruption on held-out windows; independent of training

  void validate() const {
    if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
    if (!(corruption_rate >= 0.0 && corruption_rate <= 0.5)) throw std::invalid_argument("corruption_rate must lie in [0, 0.5]");
    if (!(ewa_decay > 0.0 && ewa_decay < 1.0)) throw std::invalid_argument("ewa_decay must lie in (0,1)");
    if (!(eval_corruption_rate >= 0.0 && eval_corruption_rate <= 0.5))
      throw std::invalid_argument("eval_corruption_rate must lie in [0, 0.5]");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be positive");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must lie in [0,1)");
    if (eval_stride < 1) throw std::invalid_argument("eval_stride must be positive");
  }
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

/// Indices of tuples that end a full window of k consecutive steps within one run.
inline std::vector<std::size_t> window_ends(const Dataset& d, int k) {
  std::vector<std::size_t> out;
  for (auto [b, e] : d.runs())
    for (std::size_t i = b + static_cast<std::size_t>(k) - 1; i < e; ++i) out.push_back(i);
  return out;
}

/// Flips exactly round(rate * labels.size()) distinct entries chosen uniformly.
inline std::size_t corrupt_labels(std::span<float> labels, double rate, Rng& rng) {
  const std::size_t n = labels.size();
  const auto flips = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  // Floyd's sampling of distinct indices
  std::vector<std::uint8_t> chosen(n, 0);
  for (std::size_t j = n - flips; j < n; ++j) {
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const std::size_t pick = chosen[t] ? j : t;
    chosen[pick] = 1;
    labels[pick] = -labels[pick];
  }
  return flips;
}

inline void normalize_pose(const Pose& p, float* out) {
  out[0] = static_cast<float>(p.x * kPosePositionScale);
  out[1] = static_cast<float>(p.y * kPosePositionScale);
  out[2] = static_cast<float>(p.theta * kPoseAngleScale);
}

/// Teacher-forced training input for the window ending at tuple `end`: ground-truth label history
/// with corruption, then its EWA.
inline void build_window(const Dataset& d, std::size_t end, int k, double corruption_rate, double ewa_decay,
                         std::uint64_t corruption_seed, TcnInput<float>& in) {
  const auto n = static_cast<std::size_t>(d.n_beams);
  const auto uk = static_cast<std::size_t>(k);
  in.poses.resize(3 * uk);
  in.ranges.resize(uk * n);
  in.labels.resize(uk * n);
  const float inv_range = static_cast<float>(1.0 / d.max_range);
  for (std::size_t t = 0; t < uk; ++t) {
    const DatasetTuple& s = d.tuples[end + 1 - uk + t];
    normalize_pose(s.pose, in.poses.data() + 3 * t);
    for (std::size_t j = 0; j < n; ++j) in.ranges[t * n + j] = s.ranges[j] * inv_range;
    if (t + 1 < uk)
      for (std::size_t j = 0; j < n; ++j) in.labels[t * n + j] = static_cast<float>(s.labels[j]);
  }
  std::span<float> history(in.labels.data(), (uk - 1) * n);
  if (corruption_rate > 0.0) {
    Rng rng(corruption_seed);
    corrupt_labels(history, corruption_rate, rng);
  }
  const auto ewa = ewa_labels<float>(history, k - 1, static_cast<int>(n), ewa_decay);
  std::copy(ewa.begin(), ewa.end(), in.labels.begin() + static_cast<std::ptrdiff_t>((uk - 1) * n));
}

/// Teacher-forced accuracy over held-out windows with a fixed corruption stream.
inline double teacher_forced_accuracy(const TcnModel<float>& model, const Dataset& d, const TrainConfig& cfg) {
  const auto ends = window_ends(d, model.k());
  if (ends.empty()) return 0.0;
  TcnInput<float> in;
  TcnModel<float>::Cache cache;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ends.size(); i += static_cast<std::size_t>(cfg.eval_stride)) {
    build_window(d, ends[i], model.k(), cfg.corruption_rate, cfg.ewa_decay, derive_seed(cfg.seed, {0xe7a1, ends[i]}), in);
    const auto& out = model.forward(in, cache);
    const auto pred = classify_threshold<float>(out);
    sum += accuracy(pred, d.tuples[ends[i]].labels);
    ++count;
  }
  return sum / static_cast<double>(count);
}

struct TrainResult {
  TcnModel<float> model;
  std::vector<EpochStats> curve;
  double seconds = 0.0;
};

/// Mini-batch SGD with momentum on the MSE loss. `held_out` (may be empty) holds unseen worlds.
inline TrainResult train(const Dataset& data, const Dataset& held_out, const TrainConfig& cfg,
                         const std::function<void(const EpochStats&)>& on_epoch = {}) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  TcnShape shape{data.n_beams, cfg.k, cfg.channels, cfg.label_branch};
  TrainResult r{TcnModel<float>(shape), {}, 0.0};
  TcnModel<float>& model = r.model;
  model.initialize(derive_seed(cfg.seed, {0x1417}));

  auto ends = window_ends(data, cfg.k);
  if (ends.size() < static_cast<std::size_t>(cfg.batch_size))
    throw std::domain_error("dataset holds fewer windows than one batch");
  if (!held_out.tuples.empty() && held_out.n_beams != data.n_beams)
    throw std::domain_error("held-out beam count differs from training data");

  const std::size_t np = model.params().size();
  std::vector<float> grad(np), velocity(np, 0.0f);
  TcnInput<float> in;
  TcnModel<float>::Cache cache;
  const float lr = static_cast<float>(cfg.learning_rate), mu = static_cast<float>(cfg.momentum);
  const float scale = 1.0f / static_cast<float>(cfg.batch_size);
  TrainConfig eval_cfg = cfg;
  eval_cfg.corruption_rate = cfg.eval_corruption_rate;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(cfg.seed, {0x5f, static_cast<std::uint64_t>(epoch)}));
    std::shuffle(ends.begin(), ends.end(), shuffle_rng);
    double loss_sum = 0.0, acc_sum = 0.0;
    std::size_t seen = 0;
    const std::size_t n_batches = ends.size() / static_cast<std::size_t>(cfg.batch_size);
    for (std::size_t b = 0; b < n_batches; ++b) {
      std::fill(grad.begin(), grad.end(), 0.0f);
      for (int s = 0; s < cfg.batch_size; ++s) {
        const std::size_t end = ends[b * static_cast<std::size_t>(cfg.batch_size) + static_cast<std::size_t>(s)];
        build_window(data, end, cfg.k, cfg.corruption_rate, cfg.ewa_decay,
                     derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch), end}), in);
        const auto& target = data.tuples[end].labels;
        loss_sum += model.loss_and_gradient(in, target, cache, grad, scale);
        acc_sum += accuracy(classify_threshold<float>(cache.out), target);
        ++seen;
      }
      auto p = model.params();
      for (std::size_t i = 0; i < np; ++i) {
        velocity[i] = mu * velocity[i] + grad[i];
        p[i] -= lr * velocity[i];
      }
    }
    EpochStats st;
    st.epoch = epoch;
    st.train_loss = loss_sum / static_cast<double>(seen);
    st.train_accuracy = acc_sum / static_cast<double>(seen);
    st.test_accuracy = held_out.tuples.empty() ? 0.0 : teacher_forced_accuracy(model, held_out, eval_cfg);
    r.curve.push_back(st);
    if (on_epoch) on_epoch(st);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Rolling buffer of the last k poses and scans and k-1 predicted labels, oldest first; starts
/// all zero.
struct HistoryBuffer {
  int k = 9;
  int n_beams = 0;
  std::vector<Pose> poses;                      // k
  std::vector<std::vector<float>> ranges;       // k x n, meters
  std::vector<std::vector<float>> est_labels;   // (k-1) x n

  HistoryBuffer(int k_, int n) : k(k_), n_beams(n) { reset(); }
  void reset() {
    poses.assign(static_cast<std::size_t>(k), Pose(0.0, 0.0, 0.0));
    ranges.assign(static_cast<std::size_t>(k), std::vector<float>(static_cast<std::size_t>(n_beams), 0.0f));
    est_labels.assign(static_cast<std::size_t>(k - 1), std::vector<float>(static_cast<std::size_t>(n_beams), 0.0f));
  }
};

/// One auto-regressive classification step.
inline std::vector<std::int8_t> infer_step(const TcnModel<float>& model, HistoryBuffer& buf, const Pose& pose,
                                           std::span<const float> ranges, double max_range, double ewa_decay) {
  if (buf.k != model.k() || buf.n_beams != model.n_beams() || static_cast<int>(ranges.size()) != buf.n_beams)
    throw std::domain_error("history buffer does not match the model");
  buf.poses.erase(buf.poses.begin());
  buf.poses.push_back(pose);
  buf.ranges.erase(buf.ranges.begin());
  buf.ranges.emplace_back(ranges.begin(), ranges.end());

  const auto n = static_cast<std::size_t>(buf.n_beams), k = static_cast<std::size_t>(buf.k);
  TcnInput<float> in;
  in.poses.resize(3 * k);
  in.ranges.resize(k * n);
  in.labels.resize(k * n);
  const float inv = static_cast<float>(1.0 / max_range);
  for (std::size_t t = 0; t < k; ++t) {
    normalize_pose(buf.poses[t], in.poses.data() + 3 * t);
    for (std::size_t j = 0; j < n; ++j) in.ranges[t * n + j] = buf.ranges[t][j] * inv;
  }
  for (std::size_t t = 0; t + 1 < k; ++t) std::copy(buf.est_labels[t].begin(), buf.est_labels[t].end(), in.labels.begin() + static_cast<std::ptrdiff_t>(t * n));
  const auto ewa = ewa_labels<float>(std::span<const float>(in.labels.data(), (k - 1) * n), buf.k - 1, buf.n_beams, ewa_decay);
  std::copy(ewa.begin(), ewa.end(), in.labels.begin() + static_cast<std::ptrdiff_t>((k - 1) * n));

  TcnModel<float>::Cache cache;
  const auto labels = classify_threshold<float>(model.forward(in, cache));
  buf.est_labels.erase(buf.est_labels.begin());
  buf.est_labels.emplace_back(labels.begin(), labels.end());
  return labels;
}

inline std::vector<std::int8_t> infer_step(const TcnModel<float>& model, HistoryBuffer& buf, const Pose& pose,
                                           const Scan& scan, double ewa_decay) {
  std::vector<float> r(scan.ranges.begin(), scan.ranges.end());
  return infer_step(model, buf, pose, r, scan.max_range, ewa_decay);
}

// --- model archive ---
// "VSTM", u32 version, i32 n_beams, i32 k, i32 channels, u8 label_branch, u32 n_tensors,
// per tensor: u32 name length, name bytes, u32 rank, i32 dims[rank]; then all f32 parameters.

inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(const TcnModel<float>& m, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open " + path + " for writing");
  o.write("VSTM", 4);
  detail::put(o, kModelVersion);
  detail::put(o, static_cast<std::int32_t>(m.shape().n_beams));
  detail::put(o, static_cast<std::int32_t>(m.shape().k));
  detail::put(o, static_cast<std::int32_t>(m.shape().channels));
  detail::put(o, static_cast<std::uint8_t>(m.shape().label_branch ? 1 : 0));
  detail::put(o, static_cast<std::uint32_t>(m.layout().tensors.size()));
  for (const auto& t : m.layout().tensors) {
    detail::put(o, static_cast<std::uint32_t>(t.name.size()));
    o.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    detail::put(o, static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) detail::put(o, static_cast<std::int32_t>(d));
  }
  const auto p = m.params();
  o.write(reinterpret_cast<const char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float)));
  if (!o) throw std::runtime_error("failed writing " + path);
}

inline TcnModel<float> load_model(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!i.read(magic, 4) || std::memcmp(magic, "VSTM", 4) != 0) throw std::runtime_error("not a model file: " + path);
  if (detail::get<std::uint32_t>(i) != kModelVersion) throw std::runtime_error("unsupported model version");
  TcnShape s;
  s.n_beams = detail::get<std::int32_t>(i);
  s.k = detail::get<std::int32_t>(i);
  s.channels = detail::get<std::int32_t>(i);
  s.label_branch = detail::get<std::uint8_t>(i) != 0;
  TcnModel<float> m(s);
  const auto n_tensors = detail::get<std::uint32_t>(i);
  if (n_tensors != m.layout().tensors.size()) throw std::runtime_error("model manifest tensor count mismatch");
  for (const auto& t : m.layout().tensors) {
    const auto len = detail::get<std::uint32_t>(i);
    std::string name(len, '\0');
    if (!i.read(name.data(), len) || name != t.name) throw std::runtime_error("model manifest names differ");
    const auto rank = detail::get<std::uint32_t>(i);
    if (rank != t.dims.size()) throw std::runtime_error("model manifest rank mismatch for " + t.name);
    for (int d : t.dims)
      if (detail::get<std::int32_t>(i) != d) throw std::runtime_error("model manifest shape mismatch for " + t.name);
  }
  auto p = m.params();
  if (!i.read(reinterpret_cast<char*>(p.data()), static_cast<std::streamsize>(p.size() * sizeof(float))))
    throw std::runtime_error("model file truncated");
  return m;
}

}  // namespace vsearch
