#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "vsearch/tcn.hpp"
#include "vsearch/training.hpp"

using namespace vsearch;

namespace {

template <class T>
TcnInput<T> random_input(const TcnShape& s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), r(0.0, 1.0);
  const auto k = static_cast<std::size_t>(s.k), n = static_cast<std::size_t>(s.n_beams);
  TcnInput<T> in;
  in.poses.resize(3 * k);
  in.ranges.resize(k * n);
  in.labels.resize(k * n);
  for (auto& v : in.poses) v = static_cast<T>(u(rng));
  for (auto& v : in.ranges) v = static_cast<T>(r(rng));
  for (auto& v : in.labels) v = static_cast<T>(u(rng) < 0 ? -1.0 : 1.0);
  return in;
}

std::vector<std::int8_t> random_target(int n, std::mt19937_64& rng) {
  std::vector<std::int8_t> t(static_cast<std::size_t>(n));
  for (auto& v : t) v = (rng() & 1) ? 1 : -1;
  return t;
}

}  // namespace

TEST(Tcn, GradientMatchesCentralDifferences) {
  std::mt19937_64 rng(0);
  for (bool label_branch : {true, false}) {
    const TcnShape shape{16, 3, 4, label_branch};
    TcnModel<double> m(shape);
    for (int trial = 0; trial < 5; ++trial) {
      m.initialize(static_cast<std::uint64_t>(trial) + 1);
      const auto in = random_input<double>(shape, rng);
      const auto target = random_target(16, rng);
      TcnModel<double>::Cache c;
      std::vector<double> grad(m.params().size(), 0.0);
      m.loss_and_gradient(in, target, c, grad);
      const double h = 1e-5;
      for (std::size_t i = 0; i < grad.size(); ++i) {
        const double keep = m.params()[i];
        m.params()[i] = keep + h;
        const double lp = m.loss(in, target, c);
        m.params()[i] = keep - h;
        const double lm = m.loss(in, target, c);
        m.params()[i] = keep;
        const double fd = (lp - lm) / (2 * h);
        const double rel = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-6});
        EXPECT_LE(rel, 1e-4) << "param " << i << " fd " << fd << " analytic " << grad[i];
      }
    }
  }
}

TEST(Tcn, ZeroWeightsGiveZeroLogits) {
  TcnModel<float> m;
  std::mt19937_64 rng(1);
  const auto in = random_input<float>(m.shape(), rng);
  TcnModel<float>::Cache c;
  const auto& out = m.forward(in, c);
  EXPECT_EQ(out.size(), 897u);
  for (float v : out) EXPECT_EQ(v, 0.0f);
}

TEST(Tcn, InputShapeIsChecked) {
  TcnModel<float> m(TcnShape{16, 3, 2, true});
  TcnInput<float> in;
  TcnModel<float>::Cache c;
  EXPECT_THROW(m.forward(in, c), std::domain_error);
  EXPECT_THROW(TcnModel<float>(TcnShape{16, 2, 2, true}), std::invalid_argument);
}

TEST(Tcn, LayoutIsIndependentOfLabelBranch) {
  TcnModel<float> a(TcnShape{32, 5, 4, true}), b(TcnShape{32, 5, 4, false});
  a.initialize(0);
  b.initialize(0);
  ASSERT_EQ(a.params().size(), b.params().size());
  for (std::size_t i = 0; i < a.params().size(); ++i) EXPECT_EQ(a.params()[i], b.params()[i]);
}

TEST(Tcn, ConvStageIsCircularlyEquivariant) {
  const TcnShape shape{40, 5, 3, false};
  TcnModel<double> m(shape);
  m.initialize(9);
  std::mt19937_64 rng(2);
  const auto in = random_input<double>(shape, rng);
  const int shift = 7, n = 40;
  auto rolled = in;
  for (int t = 0; t < shape.k; ++t)
    for (int j = 0; j < n; ++j) rolled.ranges[t * n + j] = in.ranges[t * n + (j + shift) % n];
  TcnModel<double>::Cache a, b;
  m.forward(in, a);
  m.forward(rolled, b);
  for (int ch = 0; ch < shape.channels; ++ch)
    for (int j = 0; j < n; ++j)
      EXPECT_NEAR(b.scan_a[ch * n + j], a.scan_a[ch * n + (j + shift) % n], 1e-12);
}

TEST(Tcn, FloatTanhIsAccurate) {
  std::vector<float> x, ref;
  for (int i = -2000; i <= 2000; ++i) {
    x.push_back(static_cast<float>(i) / 100.0f);
    ref.push_back(std::tanh(x.back()));
  }
  tanh_inplace(x.data(), static_cast<int>(x.size()));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(x[i], ref[i], 2e-6f);
}

TEST(Ewa, Examples) {
  const std::vector<double> plus(2 * 3, 1.0), minus(2 * 3, -1.0);
  for (double v : ewa_labels<double>(plus, 2, 3, 0.5)) EXPECT_DOUBLE_EQ(v, 1.0);
  for (double v : ewa_labels<double>(minus, 2, 3, 0.5)) EXPECT_DOUBLE_EQ(v, -1.0);
  const std::vector<double> mixed{1.0, -1.0};
  EXPECT_NEAR(ewa_labels<double>(mixed, 2, 1, 0.5)[0], -1.0 / 3.0, 1e-15);
  EXPECT_THROW(ewa_labels<double>(mixed, 3, 1, 0.5), std::domain_error);
}

TEST(Threshold, Examples) {
  const std::vector<float> logits{0.0f, -0.3f, 0.7f};
  const auto l = classify_threshold<float>(logits);
  EXPECT_EQ(l[0], 1);
  EXPECT_EQ(l[1], -1);
  EXPECT_EQ(l[2], 1);
}

TEST(Accuracy, Examples) {
  std::vector<std::int8_t> a(897, 1), b(897, 1), c(897, -1);
  EXPECT_DOUBLE_EQ(accuracy(a, b), 1.0);
  EXPECT_DOUBLE_EQ(accuracy(a, c), 0.0);
  for (int i = 0; i < 100; ++i) b[static_cast<std::size_t>(i * 8)] = -1;
  EXPECT_NEAR(accuracy(a, b), 1.0 - 100.0 / 897.0, 1e-15);
  EXPECT_THROW(accuracy(a, std::vector<std::int8_t>(3, 1)), std::domain_error);
}

TEST(ModelIo, RoundTripAndRejectsGarbage) {
  TcnModel<float> m(TcnShape{64, 5, 3, false});
  m.initialize(4);
  const auto path = (std::filesystem::temp_directory_path() / "vsearch_model.bin").string();
  save_model(m, path);
  const TcnModel<float> back = load_model(path);
  EXPECT_EQ(back.shape(), m.shape());
  ASSERT_EQ(back.params().size(), m.params().size());
  for (std::size_t i = 0; i < m.params().size(); ++i) EXPECT_EQ(back.params()[i], m.params()[i]);
  {
    std::ofstream o(path, std::ios::binary);
    o << "nonsense";
  }
  EXPECT_THROW(load_model(path), std::runtime_error);
  std::filesystem::remove(path);
}
