#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "zsl/mlp.hpp"

using namespace zsl;

namespace {

// Independent forward oracle: nested loops over plain vectors, no shared
// code with the implementation.
std::vector<double> oracle_forward(const std::vector<std::vector<double>>& w1,
                                   const std::vector<std::vector<double>>& w2,
                                   const std::vector<double>& x) {
  std::vector<double> h(w1.size(), 0.0);
  for (std::size_t i = 0; i < w1.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) h[i] += w1[i][j] * x[j];
    if (h[i] < 0) h[i] = 0;
  }
  std::vector<double> out(w2.size(), 0.0);
  for (std::size_t i = 0; i < w2.size(); ++i) {
    for (std::size_t j = 0; j < h.size(); ++j) out[i] += w2[i][j] * h[j];
    if (out[i] < 0) out[i] = 0;
  }
  return out;
}

Matrix random_matrix(Rng& rng, int r, int c, double lo, double hi) {
  Matrix m(r, c);
  for (double& v : m.data) v = rng_uniform(rng, lo, hi);
  return m;
}

std::filesystem::path temp_file(const char* name) {
  return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("forward with identity weights is identity on nonnegative input") {
  TwoLayerNet net{identity(3), identity(3)};
  Matrix x(1, 3, {0.5, 0.0, 2.0});
  CHECK(forward(net, x) == x);
}

TEST_CASE("forward with negated first layer kills nonnegative input") {
  TwoLayerNet net{identity(3), identity(3)};
  for (double& v : net.w1.data) v = -v;
  Matrix x(1, 3, {0.5, 1.0, 2.0});
  CHECK(forward(net, x) == Matrix(1, 3));
}

TEST_CASE("forward matches the independent oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    TwoLayerNet net{random_matrix(rng, 3, 4, -1, 1),
                    random_matrix(rng, 2, 3, -1, 1)};
    Matrix x = random_matrix(rng, 1, 4, -1, 1);

    std::vector<std::vector<double>> w1(3), w2(2);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 4; ++j) w1[i].push_back(net.w1(i, j));
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j) w2[i].push_back(net.w2(i, j));

    std::vector<double> expected = oracle_forward(w1, w2, x.data);
    Matrix got = forward(net, x);
    for (int j = 0; j < 2; ++j) {
      CHECK(std::abs(got.data[j] - expected[j]) < 1e-12);
    }
  }
}

TEST_CASE("forward rejects shape mismatch") {
  TwoLayerNet net{identity(3), identity(3)};
  CHECK_THROWS_AS(forward(net, Matrix(1, 4)), ValidationError);
}

TEST_CASE("forward is positively homogeneous") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    TwoLayerNet net{random_matrix(rng, 5, 4, -1, 1),
                    random_matrix(rng, 3, 5, -1, 1)};
    Matrix x = random_matrix(rng, 1, 4, -1, 1);
    double c = rng_uniform(rng, 0.1, 4.0);
    Matrix scaled = x;
    for (double& v : scaled.data) v *= c;
    Matrix lhs = forward(net, scaled);
    Matrix rhs = forward(net, x);
    for (int j = 0; j < 3; ++j) {
      CHECK(lhs.data[j] == doctest::Approx(c * rhs.data[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("grad_sq_target at the target has zero loss and zero gradient") {
  TwoLayerNet net{identity(3), identity(3)};
  Matrix x(1, 3, {0.5, 1.0, 2.0});
  Matrix target = forward(net, x);
  auto [loss, g] = grad_sq_target(net, x, target);
  CHECK(loss == 0.0);
  CHECK(g.g1 == Matrix(3, 3));
  CHECK(g.g2 == Matrix(3, 3));
}

TEST_CASE("grad_sq_target loss is quadratic in the residual") {
  Rng rng(31);
  TwoLayerNet net{random_matrix(rng, 4, 3, -1, 1),
                  random_matrix(rng, 2, 4, -1, 1)};
  Matrix x = random_matrix(rng, 1, 3, 0, 1);
  Matrix out = forward(net, x);
  Matrix target(1, 2, {out.data[0] - 0.3, out.data[1] + 0.4});
  // Reflecting the target through the output doubles the residual.
  Matrix doubled(1, 2, {2 * target.data[0] - out.data[0],
                        2 * target.data[1] - out.data[1]});
  double base = grad_sq_target(net, x, target).first;
  double four = grad_sq_target(net, x, doubled).first;
  CHECK(four == doctest::Approx(4.0 * base).epsilon(1e-12));
}

TEST_CASE("grad_sq_target matches central finite differences") {
  Rng rng(37);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    TwoLayerNet net{random_matrix(rng, 5, 4, -1, 1),
                    random_matrix(rng, 3, 5, -1, 1)};
    Matrix x = random_matrix(rng, 1, 4, -1, 1);
    Matrix target = random_matrix(rng, 1, 3, 0, 1);
    auto [loss, g] = grad_sq_target(net, x, target);
    (void)loss;
    for (int which = 0; which < 2; ++which) {
      auto with_params = [&](const Matrix& m) {
        TwoLayerNet n = net;
        (which == 0 ? n.w1 : n.w2) = m;
        return n;
      };
      auto lossfn = [&](const Matrix& m) {
        return grad_sq_target(with_params(m), x, target).first;
      };
      auto probe = [&](const Matrix& m) {
        std::vector<double> kinks;
        append_kinks(forward_cached(with_params(m), x), kinks);
        return kinks;
      };
      double err = fd_check(lossfn, which == 0 ? net.w1 : net.w2,
                            which == 0 ? g.g1 : g.g2, 1e-6, probe);
      worst = std::max(worst, err);
    }
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("fd_check on an exact quadratic") {
  Matrix w(2, 2, {0.3, -0.7, 1.1, 0.2});
  auto lossfn = [](const Matrix& m) {
    double acc = 0.0;
    for (double v : m.data) acc += 0.25 * v * v;
    return acc;
  };
  Matrix analytic(2, 2);
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    analytic.data[i] = 0.5 * w.data[i];
  }
  CHECK(fd_check(lossfn, w, analytic, 1e-6) < 1e-8);
}

TEST_CASE("fd_check detects a gradient scaled by two") {
  // Gradient magnitude 0.5 at w=1 makes the planted error land at 0.5.
  Matrix w(1, 1, {1.0});
  auto lossfn = [](const Matrix& m) { return 0.25 * m.data[0] * m.data[0]; };
  Matrix wrong(1, 1, {1.0});  // true gradient is 0.5
  double err = fd_check(lossfn, w, wrong, 1e-6);
  CHECK(err == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("sgd_step fixed point and arithmetic") {
  TwoLayerNet net{Matrix(1, 1, {1.0}), Matrix(1, 1, {1.0})};
  GradPair zero{Matrix(1, 1), Matrix(1, 1)};
  TwoLayerNet before = net;
  sgd_step(net, zero, 0.1, 0.0);
  CHECK(net.w1 == before.w1);
  CHECK(net.w2 == before.w2);

  GradPair g{Matrix(1, 1, {2.0}), Matrix(1, 1, {0.0})};
  sgd_step(net, g, 0.1, 0.0);
  CHECK(net.w1(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("sgd_step with l2 only shrinks weights monotonically") {
  TwoLayerNet net{Matrix(1, 1, {1.0}), Matrix(1, 1, {-2.0})};
  GradPair zero{Matrix(1, 1), Matrix(1, 1)};
  double prev1 = 1.0, prev2 = 2.0;
  for (int i = 0; i < 50; ++i) {
    sgd_step(net, zero, 0.1, 0.05);
    CHECK(std::abs(net.w1(0, 0)) < prev1);
    CHECK(std::abs(net.w2(0, 0)) < prev2);
    prev1 = std::abs(net.w1(0, 0));
    prev2 = std::abs(net.w2(0, 0));
  }
}

TEST_CASE("rect_identity init is the identity on nonnegative inputs") {
  Rng rng(1);
  TwoLayerNet net = init_net(rng, 4, 4, 4, InitMode::rect_identity);
  Matrix x(1, 4, {0.0, 0.5, 1.5, 3.0});
  CHECK(forward(net, x) == x);
}

TEST_CASE("xavier init is deterministic and bounded") {
  Rng a(99), b(99);
  TwoLayerNet na = init_net(a, 6, 5, 4, InitMode::xavier);
  TwoLayerNet nb = init_net(b, 6, 5, 4, InitMode::xavier);
  CHECK(na.w1 == nb.w1);
  CHECK(na.w2 == nb.w2);
  double bound1 = std::sqrt(6.0 / (6 + 5));
  double bound2 = std::sqrt(6.0 / (5 + 4));
  for (double v : na.w1.data) CHECK(std::abs(v) <= bound1);
  for (double v : na.w2.data) CHECK(std::abs(v) <= bound2);
}

TEST_CASE("checkpoint round trip is bit exact") {
  Rng rng(3);
  std::vector<TwoLayerNet> nets;
  nets.push_back(init_net(rng, 4, 3, 2, InitMode::xavier));
  nets.push_back(init_net(rng, 5, 6, 4, InitMode::xavier));
  // A carrier with an empty second layer, as used for prototype banks.
  TwoLayerNet carrier;
  carrier.w1 = random_matrix(rng, 3, 4, -1, 1);
  carrier.w2 = Matrix(0, 3);
  nets.push_back(carrier);

  auto path = temp_file("zsl_test_checkpoint.zslw");
  save_checkpoint(path.string(), nets);
  std::vector<TwoLayerNet> loaded = load_checkpoint(path.string());
  REQUIRE(loaded.size() == nets.size());
  for (std::size_t i = 0; i < nets.size(); ++i) {
    CHECK(loaded[i].w1 == nets[i].w1);
    CHECK(loaded[i].w2 == nets[i].w2);
  }
  std::filesystem::remove(path);
}

TEST_CASE("checkpoint with corrupted magic is rejected") {
  Rng rng(4);
  auto path = temp_file("zsl_test_checkpoint_bad.zslw");
  save_checkpoint(path.string(), {init_net(rng, 3, 3, 3, InitMode::xavier)});
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_WITH_AS(load_checkpoint(path.string()),
                       doctest::Contains("bad magic"), ValidationError);
  std::filesystem::remove(path);
}
