#include "zsl/mlp.hpp"

#include <cmath>
#include <fstream>

#include "binio.hpp"

namespace zsl {

namespace {

// (1 x n) = (w: m x n) applied to row vector x; out[i] = sum_k w[i][k]*x[k].
// Summation order matches matmul so results are bit-identical either way.
Matrix apply_linear(const Matrix& w, const Matrix& x) {
  if (x.rows != 1 || x.cols != w.cols) {
    throw ValidationError("apply_linear: expected 1x" + std::to_string(w.cols) +
                          " input, got " + std::to_string(x.rows) + "x" +
                          std::to_string(x.cols));
  }
  Matrix out(1, w.rows);
  for (int i = 0; i < w.rows; ++i) {
    double acc = 0.0;
    for (int k = 0; k < w.cols; ++k) acc += w(i, k) * x.data[k];
    out.data[i] = acc;
  }
  return out;
}

}  // namespace

GradPair zero_grads(const TwoLayerNet& net) {
  return GradPair{Matrix(net.w1.rows, net.w1.cols),
                  Matrix(net.w2.rows, net.w2.cols)};
}

TwoLayerNet init_net(Rng& rng, int in, int hidden, int out, InitMode mode) {
  if (in < 1 || hidden < 1 || out < 1) {
    throw ValidationError("init_net: dims must be >= 1");
  }
  TwoLayerNet net;
  if (mode == InitMode::rect_identity) {
    net.w1 = rect_identity(hidden, in);
    net.w2 = rect_identity(out, hidden);
    return net;
  }
  net.w1 = Matrix(hidden, in);
  net.w2 = Matrix(out, hidden);
  double b1 = std::sqrt(6.0 / (in + hidden));
  double b2 = std::sqrt(6.0 / (hidden + out));
  for (double& v : net.w1.data) v = rng_uniform(rng, -b1, b1);
  for (double& v : net.w2.data) v = rng_uniform(rng, -b2, b2);
  return net;
}

Matrix forward(const TwoLayerNet& net, const Matrix& x) {
  return relu(apply_linear(net.w2, relu(apply_linear(net.w1, x))));
}

ForwardCache forward_cached(const TwoLayerNet& net, const Matrix& x) {
  ForwardCache c;
  c.a1 = apply_linear(net.w1, x);
  c.h1 = relu(c.a1);
  c.a2 = apply_linear(net.w2, c.h1);
  c.out = relu(c.a2);
  return c;
}

void backward_into(const TwoLayerNet& net, const Matrix& x,
                   const ForwardCache& cache, const Matrix& dout,
                   GradPair& grads) {
  int hidden = net.hidden_dim();
  int out = net.out_dim();
  if (dout.rows != 1 || dout.cols != out) {
    throw ValidationError("backward_into: dout shape mismatch");
  }
  Matrix da2(1, out);
  for (int j = 0; j < out; ++j) {
    da2.data[j] = cache.a2.data[j] > 0.0 ? dout.data[j] : 0.0;
  }
  for (int j = 0; j < out; ++j) {
    double g = da2.data[j];
    if (g == 0.0) continue;
    for (int h = 0; h < hidden; ++h) grads.g2(j, h) += g * cache.h1.data[h];
  }
  Matrix da1(1, hidden);
  for (int h = 0; h < hidden; ++h) {
    if (cache.a1.data[h] <= 0.0) continue;  // subgradient 0 at the kink
    double acc = 0.0;
    for (int j = 0; j < out; ++j) acc += da2.data[j] * net.w2(j, h);
    da1.data[h] = acc;
  }
  for (int h = 0; h < hidden; ++h) {
    double g = da1.data[h];
    if (g == 0.0) continue;
    for (int i = 0; i < net.in_dim(); ++i) grads.g1(h, i) += g * x.data[i];
  }
}

void append_kinks(const ForwardCache& cache, std::vector<double>& kinks) {
  kinks.insert(kinks.end(), cache.a1.data.begin(), cache.a1.data.end());
  kinks.insert(kinks.end(), cache.a2.data.begin(), cache.a2.data.end());
}

std::pair<double, GradPair> grad_sq_target(const TwoLayerNet& net,
                                           const Matrix& x,
                                           const Matrix& target) {
  if (target.rows != 1 || target.cols != net.out_dim()) {
    throw ValidationError("grad_sq_target: target shape mismatch");
  }
  ForwardCache cache = forward_cached(net, x);
  Matrix dout(1, net.out_dim());
  double loss = 0.0;
  for (int j = 0; j < net.out_dim(); ++j) {
    double r = cache.out.data[j] - target.data[j];
    loss += r * r;
    dout.data[j] = 2.0 * r;
  }
  GradPair grads = zero_grads(net);
  backward_into(net, x, cache, dout, grads);
  return {loss, std::move(grads)};
}

void sgd_step(TwoLayerNet& net, const GradPair& g, double lr, double l2) {
  if (!(lr > 0.0)) throw ValidationError("sgd_step: lr must be > 0");
  if (l2 < 0.0) throw ValidationError("sgd_step: l2 must be >= 0");
  if (!g.g1.same_shape(net.w1) || !g.g2.same_shape(net.w2)) {
    throw ValidationError("sgd_step: gradient shape mismatch");
  }
  for (std::size_t i = 0; i < net.w1.data.size(); ++i) {
    net.w1.data[i] -= lr * (g.g1.data[i] + 2.0 * l2 * net.w1.data[i]);
  }
  for (std::size_t i = 0; i < net.w2.data.size(); ++i) {
    net.w2.data[i] -= lr * (g.g2.data[i] + 2.0 * l2 * net.w2.data[i]);
  }
}

double fd_check(const LossFn& loss, const Matrix& params,
                const Matrix& analytic, double eps, const KinkProbe& probe) {
  if (!(eps > 0.0)) throw ValidationError("fd_check: eps must be > 0");
  if (!analytic.same_shape(params)) {
    throw ValidationError("fd_check: analytic gradient shape mismatch");
  }
  Matrix p = params;
  double max_rel = 0.0;
  for (std::size_t i = 0; i < p.data.size(); ++i) {
    double orig = p.data[i];
    if (probe) {
      p.data[i] = orig + 10.0 * eps;
      std::vector<double> hi = probe(p);
      p.data[i] = orig - 10.0 * eps;
      std::vector<double> lo = probe(p);
      p.data[i] = orig;
      bool near_kink = false;
      for (std::size_t k = 0; k < hi.size() && k < lo.size(); ++k) {
        if ((hi[k] > 0.0) != (lo[k] > 0.0)) {
          near_kink = true;
          break;
        }
      }
      if (near_kink) continue;
    }
    p.data[i] = orig + eps;
    double fp = loss(p);
    p.data[i] = orig - eps;
    double fm = loss(p);
    p.data[i] = orig;
    double central = (fp - fm) / (2.0 * eps);
    double rel = std::abs(analytic.data[i] - central) /
                 std::max(1.0, std::abs(central));
    if (rel > max_rel) max_rel = rel;
  }
  return max_rel;
}

namespace {
constexpr char kWeightsMagic[4] = {'Z', 'S', 'L', 'W'};
constexpr std::uint32_t kWeightsVersion = 1;
}  // namespace

void save_checkpoint(const std::string& path,
                     const std::vector<TwoLayerNet>& nets) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  binio::put_magic(os, kWeightsMagic);
  binio::put_u32(os, kWeightsVersion);
  binio::put_u32(os, static_cast<std::uint32_t>(nets.size()));
  for (const TwoLayerNet& net : nets) {
    binio::put_u64(os, static_cast<std::uint64_t>(net.in_dim()));
    binio::put_u64(os, static_cast<std::uint64_t>(net.hidden_dim()));
    binio::put_u64(os, static_cast<std::uint64_t>(net.out_dim()));
    for (double v : net.w1.data) binio::put_f64(os, v);
    for (double v : net.w2.data) binio::put_f64(os, v);
  }
  if (!os) throw IoError("write failed for " + path);
}

std::vector<TwoLayerNet> load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("missing checkpoint file: " + path);
  binio::check_magic(is, kWeightsMagic, path);
  std::uint32_t version = binio::get_u32(is, path + " version");
  if (version != kWeightsVersion) {
    throw ValidationError("unsupported version " + std::to_string(version) +
                          " in " + path);
  }
  std::uint32_t count = binio::get_u32(is, path + " net count");
  std::vector<TwoLayerNet> nets;
  nets.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    std::uint64_t in = binio::get_u64(is, path + " in dim");
    std::uint64_t hidden = binio::get_u64(is, path + " hidden dim");
    std::uint64_t out = binio::get_u64(is, path + " out dim");
    if (in > (1u << 24) || hidden > (1u << 24) || out > (1u << 24)) {
      throw ValidationError("implausible net dims in " + path);
    }
    TwoLayerNet net;
    net.w1 = Matrix(static_cast<int>(hidden), static_cast<int>(in));
    net.w2 = Matrix(static_cast<int>(out), static_cast<int>(hidden));
    for (double& v : net.w1.data) v = binio::get_f64(is, path + " w1");
    for (double& v : net.w2.data) v = binio::get_f64(is, path + " w2");
    if (!net.w1.all_finite() || !net.w2.all_finite()) {
      throw ValidationError("non-finite weights in " + path);
    }
    nets.push_back(std::move(net));
  }
  return nets;
}

}  // namespace zsl
