#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "zsl/tensor.hpp"

namespace zsl {

// Two fully connected layers with ReLU after each, no bias terms.
struct TwoLayerNet {
  Matrix w1;  // hidden x in
  Matrix w2;  // out x hidden

  int in_dim() const { return w1.cols; }
  int hidden_dim() const { return w1.rows; }
  int out_dim() const { return w2.rows; }
};

struct GradPair {
  Matrix g1;
  Matrix g2;
};

GradPair zero_grads(const TwoLayerNet& net);

enum class InitMode { xavier, rect_identity };

// xavier: uniform in +-sqrt(6/(fan_in+fan_out)), drawn row-major w1 then w2.
// rect_identity: ones on each layer's main diagonal; forward is the identity
// on nonnegative inputs when all dims agree.
TwoLayerNet init_net(Rng& rng, int in, int hidden, int out, InitMode mode);

// relu(w2 * relu(w1 * x^T))^T for a 1 x in row vector.
Matrix forward(const TwoLayerNet& net, const Matrix& x);

struct ForwardCache {
  Matrix a1;   // pre-activation, layer 1 (1 x hidden)
  Matrix h1;   // relu(a1)
  Matrix a2;   // pre-activation, layer 2 (1 x out)
  Matrix out;  // relu(a2)
};

ForwardCache forward_cached(const TwoLayerNet& net, const Matrix& x);

// Accumulates d(loss)/d(w1), d(loss)/d(w2) into grads, given d(loss)/d(out).
// ReLU subgradient at exactly zero is zero.
void backward_into(const TwoLayerNet& net, const Matrix& x,
                   const ForwardCache& cache, const Matrix& dout,
                   GradPair& grads);

// Pre-activation values; sign changes of these mark ReLU kinks.
void append_kinks(const ForwardCache& cache, std::vector<double>& kinks);

// loss = ||forward(x) - target||^2 with analytic gradients for both layers.
std::pair<double, GradPair> grad_sq_target(const TwoLayerNet& net,
                                           const Matrix& x,
                                           const Matrix& target);

// w <- w - lr * (g + 2 * l2 * w) for both layers.
void sgd_step(TwoLayerNet& net, const GradPair& g, double lr, double l2);

using LossFn = std::function<double(const Matrix&)>;
using KinkProbe = std::function<std::vector<double>(const Matrix&)>;

// Central-difference check of an analytic gradient. Returns the max over
// entries of |analytic - central| / max(1, |central|). Entries within
// 10*eps of a kink are skipped; a kink is flagged when any probe value
// changes sign between the +10*eps and -10*eps evaluations.
double fd_check(const LossFn& loss, const Matrix& params,
                const Matrix& analytic, double eps,
                const KinkProbe& probe = nullptr);

// "ZSLW" weight container: u32 version, u32 net count, then per net
// u64 in/hidden/out followed by w1 and w2 as little-endian f64 row-major.
void save_checkpoint(const std::string& path,
                     const std::vector<TwoLayerNet>& nets);
std::vector<TwoLayerNet> load_checkpoint(const std::string& path);

}  // namespace zsl
