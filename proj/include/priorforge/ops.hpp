#pragma once

#include "priorforge/autodiff.hpp"

namespace pf {

// All ops validate shapes and throw ShapeError on mismatch.

// x: N x I, W: O x I, b: O  ->  N x O
Var linear(const Var& x, const Var& W, const Var& b);

// x: N x Cin x H x W, W: Cout x Cin x k x k, b: Cout
Var conv2d(const Var& x, const Var& W, const Var& b, int stride, int pad);

// Nearest-neighbour x2 in both spatial dims.
Var upsample_nearest2x(const Var& x);

// N x C x H x W -> N x C, mean over the spatial extent.
Var global_avg_pool(const Var& x);

// Rank-2 (N x C) or rank-4 (N x C x H x W); normalizes over everything but
// the channel dim. Train mode uses batch statistics and updates the running
// buffers; eval mode reads the running buffers.
Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& run_mean, Tensor& run_var,
              bool training, float momentum = 0.1f, float eps = 1e-5f);

Var relu(const Var& x);
Var leaky_relu(const Var& x, float slope);
Var tanh_act(const Var& x);
Var sigmoid(const Var& x);
Var softmax_rows(const Var& x);

Var concat_cols(const Var& a, const Var& b);  // rank 2, along dim 1
Var reshape(const Var& x, std::vector<int> shape);
Var flatten_rows(const Var& x);  // N x (everything else)
Var add(const Var& a, const Var& b);
Var scale(const Var& x, float a);
Var detach(const Var& x);

// Scalar reductions; log arguments are clamped at kLogEps so values stay
// finite for degenerate probabilities (gradient is zero where clamped).
inline constexpr float kLogEps = 1e-7f;
Var mean_log(const Var& p);            // mean log p
Var mean_log_one_minus(const Var& p);  // mean log(1 - p)
Var mse_mean(const Var& a, const Var& b);
Var cross_entropy_rows(const Var& q, const Tensor& onehot);  // mean -log q[true]

}  // namespace pf
