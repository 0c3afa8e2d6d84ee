#include "priorforge/ops.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "priorforge/errors.hpp"

namespace pf {

namespace {

using MatRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapM = Eigen::Map<MatRM>;
using MapC = Eigen::Map<const MatRM>;

int conv_out_dim(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// col is row-major [Cin*k*k][Hout*Wout]; one sample.
void im2col(const float* x, int C, int H, int W, int k, int stride, int pad, float* col) {
  int Ho = conv_out_dim(H, k, stride, pad);
  int Wo = conv_out_dim(W, k, stride, pad);
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        float* row = col + (static_cast<int64_t>(c) * k * k + ki * k + kj) * Ho * Wo;
        const float* xc = x + static_cast<int64_t>(c) * H * W;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + ki;
          float* dst = row + static_cast<int64_t>(oh) * Wo;
          if (ih < 0 || ih >= H) {
            std::fill(dst, dst + Wo, 0.0f);
            continue;
          }
          const float* src = xc + static_cast<int64_t>(ih) * W;
          for (int ow = 0; ow < Wo; ++ow) {
            int iw = ow * stride - pad + kj;
            dst[ow] = (iw >= 0 && iw < W) ? src[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_acc(const float* col, int C, int H, int W, int k, int stride, int pad, float* x) {
  int Ho = conv_out_dim(H, k, stride, pad);
  int Wo = conv_out_dim(W, k, stride, pad);
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const float* row = col + (static_cast<int64_t>(c) * k * k + ki * k + kj) * Ho * Wo;
        float* xc = x + static_cast<int64_t>(c) * H * W;
        for (int oh = 0; oh < Ho; ++oh) {
          int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          const float* src = row + static_cast<int64_t>(oh) * Wo;
          float* dst = xc + static_cast<int64_t>(ih) * W;
          for (int ow = 0; ow < Wo; ++ow) {
            int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < W) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

}  // namespace

Var linear(const Var& x, const Var& W, const Var& b) {
  check_shape(x->value.rank() == 2 && W->value.rank() == 2 && b->value.rank() == 1,
              "linear: bad ranks");
  int N = x->value.dim(0), I = x->value.dim(1), O = W->value.dim(0);
  check_shape(W->value.dim(1) == I, "linear: input dim " + std::to_string(I) +
                                        " does not match weight " + W->value.shape_str());
  check_shape(b->value.dim(0) == O, "linear: bias size mismatch");

  Tensor y({N, O});
  {
    MapC Xm(x->value.ptr(), N, I), Wm(W->value.ptr(), O, I);
    MapM Ym(y.ptr(), N, O);
    Ym.noalias() = Xm * Wm.transpose();
    Ym.rowwise() += Eigen::Map<const Eigen::RowVectorXf>(b->value.ptr(), O);
  }
  Var xi = x, Wi = W, bi = b;
  return make_node(std::move(y), {x, W, b}, [xi, Wi, bi, N, I, O](Node& self) {
    MapC dY(self.grad.ptr(), N, O);
    MapC Xm(xi->value.ptr(), N, I), Wm(Wi->value.ptr(), O, I);
    if (xi->requires_grad) {
      MapM dX(xi->ensure_grad().ptr(), N, I);
      dX.noalias() += dY * Wm;
    }
    if (Wi->requires_grad) {
      MapM dW(Wi->ensure_grad().ptr(), O, I);
      dW.noalias() += dY.transpose() * Xm;
    }
    if (bi->requires_grad) {
      Eigen::Map<Eigen::RowVectorXf> db(bi->ensure_grad().ptr(), O);
      db += dY.colwise().sum();
    }
  });
}

Var conv2d(const Var& x, const Var& W, const Var& b, int stride, int pad) {
  check_shape(x->value.rank() == 4 && W->value.rank() == 4, "conv2d: bad ranks");
  int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2), Wd = x->value.dim(3);
  int Co = W->value.dim(0), k = W->value.dim(2);
  check_shape(W->value.dim(1) == C, "conv2d: channel mismatch, input " + x->value.shape_str() +
                                        " weight " + W->value.shape_str());
  check_shape(W->value.dim(3) == k && b->value.numel() == Co, "conv2d: bad weight/bias shape");
  int Ho = conv_out_dim(H, k, stride, pad), Wo = conv_out_dim(Wd, k, stride, pad);
  check_shape(Ho > 0 && Wo > 0, "conv2d: output would be empty");
  int64_t CK = static_cast<int64_t>(C) * k * k, S = static_cast<int64_t>(Ho) * Wo;

  Tensor y({N, Co, Ho, Wo});
  {
    FloatVec col(CK * S);
    MapC Wm(W->value.ptr(), Co, CK);
    for (int n = 0; n < N; ++n) {
      im2col(x->value.ptr() + static_cast<int64_t>(n) * C * H * Wd, C, H, Wd, k, stride, pad,
             col.data());
      MapC Cm(col.data(), CK, S);
      MapM Ym(y.ptr() + static_cast<int64_t>(n) * Co * S, Co, S);
      Ym.noalias() = Wm * Cm;
      Ym.colwise() += Eigen::Map<const Eigen::VectorXf>(b->value.ptr(), Co);
    }
  }
  Var xi = x, Wi = W, bi = b;
  return make_node(std::move(y), {x, W, b},
                   [xi, Wi, bi, N, C, H, Wd, Co, k, stride, pad, Ho, Wo, CK, S](Node& self) {
                     FloatVec col(CK * S);
                     MapC Wm(Wi->value.ptr(), Co, CK);
                     for (int n = 0; n < N; ++n) {
                       MapC dY(self.grad.ptr() + static_cast<int64_t>(n) * Co * S, Co, S);
                       const float* xn = xi->value.ptr() + static_cast<int64_t>(n) * C * H * Wd;
                       if (Wi->requires_grad || bi->requires_grad) {
                         im2col(xn, C, H, Wd, k, stride, pad, col.data());
                         MapC Cm(col.data(), CK, S);
                         MapM dW(Wi->ensure_grad().ptr(), Co, CK);
                         dW.noalias() += dY * Cm.transpose();
                         Eigen::Map<Eigen::VectorXf> db(bi->ensure_grad().ptr(), Co);
                         db += dY.rowwise().sum();
                       }
                       if (xi->requires_grad) {
                         MapM Cm(col.data(), CK, S);
                         Cm.noalias() = Wm.transpose() * dY;
                         col2im_acc(col.data(), C, H, Wd, k, stride, pad,
                                    xi->ensure_grad().ptr() + static_cast<int64_t>(n) * C * H * Wd);
                       }
                     }
                   });
}

Var upsample_nearest2x(const Var& x) {
  check_shape(x->value.rank() == 4, "upsample: rank-4 input required");
  int N = x->value.dim(0), C = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
  Tensor y({N, C, 2 * H, 2 * W});
  const float* src = x->value.ptr();
  float* dst = y.ptr();
  for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
    const float* s = src + nc * H * W;
    float* d = dst + nc * 4 * H * W;
    for (int h = 0; h < H; ++h) {
      float* r0 = d + static_cast<int64_t>(2 * h) * 2 * W;
      float* r1 = r0 + 2 * W;
      for (int w = 0; w < W; ++w) {
        float v = s[h * W + w];
        r0[2 * w] = r0[2 * w + 1] = r1[2 * w] = r1[2 * w + 1] = v;
      }
    }
  }
  Var xi = x;
  return make_node(std::move(y), {x}, [xi, N, C, H, W](Node& self) {
    if (!xi->requires_grad) return;
    float* gx = xi->ensure_grad().ptr();
    const float* gy = self.grad.ptr();
    for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
      float* g = gx + nc * H * W;
      const float* d = gy + nc * 4 * H * W;
      for (int h = 0; h < H; ++h) {
        const float* r0 = d + static_cast<int64_t>(2 * h) * 2 * W;
        const float* r1 = r0 + 2 * W;
        for (int w = 0; w < W; ++w)
          g[h * W + w] += r0[2 * w] + r0[2 * w + 1] + r1[2 * w] + r1[2 * w + 1];
      }
    }
  });
}

Var global_avg_pool(const Var& x) {
  check_shape(x->value.rank() == 4, "global_avg_pool: rank-4 input required");
  int N = x->value.dim(0), C = x->value.dim(1);
  int64_t S = static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3);
  Tensor y({N, C});
  for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
    double acc = 0.0;
    const float* s = x->value.ptr() + nc * S;
    for (int64_t i = 0; i < S; ++i) acc += s[i];
    y.data[nc] = static_cast<float>(acc / static_cast<double>(S));
  }
  Var xi = x;
  return make_node(std::move(y), {x}, [xi, N, C, S](Node& self) {
    if (!xi->requires_grad) return;
    float* gx = xi->ensure_grad().ptr();
    for (int64_t nc = 0; nc < static_cast<int64_t>(N) * C; ++nc) {
      float g = self.grad.data[nc] / static_cast<float>(S);
      float* d = gx + nc * S;
      for (int64_t i = 0; i < S; ++i) d[i] += g;
    }
  });
}

Var batchnorm(const Var& x, const Var& gamma, const Var& beta, Tensor& run_mean, Tensor& run_var,
              bool training, float momentum, float eps) {
  int rank = x->value.rank();
  check_shape(rank == 2 || rank == 4, "batchnorm: rank 2 or 4 required");
  int N = x->value.dim(0), C = x->value.dim(1);
  int64_t S = rank == 4 ? static_cast<int64_t>(x->value.dim(2)) * x->value.dim(3) : 1;
  int64_t M = static_cast<int64_t>(N) * S;  // reduction count per channel
  check_shape(gamma->value.numel() == C && beta->value.numel() == C && run_mean.numel() == C &&
                  run_var.numel() == C,
              "batchnorm: channel mismatch");
  check_shape(!training || M > 1, "batchnorm: training needs more than one sample per channel");

  std::vector<float> mean(C), inv_std(C);
  if (training) {
    for (int c = 0; c < C; ++c) {
      double acc = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* s = x->value.ptr() + (static_cast<int64_t>(n) * C + c) * S;
        for (int64_t i = 0; i < S; ++i) acc += s[i];
      }
      double mu = acc / static_cast<double>(M);
      double vacc = 0.0;
      for (int n = 0; n < N; ++n) {
        const float* s = x->value.ptr() + (static_cast<int64_t>(n) * C + c) * S;
        for (int64_t i = 0; i < S; ++i) {
          double d = s[i] - mu;
          vacc += d * d;
        }
      }
      double var = vacc / static_cast<double>(M);
      mean[c] = static_cast<float>(mu);
      inv_std[c] = static_cast<float>(1.0 / std::sqrt(var + eps));
      run_mean.data[c] = (1.0f - momentum) * run_mean.data[c] + momentum * mean[c];
      float unbiased = static_cast<float>(vacc / static_cast<double>(M - 1));
      run_var.data[c] = (1.0f - momentum) * run_var.data[c] + momentum * unbiased;
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[c] = run_mean.data[c];
      inv_std[c] = 1.0f / std::sqrt(run_var.data[c] + eps);
    }
  }

  Tensor xhat(x->value.shape);
  Tensor y(x->value.shape);
  for (int n = 0; n < N; ++n) {
    for (int c = 0; c < C; ++c) {
      const float* s = x->value.ptr() + (static_cast<int64_t>(n) * C + c) * S;
      float* xh = xhat.ptr() + (static_cast<int64_t>(n) * C + c) * S;
      float* yo = y.ptr() + (static_cast<int64_t>(n) * C + c) * S;
      float g = gamma->value.data[c], bta = beta->value.data[c];
      float mu = mean[c], is = inv_std[c];
      for (int64_t i = 0; i < S; ++i) {
        xh[i] = (s[i] - mu) * is;
        yo[i] = g * xh[i] + bta;
      }
    }
  }

  Var xi = x, gi = gamma, bi = beta;
  auto xh_shared = std::make_shared<Tensor>(std::move(xhat));
  auto is_shared = std::make_shared<std::vector<float>>(std::move(inv_std));
  return make_node(std::move(y), {x, gamma, beta},
                   [xi, gi, bi, xh_shared, is_shared, N, C, S, M, training](Node& self) {
                     const Tensor& xh = *xh_shared;
                     for (int c = 0; c < C; ++c) {
                       double sum_dy = 0.0, sum_dy_xh = 0.0;
                       for (int n = 0; n < N; ++n) {
                         int64_t off = (static_cast<int64_t>(n) * C + c) * S;
                         const float* dy = self.grad.ptr() + off;
                         const float* xhp = xh.ptr() + off;
                         for (int64_t i = 0; i < S; ++i) {
                           sum_dy += dy[i];
                           sum_dy_xh += dy[i] * xhp[i];
                         }
                       }
                       if (gi->requires_grad)
                         gi->ensure_grad().data[c] += static_cast<float>(sum_dy_xh);
                       if (bi->requires_grad) bi->ensure_grad().data[c] += static_cast<float>(sum_dy);
                       if (!xi->requires_grad) continue;
                       float g = gi->value.data[c], is = (*is_shared)[c];
                       float mdy = static_cast<float>(sum_dy / static_cast<double>(M));
                       float mdyxh = static_cast<float>(sum_dy_xh / static_cast<double>(M));
                       for (int n = 0; n < N; ++n) {
                         int64_t off = (static_cast<int64_t>(n) * C + c) * S;
                         const float* dy = self.grad.ptr() + off;
                         const float* xhp = xh.ptr() + off;
                         float* gx = xi->ensure_grad().ptr() + off;
                         if (training) {
                           for (int64_t i = 0; i < S; ++i)
                             gx[i] += g * is * (dy[i] - mdy - xhp[i] * mdyxh);
                         } else {
                           for (int64_t i = 0; i < S; ++i) gx[i] += g * is * dy[i];
                         }
                       }
                     }
                   });
}

namespace {

template <typename F, typename DF>
Var pointwise(const Var& x, F f, DF df /* (x, y) -> dy/dx */) {
  Tensor y(x->value.shape);
  for (int64_t i = 0; i < x->value.numel(); ++i) y.data[i] = f(x->value.data[i]);
  Var xi = x;
  return make_node(std::move(y), {x}, [xi, df](Node& self) {
    if (!xi->requires_grad) return;
    Tensor& gx = xi->ensure_grad();
    for (int64_t i = 0; i < gx.numel(); ++i)
      gx.data[i] += self.grad.data[i] * df(xi->value.data[i], self.value.data[i]);
  });
}

}  // namespace

Var relu(const Var& x) {
  return pointwise(
      x, [](float v) { return v > 0.0f ? v : 0.0f; },
      [](float v, float) { return v > 0.0f ? 1.0f : 0.0f; });
}

Var leaky_relu(const Var& x, float slope) {
  return pointwise(
      x, [slope](float v) { return v > 0.0f ? v : slope * v; },
      [slope](float v, float) { return v > 0.0f ? 1.0f : slope; });
}

Var tanh_act(const Var& x) {
  return pointwise(
      x, [](float v) { return std::tanh(v); }, [](float, float y) { return 1.0f - y * y; });
}

Var sigmoid(const Var& x) {
  return pointwise(
      x, [](float v) { return 1.0f / (1.0f + std::exp(-v)); },
      [](float, float y) { return y * (1.0f - y); });
}

Var softmax_rows(const Var& x) {
  check_shape(x->value.rank() == 2, "softmax: rank-2 input required");
  int N = x->value.dim(0), K = x->value.dim(1);
  Tensor y({N, K});
  for (int n = 0; n < N; ++n) {
    const float* s = x->value.ptr() + static_cast<int64_t>(n) * K;
    float* o = y.ptr() + static_cast<int64_t>(n) * K;
    float mx = s[0];
    for (int k = 1; k < K; ++k) mx = std::max(mx, s[k]);
    double Z = 0.0;
    for (int k = 0; k < K; ++k) {
      o[k] = std::exp(s[k] - mx);
      Z += o[k];
    }
    for (int k = 0; k < K; ++k) o[k] = static_cast<float>(o[k] / Z);
  }
  Var xi = x;
  return make_node(std::move(y), {x}, [xi, N, K](Node& self) {
    if (!xi->requires_grad) return;
    for (int n = 0; n < N; ++n) {
      const float* yv = self.value.ptr() + static_cast<int64_t>(n) * K;
      const float* dy = self.grad.ptr() + static_cast<int64_t>(n) * K;
      float* gx = xi->ensure_grad().ptr() + static_cast<int64_t>(n) * K;
      double dot = 0.0;
      for (int k = 0; k < K; ++k) dot += dy[k] * yv[k];
      for (int k = 0; k < K; ++k) gx[k] += yv[k] * (dy[k] - static_cast<float>(dot));
    }
  });
}

Var concat_cols(const Var& a, const Var& b) {
  check_shape(a->value.rank() == 2 && b->value.rank() == 2 && a->value.dim(0) == b->value.dim(0),
              "concat: rank-2 with equal batch required");
  int N = a->value.dim(0), Da = a->value.dim(1), Db = b->value.dim(1);
  Tensor y({N, Da + Db});
  for (int n = 0; n < N; ++n) {
    std::copy_n(a->value.ptr() + static_cast<int64_t>(n) * Da, Da,
                y.ptr() + static_cast<int64_t>(n) * (Da + Db));
    std::copy_n(b->value.ptr() + static_cast<int64_t>(n) * Db, Db,
                y.ptr() + static_cast<int64_t>(n) * (Da + Db) + Da);
  }
  Var ai = a, bi = b;
  return make_node(std::move(y), {a, b}, [ai, bi, N, Da, Db](Node& self) {
    for (int n = 0; n < N; ++n) {
      const float* g = self.grad.ptr() + static_cast<int64_t>(n) * (Da + Db);
      if (ai->requires_grad) {
        float* ga = ai->ensure_grad().ptr() + static_cast<int64_t>(n) * Da;
        for (int i = 0; i < Da; ++i) ga[i] += g[i];
      }
      if (bi->requires_grad) {
        float* gb = bi->ensure_grad().ptr() + static_cast<int64_t>(n) * Db;
        for (int i = 0; i < Db; ++i) gb[i] += g[Da + i];
      }
    }
  });
}

Var reshape(const Var& x, std::vector<int> shape) {
  check_shape(Tensor::count(shape) == x->value.numel(),
              "reshape: element count mismatch " + x->value.shape_str());
  Tensor y(std::move(shape), x->value.data);
  Var xi = x;
  return make_node(std::move(y), {x}, [xi](Node& self) {
    if (!xi->requires_grad) return;
    Tensor& gx = xi->ensure_grad();
    for (int64_t i = 0; i < gx.numel(); ++i) gx.data[i] += self.grad.data[i];
  });
}

Var flatten_rows(const Var& x) {
  int N = x->value.dim(0);
  return reshape(x, {N, static_cast<int>(x->value.numel() / N)});
}

Var add(const Var& a, const Var& b) {
  check_shape(a->value.same_shape(b->value), "add: shape mismatch " + a->value.shape_str() + " vs " +
                                                 b->value.shape_str());
  Tensor y(a->value.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = a->value.data[i] + b->value.data[i];
  Var ai = a, bi = b;
  return make_node(std::move(y), {a, b}, [ai, bi](Node& self) {
    for (const Var& p : {ai, bi}) {
      if (!p->requires_grad) continue;
      Tensor& g = p->ensure_grad();
      for (int64_t i = 0; i < g.numel(); ++i) g.data[i] += self.grad.data[i];
    }
  });
}

Var scale(const Var& x, float a) {
  Tensor y(x->value.shape);
  for (int64_t i = 0; i < y.numel(); ++i) y.data[i] = a * x->value.data[i];
  Var xi = x;
  return make_node(std::move(y), {x}, [xi, a](Node& self) {
    if (!xi->requires_grad) return;
    Tensor& g = xi->ensure_grad();
    for (int64_t i = 0; i < g.numel(); ++i) g.data[i] += a * self.grad.data[i];
  });
}

Var detach(const Var& x) { return make_leaf(x->value, false); }

Var mean_log(const Var& p) {
  int64_t N = p->value.numel();
  check_shape(N > 0, "mean_log: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < N; ++i) acc += std::log(std::max(p->value.data[i], kLogEps));
  Var pi = p;
  return make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(N))), {p},
                   [pi, N](Node& self) {
                     if (!pi->requires_grad) return;
                     float g = self.grad.data[0] / static_cast<float>(N);
                     Tensor& gp = pi->ensure_grad();
                     for (int64_t i = 0; i < N; ++i) {
                       float v = pi->value.data[i];
                       if (v > kLogEps) gp.data[i] += g / v;
                     }
                   });
}

Var mean_log_one_minus(const Var& p) {
  int64_t N = p->value.numel();
  check_shape(N > 0, "mean_log_one_minus: empty input");
  double acc = 0.0;
  for (int64_t i = 0; i < N; ++i) acc += std::log(std::max(1.0f - p->value.data[i], kLogEps));
  Var pi = p;
  return make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(N))), {p},
                   [pi, N](Node& self) {
                     if (!pi->requires_grad) return;
                     float g = self.grad.data[0] / static_cast<float>(N);
                     Tensor& gp = pi->ensure_grad();
                     for (int64_t i = 0; i < N; ++i) {
                       float v = 1.0f - pi->value.data[i];
                       if (v > kLogEps) gp.data[i] -= g / v;
                     }
                   });
}

Var mse_mean(const Var& a, const Var& b) {
  check_shape(a->value.same_shape(b->value), "mse: shape mismatch " + a->value.shape_str() +
                                                 " vs " + b->value.shape_str());
  int64_t N = a->value.numel();
  double acc = 0.0;
  for (int64_t i = 0; i < N; ++i) {
    double d = static_cast<double>(a->value.data[i]) - b->value.data[i];
    acc += d * d;
  }
  Var ai = a, bi = b;
  return make_node(Tensor::scalar(static_cast<float>(acc / static_cast<double>(N))), {a, b},
                   [ai, bi, N](Node& self) {
                     float g = 2.0f * self.grad.data[0] / static_cast<float>(N);
                     for (int64_t i = 0; i < N; ++i) {
                       float d = ai->value.data[i] - bi->value.data[i];
                       if (ai->requires_grad) ai->ensure_grad().data[i] += g * d;
                       if (bi->requires_grad) bi->ensure_grad().data[i] -= g * d;
                     }
                   });
}

Var cross_entropy_rows(const Var& q, const Tensor& onehot) {
  check_shape(q->value.rank() == 2 && q->value.same_shape(onehot),
              "cross_entropy: q and one-hot targets must match");
  int N = q->value.dim(0), K = q->value.dim(1);
  std::vector<int> truth(static_cast<size_t>(N), -1);
  for (int n = 0; n < N; ++n) {
    for (int k = 0; k < K; ++k)
      if (onehot.data[static_cast<int64_t>(n) * K + k] == 1.0f) truth[static_cast<size_t>(n)] = k;
    check_shape(truth[static_cast<size_t>(n)] >= 0, "cross_entropy: row is not one-hot");
  }
  double acc = 0.0;
  for (int n = 0; n < N; ++n)
    acc -= std::log(
        std::max(q->value.data[static_cast<int64_t>(n) * K + truth[static_cast<size_t>(n)]], kLogEps));
  Var qi = q;
  return make_node(Tensor::scalar(static_cast<float>(acc / N)), {q}, [qi, truth, N, K](Node& self) {
    if (!qi->requires_grad) return;
    float g = self.grad.data[0] / static_cast<float>(N);
    Tensor& gq = qi->ensure_grad();
    for (int n = 0; n < N; ++n) {
      int64_t idx = static_cast<int64_t>(n) * K + truth[static_cast<size_t>(n)];
      float v = qi->value.data[idx];
      if (v > kLogEps) gq.data[idx] -= g / v;
    }
  });
}

}  // namespace pf
