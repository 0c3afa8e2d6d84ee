#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "priorforge/ops.hpp"
#include "priorforge/rng.hpp"

namespace pf {

// Owner of an ordered set of named parameter tensors plus batch-norm running
// buffers. Parameter names are stable across save/load; the mode flag picks
// batch vs running statistics in batch-norm layers.
class Network {
 public:
  explicit Network(std::string name) : name_(std::move(name)) {}
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;
  virtual ~Network() = default;

  const std::string& name() const { return name_; }
  bool training() const { return training_; }
  void set_train(bool t) { training_ = t; }

  const std::vector<std::pair<std::string, Var>>& named_params() const { return params_; }
  std::vector<Var> params() const {
    std::vector<Var> out;
    for (const auto& [n, v] : params_) out.push_back(v);
    return out;
  }
  // Running statistics; serialized alongside parameters.
  const std::vector<std::pair<std::string, Tensor*>>& named_buffers() const { return buffers_; }

  int64_t param_count() const {
    int64_t n = 0;
    for (const auto& [name, v] : params_) n += v->value.numel();
    return n;
  }

  Var add_param(const std::string& name, Tensor t) {
    Var v = make_leaf(std::move(t), true);
    params_.emplace_back(name, v);
    return v;
  }
  void add_buffer(const std::string& name, Tensor* t) { buffers_.emplace_back(name, t); }

 private:
  std::string name_;
  bool training_ = true;
  std::vector<std::pair<std::string, Var>> params_;
  std::vector<std::pair<std::string, Tensor*>> buffers_;
};

// Conv / FC weights ~ N(0, 0.02), batch-norm scale ~ N(1, 0.02), biases 0.
inline Tensor normal_init(std::vector<int> shape, Rng& rng, float mean = 0.0f, float sd = 0.02f) {
  Tensor t(std::move(shape));
  for (auto& v : t.data) v = rng.normalf(mean, sd);
  return t;
}

struct LinearLayer {
  Var W, b;
  LinearLayer() = default;
  LinearLayer(Network& net, const std::string& prefix, int in, int out, Rng& rng) {
    W = net.add_param(prefix + ".weight", normal_init({out, in}, rng));
    b = net.add_param(prefix + ".bias", Tensor::zeros({out}));
  }
  Var forward(const Var& x) const { return linear(x, W, b); }
};

struct ConvLayer {
  Var W, b;
  int stride = 1, pad = 1;
  ConvLayer() = default;
  ConvLayer(Network& net, const std::string& prefix, int in_ch, int out_ch, int k, int stride_,
            int pad_, Rng& rng)
      : stride(stride_), pad(pad_) {
    W = net.add_param(prefix + ".weight", normal_init({out_ch, in_ch, k, k}, rng));
    b = net.add_param(prefix + ".bias", Tensor::zeros({out_ch}));
  }
  Var forward(const Var& x) const { return conv2d(x, W, b, stride, pad); }
};

struct BatchNormLayer {
  Var gamma, beta;
  // Heap-held so the registered buffer addresses stay valid when the layer
  // object itself is moved into its owning network.
  std::shared_ptr<Tensor> run_mean, run_var;
  BatchNormLayer() = default;
  BatchNormLayer(Network& net, const std::string& prefix, int ch, Rng& rng)
      : run_mean(std::make_shared<Tensor>(Tensor::zeros({ch}))),
        run_var(std::make_shared<Tensor>(Tensor::full({ch}, 1.0f))) {
    gamma = net.add_param(prefix + ".gamma", normal_init({ch}, rng, 1.0f));
    beta = net.add_param(prefix + ".beta", Tensor::zeros({ch}));
    net.add_buffer(prefix + ".running_mean", run_mean.get());
    net.add_buffer(prefix + ".running_var", run_var.get());
  }
  Var forward(const Var& x, bool training) {
    return batchnorm(x, gamma, beta, *run_mean, *run_var, training);
  }
};

enum class Resample { none, down, up };

// Two 3x3 convs with an additive skip path and a final rectifier. The skip
// uses a learned 1x1 projection whenever the shape changes (stride for down,
// shared nearest-neighbour upsample for up); identity otherwise.
struct ResidualBlock {
  ConvLayer conv1, conv2;
  std::optional<ConvLayer> skip;
  Resample resample = Resample::none;
  ResidualBlock() = default;
  ResidualBlock(Network& net, const std::string& prefix, int in_ch, int out_ch, Resample rs,
                Rng& rng)
      : resample(rs) {
    int s1 = rs == Resample::down ? 2 : 1;
    conv1 = ConvLayer(net, prefix + ".conv1", in_ch, out_ch, 3, s1, 1, rng);
    conv2 = ConvLayer(net, prefix + ".conv2", out_ch, out_ch, 3, 1, 1, rng);
    if (rs != Resample::none || in_ch != out_ch)
      skip = ConvLayer(net, prefix + ".skip", in_ch, out_ch, 1, rs == Resample::down ? 2 : 1, 0, rng);
  }
  Var forward(const Var& x) const {
    Var in = resample == Resample::up ? upsample_nearest2x(x) : x;
    Var h = relu(conv1.forward(in));
    h = relu(conv2.forward(h));
    Var sk = skip ? skip->forward(in) : in;
    return relu(add(sk, h));
  }
};

}  // namespace pf
