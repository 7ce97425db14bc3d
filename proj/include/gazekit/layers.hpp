#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gazekit/rng.hpp"
#include "gazekit/tensor.hpp"

namespace gazekit {

struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

// Caffe-style layer: explicit forward/backward, parameters owned by the
// layer. Forward in train mode caches what backward needs; eval-mode forward
// writes no shared state, so concurrent inference over a frozen model is safe.
class Layer {
public:
    virtual Tensor forward(const Tensor& x, bool train) = 0;
    virtual Tensor backward(const Tensor& dy) = 0;
    virtual void collect_params(const std::string& prefix, std::vector<ParamRef>& out) {}
    virtual ~Layer() = default;
};

class Conv2d : public Layer {
public:
    Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias, Rng& rng);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

private:
    int in_c_, out_c_, k_, stride_, pad_;
    bool has_bias_;
    Tensor w_, dw_, b_, db_;
    Tensor x_cache_;
};

class BatchNorm2d : public Layer {
public:
    explicit BatchNorm2d(int channels, double momentum = 0.1, double eps = 1e-5);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

private:
    int c_;
    double momentum_, eps_;
    Tensor gamma_, dgamma_, beta_, dbeta_;
    Tensor running_mean_, running_var_;  // frozen in eval mode
    Tensor xhat_cache_;
    std::vector<float> invstd_cache_, mean_cache_;
    std::vector<int> x_shape_;
};

class ReLU : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<uint8_t> mask_;
    std::vector<int> x_shape_;
};

class MaxPool2d : public Layer {
public:
    MaxPool2d(int kernel, int stride, int pad);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    int k_, stride_, pad_;
    std::vector<int64_t> argmax_;
    std::vector<int> x_shape_, y_shape_;
};

// (N, C, H, W) -> (N, C) spatial mean.
class GlobalAvgPool : public Layer {
public:
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;

private:
    std::vector<int> x_shape_;
};

class Linear : public Layer {
public:
    Linear(int in_f, int out_f, Rng& rng);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

    int in_features() const { return in_f_; }
    int out_features() const { return out_f_; }

private:
    int in_f_, out_f_;
    Tensor w_, dw_, b_, db_;
    Tensor x_cache_;
};

class Sequential : public Layer {
public:
    void add(std::string name, std::unique_ptr<Layer> layer);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

private:
    std::vector<std::pair<std::string, std::unique_ptr<Layer>>> layers_;
};

// Basic or bottleneck residual block with optional projection shortcut.
class ResidualBlock : public Layer {
public:
    ResidualBlock(int in_c, int planes, int stride, bool bottleneck, Rng& rng);
    Tensor forward(const Tensor& x, bool train) override;
    Tensor backward(const Tensor& dy) override;
    void collect_params(const std::string& prefix, std::vector<ParamRef>& out) override;

    int out_channels() const { return out_c_; }

private:
    Sequential main_;
    std::unique_ptr<Sequential> shortcut_;  // null = identity
    ReLU out_relu_;
    int out_c_;
    Tensor x_cache_, sum_cache_unused_;
};

}  // namespace gazekit
