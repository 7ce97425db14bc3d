#include "gazekit/layers.hpp"

#include <Eigen/Dense>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <cmath>
#include <limits>
#include <stdexcept>

namespace gazekit {

namespace {

using RowMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<RowMat>;
using CMapRM = Eigen::Map<const RowMat>;

void he_normal(Tensor& t, int fan_in, Rng& rng) {
    const double std = std::sqrt(2.0 / fan_in);
    for (auto& v : t.data) v = static_cast<float>(std * rng.normal());
}

int conv_out(int in, int k, int stride, int pad) {
    return (in + 2 * pad - k) / stride + 1;
}

// Gathers conv patches of sample x_n into a (C*k*k) x (oh*ow) row-major
// buffer; zero padding.
void im2col(const float* x, int C, int H, int W, int k, int stride, int pad,
            int oh, int ow, float* col) {
    const int S = oh * ow;
    for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                float* row = col + (static_cast<int64_t>(c) * k * k + kh * k + kw) * S;
                for (int orow = 0; orow < oh; ++orow) {
                    const int ir = orow * stride - pad + kh;
                    for (int ocol = 0; ocol < ow; ++ocol) {
                        const int ic = ocol * stride - pad + kw;
                        row[orow * ow + ocol] =
                            (ir >= 0 && ir < H && ic >= 0 && ic < W)
                                ? x[(static_cast<int64_t>(c) * H + ir) * W + ic]
                                : 0.0f;
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, int C, int H, int W, int k, int stride, int pad,
                int oh, int ow, float* dx) {
    const int S = oh * ow;
    for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < k; ++kh) {
            for (int kw = 0; kw < k; ++kw) {
                const float* row = col + (static_cast<int64_t>(c) * k * k + kh * k + kw) * S;
                for (int orow = 0; orow < oh; ++orow) {
                    const int ir = orow * stride - pad + kh;
                    if (ir < 0 || ir >= H) continue;
                    for (int ocol = 0; ocol < ow; ++ocol) {
                        const int ic = ocol * stride - pad + kw;
                        if (ic < 0 || ic >= W) continue;
                        dx[(static_cast<int64_t>(c) * H + ir) * W + ic] += row[orow * ow + ocol];
                    }
                }
            }
        }
    }
}

}  // namespace

Conv2d::Conv2d(int in_c, int out_c, int kernel, int stride, int pad, bool bias, Rng& rng)
    : in_c_(in_c), out_c_(out_c), k_(kernel), stride_(stride), pad_(pad), has_bias_(bias) {
    w_ = Tensor({out_c, in_c, kernel, kernel});
    dw_ = Tensor({out_c, in_c, kernel, kernel});
    he_normal(w_, in_c * kernel * kernel, rng);
    if (has_bias_) {
        b_ = Tensor({out_c});
        db_ = Tensor({out_c});
    }
}

Tensor Conv2d::forward(const Tensor& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != in_c_) {
        throw std::invalid_argument("Conv2d: input shape " + x.shape_str() +
                                    " incompatible with in_channels=" + std::to_string(in_c_));
    }
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int oh = conv_out(H, k_, stride_, pad_);
    const int ow = conv_out(W, k_, stride_, pad_);
    if (oh < 1 || ow < 1) {
        throw std::invalid_argument("Conv2d: input " + x.shape_str() + " too small for kernel");
    }
    const int S = oh * ow;
    const int ckk = in_c_ * k_ * k_;

    Tensor y({N, out_c_, oh, ow});
    CMapRM wmat(w_.ptr(), out_c_, ckk);
    // Samples write disjoint output slices; safe to split across threads.
#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
        std::vector<float> col(static_cast<size_t>(ckk) * S);
        im2col(x.ptr() + static_cast<int64_t>(n) * in_c_ * H * W, in_c_, H, W, k_,
               stride_, pad_, oh, ow, col.data());
        MapRM ymat(y.ptr() + static_cast<int64_t>(n) * out_c_ * S, out_c_, S);
        ymat.noalias() = wmat * CMapRM(col.data(), ckk, S);
        if (has_bias_) {
            for (int oc = 0; oc < out_c_; ++oc) ymat.row(oc).array() += b_.data[oc];
        }
    }
    if (train) x_cache_ = x;
    return y;
}

Tensor Conv2d::backward(const Tensor& dy) {
    const Tensor& x = x_cache_;
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int oh = dy.dim(2), ow = dy.dim(3);
    const int S = oh * ow;
    const int ckk = in_c_ * k_ * k_;

    Tensor dx(x.shape);
    CMapRM wmat(w_.ptr(), out_c_, ckk);

#ifdef _OPENMP
    const int threads = omp_get_max_threads();
#else
    const int threads = 1;
#endif
    // Per-thread weight/bias partials, reduced in thread order afterwards so
    // the accumulation order is fixed for a given thread count.
    std::vector<std::vector<float>> dw_part(threads,
                                            std::vector<float>(static_cast<size_t>(out_c_) * ckk));
    std::vector<std::vector<float>> db_part(
        threads, std::vector<float>(has_bias_ ? out_c_ : 0));

#pragma omp parallel for schedule(static)
    for (int n = 0; n < N; ++n) {
#ifdef _OPENMP
        const int tid = omp_get_thread_num();
#else
        const int tid = 0;
#endif
        std::vector<float> col(static_cast<size_t>(ckk) * S);
        std::vector<float> dcol(static_cast<size_t>(ckk) * S);
        im2col(x.ptr() + static_cast<int64_t>(n) * in_c_ * H * W, in_c_, H, W, k_,
               stride_, pad_, oh, ow, col.data());
        CMapRM dymat(dy.ptr() + static_cast<int64_t>(n) * out_c_ * S, out_c_, S);
        MapRM dwp(dw_part[tid].data(), out_c_, ckk);
        dwp.noalias() += dymat * CMapRM(col.data(), ckk, S).transpose();
        MapRM dcolmat(dcol.data(), ckk, S);
        dcolmat.noalias() = wmat.transpose() * dymat;
        col2im_add(dcol.data(), in_c_, H, W, k_, stride_, pad_, oh, ow,
                   dx.ptr() + static_cast<int64_t>(n) * in_c_ * H * W);
        if (has_bias_) {
            for (int oc = 0; oc < out_c_; ++oc) db_part[tid][oc] += dymat.row(oc).sum();
        }
    }
    for (int t = 0; t < threads; ++t) {
        for (size_t i = 0; i < dw_.data.size(); ++i) dw_.data[i] += dw_part[t][i];
        if (has_bias_) {
            for (int oc = 0; oc < out_c_; ++oc) db_.data[oc] += db_part[t][oc];
        }
    }
    return dx;
}

void Conv2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w_, &dw_});
    if (has_bias_) out.push_back({prefix + ".b", &b_, &db_});
}

BatchNorm2d::BatchNorm2d(int channels, double momentum, double eps)
    : c_(channels), momentum_(momentum), eps_(eps) {
    gamma_ = Tensor({channels});
    gamma_.fill(1.0f);
    dgamma_ = Tensor({channels});
    beta_ = Tensor({channels});
    dbeta_ = Tensor({channels});
    running_mean_ = Tensor({channels});
    running_var_ = Tensor({channels});
    running_var_.fill(1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool train) {
    if (x.ndim() != 4 || x.dim(1) != c_) {
        throw std::invalid_argument("BatchNorm2d: bad input shape " + x.shape_str());
    }
    const int N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const int64_t hw = static_cast<int64_t>(H) * W;
    const double m = static_cast<double>(N) * hw;

    Tensor y(x.shape);
    if (train) {
        x_shape_ = x.shape;
        mean_cache_.assign(c_, 0.0f);
        invstd_cache_.assign(c_, 0.0f);
        xhat_cache_ = Tensor(x.shape);
        // Channels are independent; each owns its stats and output slices.
#pragma omp parallel for schedule(static)
        for (int c = 0; c < c_; ++c) {
            double sum = 0.0, sq = 0.0;
            for (int n = 0; n < N; ++n) {
                const float* p = x.ptr() + (static_cast<int64_t>(n) * c_ + c) * hw;
                for (int64_t i = 0; i < hw; ++i) {
                    sum += p[i];
                    sq += static_cast<double>(p[i]) * p[i];
                }
            }
            const double mean = sum / m;
            const double var = sq / m - mean * mean;
            const double invstd = 1.0 / std::sqrt(var + eps_);
            mean_cache_[c] = static_cast<float>(mean);
            invstd_cache_[c] = static_cast<float>(invstd);
            running_mean_.data[c] = static_cast<float>(
                (1.0 - momentum_) * running_mean_.data[c] + momentum_ * mean);
            running_var_.data[c] = static_cast<float>(
                (1.0 - momentum_) * running_var_.data[c] + momentum_ * var);
            const float g = gamma_.data[c], b = beta_.data[c];
            for (int n = 0; n < N; ++n) {
                const int64_t off = (static_cast<int64_t>(n) * c_ + c) * hw;
                const float* p = x.ptr() + off;
                float* xh = xhat_cache_.ptr() + off;
                float* py = y.ptr() + off;
                for (int64_t i = 0; i < hw; ++i) {
                    xh[i] = static_cast<float>((p[i] - mean) * invstd);
                    py[i] = g * xh[i] + b;
                }
            }
        }
    } else {
        for (int c = 0; c < c_; ++c) {
            const double invstd = 1.0 / std::sqrt(running_var_.data[c] + eps_);
            const double mean = running_mean_.data[c];
            const float g = gamma_.data[c], b = beta_.data[c];
            for (int n = 0; n < N; ++n) {
                const int64_t off = (static_cast<int64_t>(n) * c_ + c) * hw;
                const float* p = x.ptr() + off;
                float* py = y.ptr() + off;
                for (int64_t i = 0; i < hw; ++i) {
                    py[i] = static_cast<float>(g * (p[i] - mean) * invstd + b);
                }
            }
        }
    }
    return y;
}

Tensor BatchNorm2d::backward(const Tensor& dy) {
    const int N = x_shape_[0], H = x_shape_[2], W = x_shape_[3];
    const int64_t hw = static_cast<int64_t>(H) * W;
    const double m = static_cast<double>(N) * hw;

    Tensor dx(x_shape_);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < c_; ++c) {
        const float g = gamma_.data[c];
        const float invstd = invstd_cache_[c];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (int n = 0; n < N; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * c_ + c) * hw;
            const float* pdy = dy.ptr() + off;
            const float* xh = xhat_cache_.ptr() + off;
            for (int64_t i = 0; i < hw; ++i) {
                sum_dy += pdy[i];
                sum_dy_xhat += static_cast<double>(pdy[i]) * xh[i];
            }
        }
        dgamma_.data[c] += static_cast<float>(sum_dy_xhat);
        dbeta_.data[c] += static_cast<float>(sum_dy);
        for (int n = 0; n < N; ++n) {
            const int64_t off = (static_cast<int64_t>(n) * c_ + c) * hw;
            const float* pdy = dy.ptr() + off;
            const float* xh = xhat_cache_.ptr() + off;
            float* pdx = dx.ptr() + off;
            for (int64_t i = 0; i < hw; ++i) {
                pdx[i] = static_cast<float>(
                    g * invstd * (pdy[i] - sum_dy / m - xh[i] * sum_dy_xhat / m));
            }
        }
    }
    return dx;
}

void BatchNorm2d::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", &gamma_, &dgamma_});
    out.push_back({prefix + ".beta", &beta_, &dbeta_});
    // Running stats carry no gradient but belong to the checkpoint and to
    // freeze guarantees; optimizers skip refs with null grad.
    out.push_back({prefix + ".running_mean", &running_mean_, nullptr});
    out.push_back({prefix + ".running_var", &running_var_, nullptr});
}

Tensor ReLU::forward(const Tensor& x, bool train) {
    Tensor y(x.shape);
    if (train) {
        x_shape_ = x.shape;
        mask_.assign(x.data.size(), 0);
        for (size_t i = 0; i < x.data.size(); ++i) {
            if (x.data[i] > 0.0f) {
                y.data[i] = x.data[i];
                mask_[i] = 1;
            }
        }
    } else {
        for (size_t i = 0; i < x.data.size(); ++i) {
            y.data[i] = x.data[i] > 0.0f ? x.data[i] : 0.0f;
        }
    }
    return y;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx(x_shape_);
    for (size_t i = 0; i < dy.data.size(); ++i) {
        dx.data[i] = mask_[i] ? dy.data[i] : 0.0f;
    }
    return dx;
}

MaxPool2d::MaxPool2d(int kernel, int stride, int pad) : k_(kernel), stride_(stride), pad_(pad) {}

Tensor MaxPool2d::forward(const Tensor& x, bool train) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int oh = conv_out(H, k_, stride_, pad_);
    const int ow = conv_out(W, k_, stride_, pad_);
    Tensor y({N, C, oh, ow});
    if (train) {
        x_shape_ = x.shape;
        y_shape_ = y.shape;
        argmax_.assign(y.data.size(), -1);
    }
    int64_t oi = 0;
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* p = x.ptr() + (static_cast<int64_t>(n) * C + c) * H * W;
            for (int orow = 0; orow < oh; ++orow) {
                for (int ocol = 0; ocol < ow; ++ocol, ++oi) {
                    float best = -std::numeric_limits<float>::infinity();
                    int64_t best_idx = -1;
                    for (int kh = 0; kh < k_; ++kh) {
                        const int ir = orow * stride_ - pad_ + kh;
                        if (ir < 0 || ir >= H) continue;
                        for (int kw = 0; kw < k_; ++kw) {
                            const int ic = ocol * stride_ - pad_ + kw;
                            if (ic < 0 || ic >= W) continue;
                            const float v = p[static_cast<int64_t>(ir) * W + ic];
                            if (v > best) {
                                best = v;
                                best_idx = (static_cast<int64_t>(n) * C + c) * H * W + ir * W + ic;
                            }
                        }
                    }
                    y.data[oi] = best;
                    if (train) argmax_[oi] = best_idx;
                }
            }
        }
    }
    return y;
}

Tensor MaxPool2d::backward(const Tensor& dy) {
    Tensor dx(x_shape_);
    for (size_t i = 0; i < dy.data.size(); ++i) {
        if (argmax_[i] >= 0) dx.data[argmax_[i]] += dy.data[i];
    }
    return dx;
}

Tensor GlobalAvgPool::forward(const Tensor& x, bool train) {
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const float inv = 1.0f / static_cast<float>(H * W);
    Tensor y({N, C});
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float* p = x.ptr() + (static_cast<int64_t>(n) * C + c) * H * W;
            double s = 0.0;
            for (int i = 0; i < H * W; ++i) s += p[i];
            y.data[static_cast<int64_t>(n) * C + c] = static_cast<float>(s) * inv;
        }
    }
    if (train) x_shape_ = x.shape;
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    const int N = x_shape_[0], C = x_shape_[1], H = x_shape_[2], W = x_shape_[3];
    const float inv = 1.0f / static_cast<float>(H * W);
    Tensor dx(x_shape_);
    for (int n = 0; n < N; ++n) {
        for (int c = 0; c < C; ++c) {
            const float g = dy.data[static_cast<int64_t>(n) * C + c] * inv;
            float* p = dx.ptr() + (static_cast<int64_t>(n) * C + c) * H * W;
            for (int i = 0; i < H * W; ++i) p[i] = g;
        }
    }
    return dx;
}

Linear::Linear(int in_f, int out_f, Rng& rng) : in_f_(in_f), out_f_(out_f) {
    w_ = Tensor({out_f, in_f});
    dw_ = Tensor({out_f, in_f});
    b_ = Tensor({out_f});
    db_ = Tensor({out_f});
    he_normal(w_, in_f, rng);
}

Tensor Linear::forward(const Tensor& x, bool train) {
    if (x.ndim() != 2 || x.dim(1) != in_f_) {
        throw std::invalid_argument("Linear: input " + x.shape_str() + ", expected (N, " +
                                    std::to_string(in_f_) + ")");
    }
    const int N = x.dim(0);
    Tensor y({N, out_f_});
    CMapRM xm(x.ptr(), N, in_f_);
    CMapRM wm(w_.ptr(), out_f_, in_f_);
    MapRM ym(y.ptr(), N, out_f_);
    ym.noalias() = xm * wm.transpose();
    for (int n = 0; n < N; ++n) {
        for (int o = 0; o < out_f_; ++o) y.data[static_cast<int64_t>(n) * out_f_ + o] += b_.data[o];
    }
    if (train) x_cache_ = x;
    return y;
}

Tensor Linear::backward(const Tensor& dy) {
    const int N = x_cache_.dim(0);
    Tensor dx({N, in_f_});
    CMapRM dym(dy.ptr(), N, out_f_);
    CMapRM xm(x_cache_.ptr(), N, in_f_);
    CMapRM wm(w_.ptr(), out_f_, in_f_);
    MapRM dwm(dw_.ptr(), out_f_, in_f_);
    MapRM dxm(dx.ptr(), N, in_f_);
    dwm.noalias() += dym.transpose() * xm;
    dxm.noalias() = dym * wm;
    for (int n = 0; n < N; ++n) {
        for (int o = 0; o < out_f_; ++o) db_.data[o] += dy.data[static_cast<int64_t>(n) * out_f_ + o];
    }
    return dx;
}

void Linear::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".w", &w_, &dw_});
    out.push_back({prefix + ".b", &b_, &db_});
}

void Sequential::add(std::string name, std::unique_ptr<Layer> layer) {
    layers_.emplace_back(std::move(name), std::move(layer));
}

Tensor Sequential::forward(const Tensor& x, bool train) {
    Tensor h = x;
    for (auto& [name, layer] : layers_) h = layer->forward(h, train);
    return h;
}

Tensor Sequential::backward(const Tensor& dy) {
    Tensor g = dy;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        g = it->second->backward(g);
    }
    return g;
}

void Sequential::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    for (auto& [name, layer] : layers_) {
        layer->collect_params(prefix.empty() ? name : prefix + "." + name, out);
    }
}

ResidualBlock::ResidualBlock(int in_c, int planes, int stride, bool bottleneck, Rng& rng) {
    out_c_ = bottleneck ? planes * 4 : planes;
    if (bottleneck) {
        main_.add("conv1", std::make_unique<Conv2d>(in_c, planes, 1, 1, 0, false, rng));
        main_.add("bn1", std::make_unique<BatchNorm2d>(planes));
        main_.add("relu1", std::make_unique<ReLU>());
        main_.add("conv2", std::make_unique<Conv2d>(planes, planes, 3, stride, 1, false, rng));
        main_.add("bn2", std::make_unique<BatchNorm2d>(planes));
        main_.add("relu2", std::make_unique<ReLU>());
        main_.add("conv3", std::make_unique<Conv2d>(planes, out_c_, 1, 1, 0, false, rng));
        main_.add("bn3", std::make_unique<BatchNorm2d>(out_c_));
    } else {
        main_.add("conv1", std::make_unique<Conv2d>(in_c, planes, 3, stride, 1, false, rng));
        main_.add("bn1", std::make_unique<BatchNorm2d>(planes));
        main_.add("relu1", std::make_unique<ReLU>());
        main_.add("conv2", std::make_unique<Conv2d>(planes, planes, 3, 1, 1, false, rng));
        main_.add("bn2", std::make_unique<BatchNorm2d>(planes));
    }
    if (stride != 1 || in_c != out_c_) {
        shortcut_ = std::make_unique<Sequential>();
        shortcut_->add("conv", std::make_unique<Conv2d>(in_c, out_c_, 1, stride, 0, false, rng));
        shortcut_->add("bn", std::make_unique<BatchNorm2d>(out_c_));
    }
}

Tensor ResidualBlock::forward(const Tensor& x, bool train) {
    Tensor m = main_.forward(x, train);
    const Tensor sc = shortcut_ ? shortcut_->forward(x, train) : x;
    for (size_t i = 0; i < m.data.size(); ++i) m.data[i] += sc.data[i];
    return out_relu_.forward(m, train);
}

Tensor ResidualBlock::backward(const Tensor& dy) {
    const Tensor dsum = out_relu_.backward(dy);
    Tensor dx = main_.backward(dsum);
    if (shortcut_) {
        const Tensor dsc = shortcut_->backward(dsum);
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dsc.data[i];
    } else {
        for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] += dsum.data[i];
    }
    return dx;
}

void ResidualBlock::collect_params(const std::string& prefix, std::vector<ParamRef>& out) {
    main_.collect_params(prefix, out);
    if (shortcut_) shortcut_->collect_params(prefix + ".shortcut", out);
}

}  // namespace gazekit
