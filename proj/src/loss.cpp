#include "gazekit/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace gazekit {

double wing_loss_value(double residual, double w, double eps) {
    const double ax = std::abs(residual);
    if (ax < w) return w * std::log1p(ax / eps);
    const double c = w - w * std::log1p(w / eps);
    return ax - c;
}

LossResult wing_loss(const Tensor& pred, const Tensor& target, double w, double eps) {
    if (!pred.same_shape(target)) {
        throw std::invalid_argument("wing_loss: shape mismatch " + pred.shape_str() +
                                    " vs " + target.shape_str());
    }
    if (pred.size() == 0 || w <= 0.0 || eps <= 0.0) {
        throw std::invalid_argument("wing_loss: empty input or non-positive w/eps");
    }
    LossResult out;
    out.grad = Tensor(pred.shape);
    const double inv_n = 1.0 / static_cast<double>(pred.size());
    double sum = 0.0;
    for (int64_t i = 0; i < pred.size(); ++i) {
        const double x = static_cast<double>(pred.data[i]) - target.data[i];
        const double ax = std::abs(x);
        const double sign = x < 0.0 ? -1.0 : 1.0;
        sum += wing_loss_value(x, w, eps);
        const double g = ax < w ? w / (eps + ax) : 1.0;
        out.grad.data[i] = static_cast<float>(sign * g * inv_n);
    }
    out.value = sum * inv_n;
    return out;
}

std::vector<double> softmax_rows(const Tensor& logits) {
    const int N = logits.dim(0), K = logits.dim(1);
    std::vector<double> p(static_cast<size_t>(N) * K);
    for (int n = 0; n < N; ++n) {
        const float* row = logits.ptr() + static_cast<int64_t>(n) * K;
        double* prow = p.data() + static_cast<int64_t>(n) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max<double>(mx, row[k]);
        double z = 0.0;
        for (int k = 0; k < K; ++k) z += std::exp(row[k] - mx);
        for (int k = 0; k < K; ++k) prow[k] = std::exp(row[k] - mx) / z;
    }
    return p;
}

Tensor softmax(const Tensor& logits) {
    const std::vector<double> rows = softmax_rows(logits);
    Tensor p(logits.shape);
    for (size_t i = 0; i < rows.size(); ++i) p.data[i] = static_cast<float>(rows[i]);
    return p;
}

LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels) {
    const int N = logits.dim(0), K = logits.dim(1);
    if (static_cast<int>(labels.size()) != N) {
        throw std::invalid_argument("softmax_cross_entropy: label count mismatch");
    }
    LossResult out;
    out.grad = softmax(logits);
    double sum = 0.0;
    for (int n = 0; n < N; ++n) {
        const int y = labels[n];
        if (y < 0 || y >= K) {
            throw std::invalid_argument("softmax_cross_entropy: label out of range");
        }
        float* grow = out.grad.ptr() + static_cast<int64_t>(n) * K;
        sum -= std::log(std::max(1e-12f, grow[y]));
        grow[y] -= 1.0f;
        for (int k = 0; k < K; ++k) grow[k] /= static_cast<float>(N);
    }
    out.value = sum / N;
    return out;
}

}  // namespace gazekit
