#pragma once

#include <vector>

#include "gazekit/tensor.hpp"

namespace gazekit {

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d value / d pred
};

// Wing loss, mean over elements. Per element x = pred - target:
//   w * ln(1 + |x|/eps)  for |x| < w,  else |x| - C,
// with C = w - w*ln(1 + w/eps), continuous at the knee.
LossResult wing_loss(const Tensor& pred, const Tensor& target, double w = 10.0,
                     double eps = 2.0);

double wing_loss_value(double residual, double w = 10.0, double eps = 2.0);

// Softmax cross-entropy over logits (N, K); labels are 0-based class ids.
// Mean over the batch.
LossResult softmax_cross_entropy(const Tensor& logits, const std::vector<int>& labels);

// Row-wise softmax probabilities of (N, K) logits in double precision
// (each row sums to 1 within double rounding).
std::vector<double> softmax_rows(const Tensor& logits);

// Row-wise softmax of (N, K) logits.
Tensor softmax(const Tensor& logits);

}  // namespace gazekit
