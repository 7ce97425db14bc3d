#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gazekit {

// Dense float tensor, row-major, NCHW for images and (N, F) for features.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        data.assign(count(shape), 0.0f);
    }

    static int64_t count(const std::vector<int>& s) {
        int64_t n = 1;
        for (const int d : s) n *= d;
        return n;
    }

    int64_t size() const { return static_cast<int64_t>(data.size()); }
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int ndim() const { return static_cast<int>(shape.size()); }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    std::string shape_str() const;

    void fill(float v) { std::fill(data.begin(), data.end(), v); }
    bool all_finite() const;

    float* ptr() { return data.data(); }
    const float* ptr() const { return data.data(); }
};

// Throws std::invalid_argument naming both shapes when they differ.
void check_shape(const Tensor& t, const std::vector<int>& expect, const char* what);

}  // namespace gazekit
