#include "gazekit/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gazekit {

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ", ";
        os << shape[i];
    }
    os << ")";
    return os.str();
}

bool Tensor::all_finite() const {
    for (const float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_shape(const Tensor& t, const std::vector<int>& expect, const char* what) {
    if (t.shape != expect) {
        Tensor e(expect);
        throw std::invalid_argument(std::string(what) + ": shape " + t.shape_str() +
                                    ", expected " + e.shape_str());
    }
}

}  // namespace gazekit
