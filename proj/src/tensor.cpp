#include "sdlab/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace sdlab {

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

std::string shape_str(const Tensor& t) {
    std::ostringstream os;
    os << t.n << "x" << t.c << "x" << t.h << "x" << t.w;
    return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(std::string(what) + ": shape mismatch " + shape_str(a) +
                                    " vs " + shape_str(b));
    }
}

void require_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) {
        throw std::invalid_argument(std::string(what) + ": non-finite values");
    }
}

}  // namespace sdlab
