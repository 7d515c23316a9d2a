#pragma once

#include <cmath>

// Scalar building blocks shared by every objective. Templated on the scalar
// type so the same formulas serve double-precision verification and any
// lower-precision experimentation.

namespace slime {

// softplus(z) = ln(1 + e^z). For z > 30 the linear branch is exact to
// below 1e-13 and avoids exp() overflow for extreme inputs.
template <typename Scalar>
Scalar softplus(Scalar z) {
    if (z > Scalar(30)) {
        return z;
    }
    return std::log1p(std::exp(z));
}

template <typename Scalar>
Scalar sigmoid(Scalar z) {
    if (z >= Scalar(0)) {
        return Scalar(1) / (Scalar(1) + std::exp(-z));
    }
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

// -ln sigma(z), computed as softplus(-z) so large |z| never saturates a log.
template <typename Scalar>
Scalar neg_log_sigmoid(Scalar z) {
    return softplus(-z);
}

template <typename Scalar>
Scalar relu(Scalar z) {
    return z > Scalar(0) ? z : Scalar(0);
}

}  // namespace slime
