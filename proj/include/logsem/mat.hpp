#pragma once

#include <cstddef>
#include <vector>

namespace logsem {

// Minimal row-major float matrix.  Deliberately dumb: the heavy lifting is
// done by the kernels, this is just shared storage with a shape.
struct FloatMat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<float> data;

    FloatMat() = default;
    FloatMat(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    float* row(size_t i) { return data.data() + i * cols; }
    const float* row(size_t i) const { return data.data() + i * cols; }
    float& at(size_t i, size_t j) { return data[i * cols + j]; }
    float at(size_t i, size_t j) const { return data[i * cols + j]; }
    size_t numel() const { return rows * cols; }
};

}  // namespace logsem
