#include <cmath>
#include <cstring>

#include "logsem/kernels.hpp"

// Reference kernels.  Plain C++ loops, no intrinsics; ascending-k
// accumulation so SIMD variants can match the ordering.

namespace logsem {

namespace {

void gemm_f32_scalar(const float* x, const float* w, float* out,
                     size_t M, size_t K, size_t N) {
    for (size_t m = 0; m < M; ++m) {
        const float* xr = x + m * K;
        float* or_ = out + m * N;
        for (size_t k = 0; k < K; ++k) {
            float xv = xr[k];
            if (xv == 0.0f) continue;  // padded rows cost nothing
            const float* wr = w + k * N;
            for (size_t n = 0; n < N; ++n) or_[n] += xv * wr[n];
        }
    }
}

void gemm_i16i32_scalar(const int16_t* x16, const int16_t* w16, int32_t* acc,
                        size_t M, size_t Kp, size_t N) {
    for (size_t m = 0; m < M; ++m) {
        const int16_t* xr = x16 + m * Kp;
        for (size_t n = 0; n < N; ++n) {
            const int16_t* wr = w16 + n * Kp;
            int32_t s = 0;
            for (size_t k = 0; k < Kp; ++k)
                s += static_cast<int32_t>(xr[k]) * static_cast<int32_t>(wr[k]);
            acc[m * N + n] = s;
        }
    }
}

void quantize_u8_scalar(const float* x, uint8_t* q, size_t n, float scale,
                        int32_t zp) {
    for (size_t i = 0; i < n; ++i) {
        // nearbyintf under the default FP environment = round half to even.
        // The +-512 pre-clamp keeps the float->int cast defined for wild
        // inputs (and maps NaN to the low end), the real clamp is [0, 255].
        float r = std::nearbyintf(x[i] / scale);
        r = (r > -512.0f) ? r : -512.0f;
        if (r > 512.0f) r = 512.0f;
        int32_t v = static_cast<int32_t>(r) + zp;
        if (v < 0) v = 0;
        if (v > 255) v = 255;
        q[i] = static_cast<uint8_t>(v);
    }
}

}  // namespace

const KernelTable kScalarKernels = {
    gemm_f32_scalar,
    gemm_i16i32_scalar,
    quantize_u8_scalar,
};

void fill_bias(float* out, const float* bias, size_t M, size_t N) {
    if (bias == nullptr) {
        std::memset(out, 0, M * N * sizeof(float));
        return;
    }
    for (size_t m = 0; m < M; ++m)
        std::memcpy(out + m * N, bias, N * sizeof(float));
}

void widen_u8_i16(const uint8_t* q, int16_t* x16, size_t k, size_t kp) {
    size_t i = 0;
    for (; i < k; ++i) x16[i] = static_cast<int16_t>(q[i]);
    for (; i < kp; ++i) x16[i] = 0;
}

void widen_s8_i16(const int8_t* q, int16_t* w16, size_t k, size_t kp) {
    size_t i = 0;
    for (; i < k; ++i) w16[i] = static_cast<int16_t>(q[i]);
    for (; i < kp; ++i) w16[i] = 0;
}

}  // namespace logsem
