#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>
#include <cstddef>

#include "logsem/kernels.hpp"

// NEON kernels, aarch64 only.  Mirrors the AVX2 layout decisions: f32 GEMM
// accumulates ascending-k with fused multiply-add; the i16 GEMM is exact.

namespace logsem {

namespace {

constexpr size_t KC = 256;
constexpr size_t NC = 1024;

template <int MR, int NV>
inline void micro_f32(const float* x, const float* w, float* out, size_t m0,
                      size_t j, size_t k0, size_t kc, size_t K, size_t N) {
    float32x4_t acc[MR][NV];
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v)
            acc[r][v] = vld1q_f32(out + (m0 + r) * N + j + 4 * v);
    for (size_t k = k0; k < k0 + kc; ++k) {
        const float* wr = w + k * N + j;
        float32x4_t wv[NV];
        for (int v = 0; v < NV; ++v) wv[v] = vld1q_f32(wr + 4 * v);
        for (int r = 0; r < MR; ++r) {
            float32x4_t xb = vdupq_n_f32(x[(m0 + r) * K + k]);
            for (int v = 0; v < NV; ++v)
                acc[r][v] = vfmaq_f32(acc[r][v], xb, wv[v]);
        }
    }
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v)
            vst1q_f32(out + (m0 + r) * N + j + 4 * v, acc[r][v]);
}

inline void micro_f32_tail(const float* x, const float* w, float* out,
                           size_t m0, size_t mr, size_t j, size_t jend,
                           size_t k0, size_t kc, size_t K, size_t N) {
    for (size_t r = 0; r < mr; ++r) {
        for (size_t n = j; n < jend; ++n) {
            float acc = out[(m0 + r) * N + n];
            for (size_t k = k0; k < k0 + kc; ++k)
                acc = __builtin_fmaf(x[(m0 + r) * K + k], w[k * N + n], acc);
            out[(m0 + r) * N + n] = acc;
        }
    }
}

template <int MR>
inline void row_block_f32(const float* x, const float* w, float* out,
                          size_t m0, size_t n0, size_t nc, size_t k0,
                          size_t kc, size_t K, size_t N) {
    size_t j = n0;
    for (; j + 8 <= n0 + nc; j += 8)
        micro_f32<MR, 2>(x, w, out, m0, j, k0, kc, K, N);
    for (; j + 4 <= n0 + nc; j += 4)
        micro_f32<MR, 1>(x, w, out, m0, j, k0, kc, K, N);
    if (j < n0 + nc)
        micro_f32_tail(x, w, out, m0, MR, j, n0 + nc, k0, kc, K, N);
}

void gemm_f32_neon(const float* x, const float* w, float* out, size_t M,
                   size_t K, size_t N) {
    for (size_t n0 = 0; n0 < N; n0 += NC) {
        size_t nc = N - n0 < NC ? N - n0 : NC;
        for (size_t k0 = 0; k0 < K; k0 += KC) {
            size_t kc = K - k0 < KC ? K - k0 : KC;
            size_t m0 = 0;
            for (; m0 + 4 <= M; m0 += 4)
                row_block_f32<4>(x, w, out, m0, n0, nc, k0, kc, K, N);
            switch (M - m0) {
                case 3: row_block_f32<3>(x, w, out, m0, n0, nc, k0, kc, K, N); break;
                case 2: row_block_f32<2>(x, w, out, m0, n0, nc, k0, kc, K, N); break;
                case 1: row_block_f32<1>(x, w, out, m0, n0, nc, k0, kc, K, N); break;
                default: break;
            }
        }
    }
}

void gemm_i16i32_neon(const int16_t* x16, const int16_t* w16, int32_t* acc,
                      size_t M, size_t Kp, size_t N) {
    constexpr size_t MB = 64;
    for (size_t m0 = 0; m0 < M; m0 += MB) {
        size_t mb = M - m0 < MB ? M - m0 : MB;
        for (size_t n = 0; n < N; ++n) {
            const int16_t* wr = w16 + n * Kp;
            for (size_t m = m0; m < m0 + mb; ++m) {
                const int16_t* xr = x16 + m * Kp;
                int32x4_t a0 = vdupq_n_s32(0);
                int32x4_t a1 = vdupq_n_s32(0);
                for (size_t k = 0; k + 8 <= Kp; k += 8) {
                    int16x8_t xv = vld1q_s16(xr + k);
                    int16x8_t wv = vld1q_s16(wr + k);
                    a0 = vmlal_s16(a0, vget_low_s16(xv), vget_low_s16(wv));
                    a1 = vmlal_high_s16(a1, xv, wv);
                }
                acc[m * N + n] = vaddvq_s32(vaddq_s32(a0, a1));
            }
        }
    }
}

void quantize_u8_neon(const float* x, uint8_t* q, size_t n, float scale,
                      int32_t zp) {
    const float32x4_t vs = vdupq_n_f32(scale);
    const float32x4_t lo = vdupq_n_f32(-512.0f);
    const float32x4_t hi = vdupq_n_f32(512.0f);
    const int32x4_t vzp = vdupq_n_s32(zp);
    const int32x4_t zero = vdupq_n_s32(0);
    const int32x4_t maxq = vdupq_n_s32(255);
    size_t i = 0;
    int32_t tmp[4];
    for (; i + 4 <= n; i += 4) {
        float32x4_t v = vdivq_f32(vld1q_f32(x + i), vs);
        v = vrndnq_f32(v);  // round half to even
        // NaN-safe clamp: vmaxq returns the non-NaN operand's lane here
        // only when NaN is not involved, so handle NaN via compare.
        uint32x4_t ok = vcgtq_f32(v, lo);
        v = vbslq_f32(ok, v, lo);
        v = vminq_f32(v, hi);
        int32x4_t iv = vaddq_s32(vcvtq_s32_f32(v), vzp);
        iv = vminq_s32(vmaxq_s32(iv, zero), maxq);
        vst1q_s32(tmp, iv);
        for (int j = 0; j < 4; ++j) q[i + j] = static_cast<uint8_t>(tmp[j]);
    }
    for (; i < n; ++i) {
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

const KernelTable kNeonKernels = {
    gemm_f32_neon,
    gemm_i16i32_neon,
    quantize_u8_neon,
};

}  // namespace logsem

#endif  // __aarch64__
