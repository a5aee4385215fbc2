#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "logsem/kernels.hpp"

// AVX2+FMA kernels.  This translation unit is compiled with -mavx2 -mfma and
// must only be reached through dispatch on machines that support both.
//
// gemm_f32 accumulates each output element in ascending-k order, like the
// scalar reference, but uses fused multiply-add, so results can differ from
// scalar by rounding error.  Results never depend on M/N tiling: the fma
// chain per element is the same whatever tile the element lands in.

namespace logsem {

namespace {

constexpr size_t KC = 256;   // k block: W panel rows kept hot
constexpr size_t NC = 1024;  // n block: W panel is at most KC*NC*4 = 1 MiB

template <int MR, int NV>
inline void micro_f32(const float* x, const float* w, float* out, size_t m0,
                      size_t j, size_t k0, size_t kc, size_t K, size_t N) {
    __m256 acc[MR][NV];
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v)
            acc[r][v] = _mm256_loadu_ps(out + (m0 + r) * N + j + 8 * v);
    for (size_t k = k0; k < k0 + kc; ++k) {
        const float* wr = w + k * N + j;
        __m256 wv[NV];
        for (int v = 0; v < NV; ++v) wv[v] = _mm256_loadu_ps(wr + 8 * v);
        for (int r = 0; r < MR; ++r) {
            __m256 xb = _mm256_broadcast_ss(x + (m0 + r) * K + k);
            for (int v = 0; v < NV; ++v)
                acc[r][v] = _mm256_fmadd_ps(xb, wv[v], acc[r][v]);
        }
    }
    for (int r = 0; r < MR; ++r)
        for (int v = 0; v < NV; ++v)
            _mm256_storeu_ps(out + (m0 + r) * N + j + 8 * v, acc[r][v]);
}

// Tail columns (fewer than 8): scalar fma, same ascending-k order and the
// same single-rounding contraction as the vector path.
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
    for (; j + 16 <= n0 + nc; j += 16)
        micro_f32<MR, 2>(x, w, out, m0, j, k0, kc, K, N);
    for (; j + 8 <= n0 + nc; j += 8)
        micro_f32<MR, 1>(x, w, out, m0, j, k0, kc, K, N);
    if (j < n0 + nc)
        micro_f32_tail(x, w, out, m0, MR, j, n0 + nc, k0, kc, K, N);
}

void gemm_f32_avx2(const float* x, const float* w, float* out, size_t M,
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

inline int32_t hsum_i32(__m256i v) {
    __m128i lo = _mm256_castsi256_si128(v);
    __m128i hi = _mm256_extracti128_si256(v, 1);
    __m128i s = _mm_add_epi32(lo, hi);
    s = _mm_add_epi32(s, _mm_shuffle_epi32(s, _MM_SHUFFLE(1, 0, 3, 2)));
    s = _mm_add_epi32(s, _mm_shuffle_epi32(s, _MM_SHUFFLE(2, 3, 0, 1)));
    return _mm_cvtsi128_si32(s);
}

void gemm_i16i32_avx2(const int16_t* x16, const int16_t* w16, int32_t* acc,
                      size_t M, size_t Kp, size_t N) {
    constexpr size_t MB = 64;  // x block stays in L2 while W streams once
    for (size_t m0 = 0; m0 < M; m0 += MB) {
        size_t mb = M - m0 < MB ? M - m0 : MB;
        for (size_t n = 0; n < N; ++n) {
            const int16_t* wr = w16 + n * Kp;
            for (size_t m = m0; m < m0 + mb; ++m) {
                const int16_t* xr = x16 + m * Kp;
                __m256i a0 = _mm256_setzero_si256();
                __m256i a1 = _mm256_setzero_si256();
                size_t k = 0;
                for (; k + 32 <= Kp; k += 32) {
                    __m256i xv0 = _mm256_loadu_si256((const __m256i*)(xr + k));
                    __m256i wv0 = _mm256_loadu_si256((const __m256i*)(wr + k));
                    a0 = _mm256_add_epi32(a0, _mm256_madd_epi16(xv0, wv0));
                    __m256i xv1 = _mm256_loadu_si256((const __m256i*)(xr + k + 16));
                    __m256i wv1 = _mm256_loadu_si256((const __m256i*)(wr + k + 16));
                    a1 = _mm256_add_epi32(a1, _mm256_madd_epi16(xv1, wv1));
                }
                if (k + 16 <= Kp) {
                    __m256i xv = _mm256_loadu_si256((const __m256i*)(xr + k));
                    __m256i wv = _mm256_loadu_si256((const __m256i*)(wr + k));
                    a0 = _mm256_add_epi32(a0, _mm256_madd_epi16(xv, wv));
                }
                acc[m * N + n] = hsum_i32(_mm256_add_epi32(a0, a1));
            }
        }
    }
}

void quantize_u8_avx2(const float* x, uint8_t* q, size_t n, float scale,
                      int32_t zp) {
    const __m256 vs = _mm256_set1_ps(scale);
    const __m256 lo = _mm256_set1_ps(-512.0f);
    const __m256 hi = _mm256_set1_ps(512.0f);
    const __m256i vzp = _mm256_set1_epi32(zp);
    const __m256i zero = _mm256_setzero_si256();
    const __m256i maxq = _mm256_set1_epi32(255);
    size_t i = 0;
    alignas(32) int32_t tmp[8];
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_div_ps(_mm256_loadu_ps(x + i), vs);
        v = _mm256_round_ps(v, _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
        v = _mm256_max_ps(v, lo);  // second operand wins on NaN -> -512
        v = _mm256_min_ps(v, hi);
        __m256i iv = _mm256_add_epi32(_mm256_cvtps_epi32(v), vzp);
        iv = _mm256_min_epi32(_mm256_max_epi32(iv, zero), maxq);
        _mm256_store_si256((__m256i*)tmp, iv);
        for (int j = 0; j < 8; ++j) q[i + j] = static_cast<uint8_t>(tmp[j]);
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

const KernelTable kAvx2Kernels = {
    gemm_f32_avx2,
    gemm_i16i32_avx2,
    quantize_u8_avx2,
};

}  // namespace logsem
