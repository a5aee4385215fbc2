#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace logsem {

// Data-parallel primitives with a scalar reference implementation and
// SIMD variants picked at runtime.  Integer kernels are exact, so every
// backend returns bitwise-identical results.  Float kernels accumulate in
// ascending-k order on all backends; SIMD may contract mul+add into FMA,
// so float results agree to rounding error (covered by equivalence tests),
// and each backend on its own is deterministic for a given input.
enum class KernelBackend { Scalar = 0, Avx2 = 1, Neon = 2 };

const char* backend_name(KernelBackend b);
std::vector<KernelBackend> available_backends();
KernelBackend active_backend();
// Test hook: pin the backend (must be available).  Pass Scalar..Neon, or
// call clear_forced_backend() to restore auto-detection.
void force_backend(KernelBackend b);
void clear_forced_backend();

struct KernelTable {
    // out[M x N] += X[M x K] * W[K x N], row-major, f32.
    void (*gemm_f32)(const float* x, const float* w, float* out,
                     size_t M, size_t K, size_t N);
    // acc[M x N] = sum_k x16[m, k] * w16[n, k]; operands are pre-widened
    // to i16 rows padded with zeros to Kp (multiple of 16), exact i32.
    void (*gemm_i16i32)(const int16_t* x16, const int16_t* w16, int32_t* acc,
                        size_t M, size_t Kp, size_t N);
    // q[i] = clamp(round_half_even(x[i] / scale) + zp, 0, 255)
    void (*quantize_u8)(const float* x, uint8_t* q, size_t n,
                        float scale, int32_t zp);
};

const KernelTable& kernels();                    // active table
const KernelTable& kernels_for(KernelBackend b);  // explicit table (tests)

// Convenience wrappers over the active table.
inline void gemm_f32(const float* x, const float* w, float* out,
                     size_t M, size_t K, size_t N) {
    kernels().gemm_f32(x, w, out, M, K, N);
}
inline void gemm_i16i32(const int16_t* x16, const int16_t* w16, int32_t* acc,
                        size_t M, size_t Kp, size_t N) {
    kernels().gemm_i16i32(x16, w16, acc, M, Kp, N);
}
inline void quantize_u8(const float* x, uint8_t* q, size_t n, float scale,
                        int32_t zp) {
    kernels().quantize_u8(x, q, n, scale, zp);
}

// out[m, n] = bias[n] for all m (bias may be null -> zeros).
void fill_bias(float* out, const float* bias, size_t M, size_t N);

// Widen a u8 row into an i16 row padded with zeros to length kp.
void widen_u8_i16(const uint8_t* q, int16_t* x16, size_t k, size_t kp);
// Same for s8 weights.
void widen_s8_i16(const int8_t* q, int16_t* w16, size_t k, size_t kp);

inline size_t pad16(size_t k) { return (k + 15) & ~size_t(15); }

// Table entries per backend, defined in their own translation units.
extern const KernelTable kScalarKernels;
#ifdef __x86_64__
extern const KernelTable kAvx2Kernels;  // only valid if built with AVX2
#endif
#if defined(__aarch64__)
extern const KernelTable kNeonKernels;
#endif

}  // namespace logsem
