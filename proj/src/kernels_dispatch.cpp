#include <atomic>

#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"

namespace logsem {

namespace {

bool avx2_available() {
#if defined(LOGSEM_BUILD_AVX2) && defined(__x86_64__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

bool neon_available() {
#if defined(LOGSEM_BUILD_NEON) && defined(__aarch64__)
    return true;
#else
    return false;
#endif
}

KernelBackend detect() {
    if (avx2_available()) return KernelBackend::Avx2;
    if (neon_available()) return KernelBackend::Neon;
    return KernelBackend::Scalar;
}

std::atomic<int> g_forced{-1};

}  // namespace

const char* backend_name(KernelBackend b) {
    switch (b) {
        case KernelBackend::Scalar: return "scalar";
        case KernelBackend::Avx2: return "avx2";
        case KernelBackend::Neon: return "neon";
    }
    return "?";
}

std::vector<KernelBackend> available_backends() {
    std::vector<KernelBackend> v{KernelBackend::Scalar};
    if (avx2_available()) v.push_back(KernelBackend::Avx2);
    if (neon_available()) v.push_back(KernelBackend::Neon);
    return v;
}

KernelBackend active_backend() {
    int f = g_forced.load(std::memory_order_relaxed);
    if (f >= 0) return static_cast<KernelBackend>(f);
    static const KernelBackend picked = detect();
    return picked;
}

void force_backend(KernelBackend b) {
    bool ok = (b == KernelBackend::Scalar) ||
              (b == KernelBackend::Avx2 && avx2_available()) ||
              (b == KernelBackend::Neon && neon_available());
    if (!ok)
        throw ContractError(std::string("kernel backend unavailable: ") +
                            backend_name(b));
    g_forced.store(static_cast<int>(b), std::memory_order_relaxed);
}

void clear_forced_backend() { g_forced.store(-1, std::memory_order_relaxed); }

const KernelTable& kernels_for(KernelBackend b) {
    switch (b) {
        case KernelBackend::Scalar:
            return kScalarKernels;
        case KernelBackend::Avx2:
#if defined(LOGSEM_BUILD_AVX2) && defined(__x86_64__)
            if (avx2_available()) return kAvx2Kernels;
#endif
            break;
        case KernelBackend::Neon:
#if defined(LOGSEM_BUILD_NEON) && defined(__aarch64__)
            if (neon_available()) return kNeonKernels;
#endif
            break;
    }
    throw ContractError(std::string("kernel backend unavailable: ") +
                        backend_name(b));
}

const KernelTable& kernels() { return kernels_for(active_backend()); }

}  // namespace logsem
