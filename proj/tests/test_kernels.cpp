#include <doctest.h>

#include <cmath>
#include <cstring>
#include <tuple>
#include <vector>

#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"
#include "logsem/rng.hpp"

using namespace logsem;

namespace {

std::vector<float> random_floats(Rng& rng, size_t n, double scale = 1.0) {
    std::vector<float> v(n);
    for (float& x : v) x = static_cast<float>(rng.normal(0.0, scale));
    return v;
}

// independent double-precision reference
std::vector<double> gemm_oracle(const std::vector<float>& x,
                                const std::vector<float>& w, size_t M, size_t K,
                                size_t N) {
    std::vector<double> out(M * N, 0.0);
    for (size_t m = 0; m < M; ++m)
        for (size_t k = 0; k < K; ++k) {
            double xv = x[m * K + k];
            for (size_t n = 0; n < N; ++n)
                out[m * N + n] += xv * static_cast<double>(w[k * N + n]);
        }
    return out;
}

bool has_backend(KernelBackend b) {
    for (KernelBackend a : available_backends())
        if (a == b) return true;
    return false;
}

}  // namespace

TEST_CASE("fill_bias broadcasts and zero-fills") {
    std::vector<float> out(6, -1.0f);
    std::vector<float> bias{1.0f, 2.0f, 3.0f};
    fill_bias(out.data(), bias.data(), 2, 3);
    CHECK(out == std::vector<float>{1, 2, 3, 1, 2, 3});
    fill_bias(out.data(), nullptr, 2, 3);
    CHECK(out == std::vector<float>(6, 0.0f));
}

TEST_CASE("scalar gemm_f32 matches a double oracle and accumulates") {
    Rng rng(7);
    const std::tuple<size_t, size_t, size_t> shapes[] = {
        {1, 1, 1}, {1, 16, 8}, {3, 5, 7}, {4, 64, 33}, {17, 100, 48}};
    for (auto [M, K, N] : shapes) {
        std::vector<float> x = random_floats(rng, M * K);
        std::vector<float> w = random_floats(rng, K * N);
        std::vector<float> out(M * N, 0.5f);  // nonzero start: gemm must add
        kernels_for(KernelBackend::Scalar).gemm_f32(x.data(), w.data(),
                                                    out.data(), M, K, N);
        std::vector<double> ref = gemm_oracle(x, w, M, K, N);
        for (size_t i = 0; i < out.size(); ++i)
            CHECK(out[i] ==
                  doctest::Approx(ref[i] + 0.5).epsilon(1e-4).scale(1.0));
    }
}

TEST_CASE("simd gemm_f32 agrees with scalar within fma tolerance") {
    for (KernelBackend b : {KernelBackend::Avx2, KernelBackend::Neon}) {
        if (!has_backend(b)) continue;
        Rng rng(11);
        for (size_t M : {size_t(1), size_t(2), size_t(3), size_t(4), size_t(5),
                         size_t(17)})
            for (size_t N : {size_t(1), size_t(7), size_t(8), size_t(15),
                             size_t(16), size_t(17), size_t(33), size_t(48)})
                for (size_t K : {size_t(1), size_t(5), size_t(16), size_t(255),
                                 size_t(257)}) {
                    std::vector<float> x = random_floats(rng, M * K);
                    std::vector<float> w = random_floats(rng, K * N);
                    std::vector<float> a(M * N, 0.0f), s(M * N, 0.0f);
                    kernels_for(b).gemm_f32(x.data(), w.data(), a.data(), M, K, N);
                    kernels_for(KernelBackend::Scalar)
                        .gemm_f32(x.data(), w.data(), s.data(), M, K, N);
                    double worst = 0.0;
                    for (size_t i = 0; i < a.size(); ++i) {
                        double denom = std::max(1.0, std::abs(double(s[i])));
                        worst = std::max(
                            worst, std::abs(double(a[i]) - double(s[i])) / denom);
                    }
                    CHECK(worst < 1e-5);
                }
    }
}

TEST_CASE("gemm_f32 per backend is bitwise independent of row batching") {
    for (KernelBackend b : available_backends()) {
        Rng rng(13);
        size_t M = 9, K = 300, N = 41;
        std::vector<float> x = random_floats(rng, M * K);
        std::vector<float> w = random_floats(rng, K * N);
        std::vector<float> whole(M * N, 0.0f), rows(M * N, 0.0f);
        kernels_for(b).gemm_f32(x.data(), w.data(), whole.data(), M, K, N);
        for (size_t m = 0; m < M; ++m)
            kernels_for(b).gemm_f32(x.data() + m * K, w.data(),
                                    rows.data() + m * N, 1, K, N);
        CHECK(std::memcmp(whole.data(), rows.data(), whole.size() * 4) == 0);
    }
}

TEST_CASE("gemm_i16i32 is exact and bitwise identical across backends") {
    Rng rng(17);
    const std::tuple<size_t, size_t, size_t> shapes[] = {
        {1, 16, 1}, {2, 32, 5}, {3, 48, 17}, {5, 320, 40}};
    for (auto [M, K, N] : shapes) {
        size_t Kp = pad16(K);
        std::vector<int16_t> x16(M * Kp, 0), w16(N * Kp, 0);
        for (size_t m = 0; m < M; ++m)
            for (size_t k = 0; k < K; ++k)
                x16[m * Kp + k] = static_cast<int16_t>(
                    static_cast<int64_t>(rng.uniform_index(1024)) - 512);
        for (size_t n = 0; n < N; ++n)
            for (size_t k = 0; k < K; ++k)
                w16[n * Kp + k] = static_cast<int16_t>(
                    static_cast<int64_t>(rng.uniform_index(255)) - 127);

        std::vector<int32_t> ref(M * N, 0);
        for (size_t m = 0; m < M; ++m)
            for (size_t n = 0; n < N; ++n) {
                int64_t acc = 0;
                for (size_t k = 0; k < Kp; ++k)
                    acc += int32_t(x16[m * Kp + k]) * int32_t(w16[n * Kp + k]);
                REQUIRE(acc <= INT32_MAX);
                REQUIRE(acc >= INT32_MIN);
                ref[m * N + n] = static_cast<int32_t>(acc);
            }
        for (KernelBackend b : available_backends()) {
            std::vector<int32_t> acc(M * N, -7);
            kernels_for(b).gemm_i16i32(x16.data(), w16.data(), acc.data(), M,
                                       Kp, N);
            CHECK(acc == ref);
        }
    }
}

TEST_CASE("quantize_u8 is bitwise identical across backends and clamps") {
    Rng rng(23);
    std::vector<float> x;
    for (int i = 0; i < 300; ++i)
        x.push_back(static_cast<float>(rng.normal(0.0, 30.0)));
    // edge values: half-way points, NaN, infinities, huge magnitudes
    for (float v : {0.5f, -0.5f, 1.5f, 2.5f, -2.5f, 1e30f, -1e30f,
                    std::nanf(""), INFINITY, -INFINITY, 0.0f})
        x.push_back(v);
    float scale = 0.37f;
    int32_t zp = 131;
    std::vector<uint8_t> ref(x.size());
    kernels_for(KernelBackend::Scalar)
        .quantize_u8(x.data(), ref.data(), x.size(), scale, zp);
    for (uint8_t q : ref) CHECK(q <= 255);
    for (KernelBackend b : available_backends()) {
        std::vector<uint8_t> q(x.size());
        kernels_for(b).quantize_u8(x.data(), q.data(), x.size(), scale, zp);
        CHECK(q == ref);
    }
}

TEST_CASE("quantize_u8 rounds half to even") {
    // scale 1, zp 10: x=0.5 -> 10, x=1.5 -> 12, x=2.5 -> 12, x=-0.5 -> 10
    std::vector<float> x{0.5f, 1.5f, 2.5f, -0.5f, -1.5f};
    std::vector<uint8_t> q(x.size());
    quantize_u8(x.data(), q.data(), x.size(), 1.0f, 10);
    CHECK(q == std::vector<uint8_t>{10, 12, 12, 10, 8});
}

TEST_CASE("widen helpers pad with zeros") {
    std::vector<uint8_t> u{1, 2, 255};
    std::vector<int16_t> x16(16, -1);
    widen_u8_i16(u.data(), x16.data(), 3, 16);
    CHECK(x16[0] == 1);
    CHECK(x16[2] == 255);
    for (size_t i = 3; i < 16; ++i) CHECK(x16[i] == 0);

    std::vector<int8_t> s{-128, 0, 127};
    std::vector<int16_t> w16(16, -1);
    widen_s8_i16(s.data(), w16.data(), 3, 16);
    CHECK(w16[0] == -128);
    CHECK(w16[2] == 127);
    for (size_t i = 3; i < 16; ++i) CHECK(w16[i] == 0);
}

TEST_CASE("backend forcing is honored and validated") {
    CHECK(has_backend(KernelBackend::Scalar));
    force_backend(KernelBackend::Scalar);
    CHECK(active_backend() == KernelBackend::Scalar);
    clear_forced_backend();
#if !defined(__aarch64__)
    CHECK_THROWS_AS(force_backend(KernelBackend::Neon), ContractError);
    clear_forced_backend();
#endif
}
