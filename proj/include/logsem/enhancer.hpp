#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logsem/mat.hpp"

namespace logsem {

// Residual low-rank enhancer: y = pad(h) + B(A(h)), with A: r x d_S and
// B: d_T x r (mathematical shapes; stored row-major exactly like that).
// pad() zero-extends d_S -> d_T and is the identity when d_S == d_T.
struct EnhancerParams {
    FloatMat A;  // r x d_S
    FloatMat B;  // d_T x r
    size_t r = 0, d_s = 0, d_t = 0;
    std::vector<std::string> trained_on;

    void verify() const;  // throws ContractError on shape inconsistency
};

struct EmbeddingPairs {
    FloatMat h_s;  // n x d_S
    FloatMat h_t;  // n x d_T
};

struct EnhancerTrainConfig {
    double learning_rate = 1e-3;
    int epochs = 80;
    uint64_t seed = 42;
    int batch_size = 0;  // 0 = one full-batch update per epoch
};

struct EnhancerGrads {
    FloatMat dA;  // r x d_S
    FloatMat dB;  // d_T x r
};

struct EnhancerTrainResult {
    EnhancerParams params;
    std::vector<double> loss_trace;  // epochs + 1 entries; front = initial
};

EnhancerParams init_enhancer(size_t r, size_t d_s, size_t d_t, uint64_t seed);

std::vector<float> enhance(const EnhancerParams& p, const std::vector<float>& h_s);
FloatMat enhance_batch(const EnhancerParams& p, const FloatMat& h_s);

double enhancer_mse(const EnhancerParams& p, const EmbeddingPairs& pairs);
EnhancerGrads enhancer_grad(const EnhancerParams& p, const EmbeddingPairs& pairs);

// Full-batch (or sequential mini-batch) gradient descent against frozen
// teacher embeddings; throws NumericError naming the epoch on divergence.
EnhancerTrainResult train_enhancer(const EmbeddingPairs& pairs, size_t r,
                                   const EnhancerTrainConfig& cfg);

// Container tensors "crosys.A" / "crosys.B" + "<path>.json" manifest
// {r, d_S, d_T, trained_on}.
void save_enhancer(const std::string& path, const EnhancerParams& p);
// expected dims of 0 skip the check; mismatch -> ContractError.
EnhancerParams load_enhancer(const std::string& path, size_t expect_d_s = 0,
                             size_t expect_d_t = 0);

}  // namespace logsem
