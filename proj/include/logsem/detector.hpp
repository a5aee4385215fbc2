#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logsem/mat.hpp"

namespace logsem {

// Event-level anomaly detection: the embedding sequence is split into
// non-overlapping windows of size m (the tail zero-padded, mask=false) and a
// vanilla RNN emits one sigmoid probability per time step.
struct WindowSpec {
    size_t window_size = 64;  // m >= 1
};

struct Window {
    FloatMat x;                 // m x d; padded rows are zero
    std::vector<float> y;       // m labels in {0,1}; ignored where masked out
    std::vector<uint8_t> mask;  // m; 1 = real event
    size_t start = 0;           // original index of row 0
};

// Recurrence: h_t = tanh(W_xh x_t + W_hh h_{t-1} + b_h), h_0 = 0;
// probability_t = sigmoid(w_ro . h_t + b_ro).  Weight matrices are stored
// [in, out] to match the kernels; serialized transposed as [out, in].
struct RnnParams {
    FloatMat w_xh;             // d x h
    FloatMat w_hh;             // h x h
    std::vector<float> b_h;    // h
    std::vector<float> w_ro;   // h
    float b_ro = 0.0f;

    size_t input_dim() const { return w_xh.rows; }
    size_t hidden_dim() const { return w_xh.cols; }
    void verify() const;  // throws ContractError on shape inconsistency
};

struct PredictionSeq {
    std::vector<float> prob;      // per time step, masked ones included
    std::vector<uint8_t> decision;
};

struct DetectorConfig {
    size_t window_size = 64;
    size_t hidden = 128;
    double learning_rate = 1e-3;
    int epochs = 50;
    double threshold = 0.5;
    double pos_weight = 1.0;  // >1 upweights anomalies; 1 = plain BCE
    uint64_t seed = 42;
    int batch_size = 0;  // windows per update; 0 = full batch

    void validate() const;  // throws ConfigError
};

struct DetectorTrainResult {
    RnnParams params;
    std::vector<double> loss_trace;  // epochs + 1 entries; front = initial
};

struct EventPredictions {
    std::vector<float> prob;       // length N (mask-filtered)
    std::vector<uint8_t> decision;  // prob >= threshold
};

std::vector<Window> partition_windows(const FloatMat& embeddings,
                                      const std::vector<uint8_t>& labels,
                                      const WindowSpec& spec);

RnnParams init_detector(size_t input_dim, size_t hidden, uint64_t seed);

PredictionSeq rnn_forward(const RnnParams& p, const Window& w,
                          double threshold = 0.5);

// Mean binary cross-entropy over unmasked positions (stable log-sum-exp
// form); pos_weight scales the positive-class term.
double detector_loss(const RnnParams& p, const std::vector<Window>& windows,
                     double pos_weight = 1.0);

struct RnnGrads {
    FloatMat d_w_xh;  // d x h
    FloatMat d_w_hh;  // h x h
    std::vector<float> d_b_h;
    std::vector<float> d_w_ro;
    float d_b_ro = 0.0f;
};

// Full analytic backpropagation through time; gradients of the mean BCE.
RnnGrads detector_grad(const RnnParams& p, const std::vector<Window>& windows,
                       double pos_weight = 1.0);

// Plain gradient descent; deterministic under fixed seed; throws
// NumericError naming the epoch on non-finite loss or parameters.
DetectorTrainResult train_detector(const std::vector<Window>& windows,
                                   size_t input_dim,
                                   const DetectorConfig& cfg);

// Mask-filtered, aligned to original indices; output length = event count.
EventPredictions predict_events(const RnnParams& p,
                                const std::vector<Window>& windows,
                                double threshold, size_t max_threads = 1);

// Container tensors "detector.w_xh" [h,d], "detector.w_hh" [h,h] (both
// transposed on save/load), "detector.b_h", "detector.w_ro", "detector.b_ro"
// + "<path>.json" sidecar {window_size, hidden, input_dim, threshold}.
void save_detector(const std::string& path, const RnnParams& p,
                   const DetectorConfig& cfg);
RnnParams load_detector(const std::string& path, DetectorConfig& cfg_out);

// predictions CSV: "index,probability,decision,label"
void write_predictions_csv(const std::string& path, const EventPredictions& pred,
                           const std::vector<uint8_t>& labels);

}  // namespace logsem
