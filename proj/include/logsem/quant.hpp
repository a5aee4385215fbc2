#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "logsem/encoder.hpp"

namespace logsem {

struct CalibrationSet {
    std::string system_id;
    std::vector<std::string> texts;  // preprocessed, unlabeled
};

// Streaming activation statistics with a fixed-bin histogram.  Usage:
// observe() everything (pass 1), prepare_hist() with the final range,
// observe_hist() everything again (pass 2).
struct ActivationStats {
    static constexpr size_t kBins = 2048;

    double min_v = 0.0, max_v = 0.0;
    double mean = 0.0, m2 = 0.0;  // Welford accumulators
    uint64_t count = 0;
    std::vector<uint64_t> hist;
    double hist_lo = 0.0, hist_hi = 0.0;

    void observe(const float* x, size_t n);
    void prepare_hist(double lo, double hi);
    void observe_hist(const float* x, size_t n);
    // Associative combine of partition stats; histograms are re-binned over
    // the union range by bin centers (mass-preserving).
    void merge(const ActivationStats& o);
    double variance() const { return count ? m2 / static_cast<double>(count) : 0.0; }
};

enum class QuantScheme : uint8_t {
    SymmetricInt8Weights = 0,
    AsymmetricUint8Activations = 1,
};

struct QuantParams {
    float scale = 1.0f;
    int32_t zero_point = 0;
    QuantScheme scheme = QuantScheme::AsymmetricUint8Activations;
};

struct QuantPolicy {
    // percent clipped from EACH tail; 0 disables the histogram estimate and
    // uses the exact min/max
    double clip_percentile = 0.1;
};

struct QuantizedEncoder {
    EncoderWeights enc;  // qlayers populated for the selection
    std::vector<std::string> selection;
    double clip_percentile = 0.1;
};

// Runs the FP32 forward over every calibration event and aggregates input
// stats for every linear layer (two passes: moments, then histograms).
std::map<std::string, ActivationStats> collect_stats(
    const EncoderWeights& enc, const Vocab& vocab, const CalibrationSet& calib,
    int batch_size = 64);

// Asymmetric uint8 activation params from stats.  The clipped range is
// widened to include zero so every in-range value stays representable.
// Degenerate (hi == lo) range -> NumericError.
QuantParams activation_quant_params(const ActivationStats& stats,
                                    const QuantPolicy& policy);
// Symmetric int8 weight params; all-zero weights -> NumericError.
QuantParams weight_quant_params(const float* w, size_t n);

// Round-half-even affine quantization helpers (scalar, exactness matters
// more than speed here -- the hot path lives in the kernels).
uint8_t quantize_value_u8(float x, const QuantParams& p);
float dequantize_value_u8(uint8_t q, const QuantParams& p);
int8_t quantize_value_s8(float x, float scale);

// FFN layers first (largest parameter count, deepest block first), then
// attention projections; picks ceil(fraction * total_linear_count) names.
std::vector<std::string> select_layers(const EncoderConfig& cfg, double fraction);

// Quantizes the selected layers; layers whose activation range is
// degenerate are skipped (left FP32) and dropped from the final selection.
QuantizedEncoder quantize_encoder(const EncoderWeights& enc,
                                  const std::map<std::string, ActivationStats>& stats,
                                  const std::vector<std::string>& selection,
                                  const QuantPolicy& policy);

// Mixed-precision forward/embedding (the engine lives in the encoder; the
// INT8 path activates wherever enc.qlayers has an entry).
FloatMat quantized_forward(const QuantizedEncoder& q, const TokenSequence& tokens);
FloatMat quantized_embed_events(const QuantizedEncoder& q, const Vocab& vocab,
                                const std::vector<std::string>& texts,
                                const EmbedOptions& opts = {});

// Container + config sidecar + "<path>.quant.json" manifest:
// {"selection":[names], "per_layer":{name:{"w_scale","a_scale","a_zp"}},
//  "clip_percentile":..}
void save_quantized(const std::string& path, const QuantizedEncoder& q);
QuantizedEncoder load_quantized(const std::string& path);

}  // namespace logsem
