#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "logsem/container.hpp"
#include "logsem/mat.hpp"

namespace logsem {

struct Vocab {
    std::vector<std::string> tokens;
    std::unordered_map<std::string, int32_t> index;
    int32_t pad_id = -1, unk_id = -1, cls_id = -1, sep_id = -1;

    static Vocab from_tokens(std::vector<std::string> tokens);
    static Vocab load(const std::string& path);  // one token per line, id = line
    void save(const std::string& path) const;
    size_t size() const { return tokens.size(); }
};

struct EncoderConfig {
    int num_layers = 4;
    int hidden_size = 312;
    int num_heads = 12;
    int intermediate_size = 1248;
    int max_seq_len = 128;
    int vocab_size = 0;

    void validate() const;  // throws ConfigError
    int head_dim() const { return hidden_size / num_heads; }
};

struct TokenSequence {
    std::vector<int32_t> ids;
    std::vector<uint8_t> attention;  // 1 = attend (0 only for explicit pads)
    std::vector<uint8_t> poolable;   // 1 = counts toward mean pooling
};

// [CLS] + greedy longest-match WordPiece + [SEP]; unknown words become
// [UNK]; tail-truncated to max_seq_len with [SEP] kept last.
TokenSequence wordpiece_tokenize(const std::string& text, const Vocab& vocab,
                                 int max_seq_len);

// One INT8 linear layer as used by the mixed-precision forward path.
// Produced by the quantization module; w16/colsum are derived caches.
struct Int8Linear {
    size_t in = 0, out = 0;
    std::vector<int8_t> w_q;      // [out, in] row-major
    std::vector<int16_t> w16;     // widened rows, padded to pad16(in)
    std::vector<int32_t> colsum;  // per-out-row sum of w_q
    std::vector<float> bias;
    float w_scale = 1.0f;
    float a_scale = 1.0f;
    int32_t a_zp = 0;

    void build_cache();  // fills w16 + colsum from w_q
};

struct EncoderLayerWeights {
    // Linear weights kept [in, out] in memory (kernel layout); serialized
    // [out, in].
    FloatMat wq, wk, wv, wo;
    std::vector<float> bq, bk, bv, bo;
    FloatMat ffn_in;   // H x I
    FloatMat ffn_out;  // I x H
    std::vector<float> ffn_in_b, ffn_out_b;
    std::vector<float> ln1_g, ln1_b;  // after attention residual
    std::vector<float> ln2_g, ln2_b;  // after FFN residual
};

struct EncoderWeights {
    EncoderConfig cfg;
    FloatMat tok_emb;  // vocab x H
    FloatMat pos_emb;  // max_seq x H
    std::vector<float> emb_ln_g, emb_ln_b;
    std::vector<EncoderLayerWeights> layers;
    // Mixed precision state: linear-layer name -> INT8 replacement.  Empty
    // for a plain FP32 encoder; when a name is present its FP32 matrix is
    // dropped and the integer path runs instead.
    std::map<std::string, Int8Linear> qlayers;

    void verify_shapes() const;  // throws ContractError on mismatch
};

// Canonical linear-layer names: "layers.<i>.attn.wq|wk|wv|wo",
// "layers.<i>.ffn.in", "layers.<i>.ffn.out".
std::vector<std::string> linear_layer_names(const EncoderConfig& cfg);
size_t linear_param_count(const EncoderConfig& cfg, const std::string& name);

// Optional probe points for tests and calibration.
struct ForwardTrace {
    // attention probabilities of the first sequence in the batch:
    // [layer][head] -> (seq x seq) row-stochastic matrix
    std::vector<std::vector<FloatMat>> attn;
};
using ActivationHook =
    std::function<void(const std::string& layer_name, const float* rows,
                       size_t row_count, size_t width)>;

// Batched forward: returns per-sequence hidden states (seq_i x H).  Results
// are bitwise independent of how sequences are grouped into batches.
std::vector<FloatMat> encoder_forward_batch(const EncoderWeights& w,
                                            const std::vector<TokenSequence>& batch,
                                            ForwardTrace* trace = nullptr,
                                            const ActivationHook* hook = nullptr);
FloatMat encoder_forward(const EncoderWeights& w, const TokenSequence& tokens,
                         ForwardTrace* trace = nullptr);

// Mean over poolable positions; none poolable -> position 0 ([CLS]).
std::vector<float> mean_pool(const FloatMat& hidden,
                             const std::vector<uint8_t>& poolable);

struct EmbedOptions {
    int batch_size = 64;
    int threads = 1;
};

// tokenize + forward + pool for a list of preprocessed texts -> N x H.
FloatMat embed_events(const EncoderWeights& w, const Vocab& vocab,
                      const std::vector<std::string>& texts,
                      const EmbedOptions& opts = {});

EncoderWeights random_init(const EncoderConfig& cfg, uint64_t seed);

// Container + "<path>.json" config sidecar; quantized layers serialize as
// INT8 tensors (their scales travel in the quantization manifest, handled
// by the quantization module).
void save_weights(const std::string& path, const EncoderWeights& w);
EncoderWeights load_weights(const std::string& path);

// Low-level (de)serialization shared with the quantization module.
struct LinearQuantInfo {
    float w_scale = 1.0f;
    float a_scale = 1.0f;
    int32_t a_zp = 0;
};
std::vector<Tensor> weights_to_tensors(const EncoderWeights& w);
EncoderWeights weights_from_tensors(
    const EncoderConfig& cfg, const std::vector<Tensor>& tensors,
    const std::map<std::string, LinearQuantInfo>* qinfo);
std::string encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const std::string& text);

// Embedding-matrix export: single rank-2 FP32 tensor named "embeddings".
void save_embedding_matrix(const std::string& path, const FloatMat& m);
FloatMat load_embedding_matrix(const std::string& path);

}  // namespace logsem
