#include "logsem/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "logsem/drain.hpp"
#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"
#include "logsem/parallel.hpp"
#include "logsem/rng.hpp"

namespace logsem {

using nlohmann::json;

// ---------------------------------------------------------------- vocab --

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
    Vocab v;
    v.tokens = std::move(tokens);
    for (size_t i = 0; i < v.tokens.size(); ++i) {
        if (v.index.count(v.tokens[i]))
            throw ConfigError("vocab: duplicate token '" + v.tokens[i] + "'");
        v.index[v.tokens[i]] = static_cast<int32_t>(i);
    }
    auto need = [&](const char* t) {
        auto it = v.index.find(t);
        if (it == v.index.end())
            throw ConfigError(std::string("vocab: missing special token ") + t);
        return it->second;
    };
    v.pad_id = need("[PAD]");
    v.unk_id = need("[UNK]");
    v.cls_id = need("[CLS]");
    v.sep_id = need("[SEP]");
    return v;
}

Vocab Vocab::load(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open vocab: " + path);
    std::vector<std::string> tokens;
    std::string line;
    while (std::getline(is, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (!line.empty()) tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

void Vocab::save(const std::string& path) const {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write vocab: " + path);
    for (const std::string& t : tokens) os << t << '\n';
}

// --------------------------------------------------------------- config --

void EncoderConfig::validate() const {
    if (num_layers < 1) throw ConfigError("encoder: num_layers must be >= 1");
    if (hidden_size < 1) throw ConfigError("encoder: hidden_size must be >= 1");
    if (num_heads < 1) throw ConfigError("encoder: num_heads must be >= 1");
    if (hidden_size % num_heads != 0)
        throw ConfigError("encoder: hidden_size must be divisible by num_heads");
    if (intermediate_size < 1)
        throw ConfigError("encoder: intermediate_size must be >= 1");
    if (max_seq_len < 2) throw ConfigError("encoder: max_seq_len must be >= 2");
    if (vocab_size < 4) throw ConfigError("encoder: vocab_size must cover specials");
}

std::string encoder_config_to_json(const EncoderConfig& cfg) {
    json j;
    j["num_layers"] = cfg.num_layers;
    j["hidden_size"] = cfg.hidden_size;
    j["num_heads"] = cfg.num_heads;
    j["intermediate_size"] = cfg.intermediate_size;
    j["max_seq_len"] = cfg.max_seq_len;
    j["vocab_size"] = cfg.vocab_size;
    return j.dump(2);
}

EncoderConfig encoder_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("encoder config json: ") + e.what());
    }
    EncoderConfig cfg;
    cfg.num_layers = j.at("num_layers").get<int>();
    cfg.hidden_size = j.at("hidden_size").get<int>();
    cfg.num_heads = j.at("num_heads").get<int>();
    cfg.intermediate_size = j.at("intermediate_size").get<int>();
    cfg.max_seq_len = j.at("max_seq_len").get<int>();
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.validate();
    return cfg;
}

// ------------------------------------------------------------- tokenize --

TokenSequence wordpiece_tokenize(const std::string& text, const Vocab& vocab,
                                 int max_seq_len) {
    if (max_seq_len < 2) throw ConfigError("wordpiece: max_seq_len must be >= 2");
    std::vector<int32_t> pieces;
    for (const std::string& word : tokenize_ws(text)) {
        std::vector<int32_t> wp;
        bool ok = true;
        size_t start = 0;
        while (start < word.size()) {
            size_t end = word.size();
            int32_t found = -1;
            while (end > start) {
                std::string cand = (start > 0 ? "##" : "") +
                                   word.substr(start, end - start);
                auto it = vocab.index.find(cand);
                if (it != vocab.index.end()) {
                    found = it->second;
                    break;
                }
                --end;
            }
            if (found < 0) {
                ok = false;
                break;
            }
            wp.push_back(found);
            start = end;
        }
        if (ok && !wp.empty())
            pieces.insert(pieces.end(), wp.begin(), wp.end());
        else if (!word.empty())
            pieces.push_back(vocab.unk_id);
    }
    size_t keep = std::min(pieces.size(), static_cast<size_t>(max_seq_len - 2));
    TokenSequence seq;
    seq.ids.push_back(vocab.cls_id);
    seq.ids.insert(seq.ids.end(), pieces.begin(), pieces.begin() + keep);
    seq.ids.push_back(vocab.sep_id);
    seq.attention.assign(seq.ids.size(), 1);
    seq.poolable.assign(seq.ids.size(), 1);
    seq.poolable.front() = 0;  // [CLS]
    seq.poolable.back() = 0;   // [SEP]
    return seq;
}

// --------------------------------------------------------------- shapes --

void Int8Linear::build_cache() {
    size_t kp = pad16(in);
    w16.assign(out * kp, 0);
    colsum.assign(out, 0);
    for (size_t n = 0; n < out; ++n) {
        widen_s8_i16(w_q.data() + n * in, w16.data() + n * kp, in, kp);
        int32_t s = 0;
        for (size_t k = 0; k < in; ++k) s += w_q[n * in + k];
        colsum[n] = s;
    }
}

std::vector<std::string> linear_layer_names(const EncoderConfig& cfg) {
    std::vector<std::string> names;
    for (int i = 0; i < cfg.num_layers; ++i) {
        std::string base = "layers." + std::to_string(i);
        for (const char* n : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo",
                              ".ffn.in", ".ffn.out"})
            names.push_back(base + n);
    }
    return names;
}

size_t linear_param_count(const EncoderConfig& cfg, const std::string& name) {
    size_t H = static_cast<size_t>(cfg.hidden_size);
    size_t I = static_cast<size_t>(cfg.intermediate_size);
    if (name.find(".ffn.") != std::string::npos) return H * I;
    return H * H;
}

namespace {

void check_mat(const FloatMat& m, size_t r, size_t c, const std::string& what) {
    if (m.rows != r || m.cols != c)
        throw ContractError("encoder: tensor '" + what + "' has shape " +
                            std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                            ", expected " + std::to_string(r) + "x" +
                            std::to_string(c));
}

void check_vec(const std::vector<float>& v, size_t n, const std::string& what) {
    if (v.size() != n)
        throw ContractError("encoder: vector '" + what + "' has length " +
                            std::to_string(v.size()) + ", expected " +
                            std::to_string(n));
}

}  // namespace

void EncoderWeights::verify_shapes() const {
    cfg.validate();
    size_t H = static_cast<size_t>(cfg.hidden_size);
    size_t I = static_cast<size_t>(cfg.intermediate_size);
    check_mat(tok_emb, static_cast<size_t>(cfg.vocab_size), H, "embeddings.word");
    check_mat(pos_emb, static_cast<size_t>(cfg.max_seq_len), H,
              "embeddings.position");
    check_vec(emb_ln_g, H, "embeddings.ln.gamma");
    check_vec(emb_ln_b, H, "embeddings.ln.beta");
    if (layers.size() != static_cast<size_t>(cfg.num_layers))
        throw ContractError("encoder: layer count mismatch");
    for (size_t i = 0; i < layers.size(); ++i) {
        const EncoderLayerWeights& L = layers[i];
        std::string base = "layers." + std::to_string(i);
        auto check_linear = [&](const FloatMat& m, size_t in, size_t out,
                                const std::string& name) {
            auto it = qlayers.find(name);
            if (it != qlayers.end()) {
                if (it->second.in != in || it->second.out != out)
                    throw ContractError("encoder: INT8 layer '" + name +
                                        "' has wrong shape");
                if (it->second.w_q.size() != in * out)
                    throw ContractError("encoder: INT8 layer '" + name +
                                        "' has wrong payload");
                return;
            }
            check_mat(m, in, out, name);
        };
        check_linear(L.wq, H, H, base + ".attn.wq");
        check_linear(L.wk, H, H, base + ".attn.wk");
        check_linear(L.wv, H, H, base + ".attn.wv");
        check_linear(L.wo, H, H, base + ".attn.wo");
        check_linear(L.ffn_in, H, I, base + ".ffn.in");
        check_linear(L.ffn_out, I, H, base + ".ffn.out");
        check_vec(L.bq, H, base + ".attn.wq.bias");
        check_vec(L.bk, H, base + ".attn.wk.bias");
        check_vec(L.bv, H, base + ".attn.wv.bias");
        check_vec(L.bo, H, base + ".attn.wo.bias");
        check_vec(L.ffn_in_b, I, base + ".ffn.in.bias");
        check_vec(L.ffn_out_b, H, base + ".ffn.out.bias");
        check_vec(L.ln1_g, H, base + ".ln1.gamma");
        check_vec(L.ln1_b, H, base + ".ln1.beta");
        check_vec(L.ln2_g, H, base + ".ln2.gamma");
        check_vec(L.ln2_b, H, base + ".ln2.beta");
    }
}

// -------------------------------------------------------------- forward --

namespace {

constexpr float kLnEps = 1e-12f;

void layer_norm_rows(FloatMat& x, const std::vector<float>& g,
                     const std::vector<float>& b) {
    size_t H = x.cols;
    for (size_t m = 0; m < x.rows; ++m) {
        float* row = x.row(m);
        double mu = 0.0;
        for (size_t h = 0; h < H; ++h) mu += row[h];
        mu /= static_cast<double>(H);
        double var = 0.0;
        for (size_t h = 0; h < H; ++h) {
            double d = row[h] - mu;
            var += d * d;
        }
        var /= static_cast<double>(H);
        double inv = 1.0 / std::sqrt(var + static_cast<double>(kLnEps));
        for (size_t h = 0; h < H; ++h)
            row[h] = static_cast<float>((row[h] - mu) * inv) * g[h] + b[h];
    }
}

inline float gelu_tanh(float x) {
    // tanh approximation, fixed so persisted activations are reproducible
    float c = 0.7978845608028654f;  // sqrt(2/pi)
    float u = c * (x + 0.044715f * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(u));
}

void add_rows(FloatMat& x, const FloatMat& y) {
    for (size_t i = 0; i < x.data.size(); ++i) x.data[i] += y.data[i];
}

// X[M x in] * linear -> out[M x out]; INT8 path when the name is quantized.
void apply_linear(const EncoderWeights& w, const std::string& name,
                  const FloatMat& x, const FloatMat& wf,
                  const std::vector<float>& bias, FloatMat& out,
                  const ActivationHook* hook) {
    size_t M = x.rows, K = x.cols;
    if (hook) (*hook)(name, x.data.data(), M, K);
    auto it = w.qlayers.find(name);
    if (it == w.qlayers.end()) {
        size_t N = wf.cols;
        out = FloatMat(M, N);
        fill_bias(out.data.data(), bias.data(), M, N);
        gemm_f32(x.data.data(), wf.data.data(), out.data.data(), M, K, N);
        return;
    }
    const Int8Linear& q = it->second;
    if (q.in != K)
        throw ContractError("encoder: INT8 layer '" + name + "' input mismatch");
    size_t N = q.out;
    size_t Kp = pad16(K);
    std::vector<uint8_t> xq(M * K);
    quantize_u8(x.data.data(), xq.data(), M * K, q.a_scale, q.a_zp);
    std::vector<int16_t> x16(M * Kp);
    for (size_t m = 0; m < M; ++m)
        widen_u8_i16(xq.data() + m * K, x16.data() + m * Kp, K, Kp);
    std::vector<int32_t> acc(M * N);
    gemm_i16i32(x16.data(), q.w16.data(), acc.data(), M, Kp, N);
    out = FloatMat(M, N);
    float f = q.a_scale * q.w_scale;
    for (size_t m = 0; m < M; ++m) {
        float* orow = out.row(m);
        const int32_t* arow = acc.data() + m * N;
        for (size_t n = 0; n < N; ++n)
            orow[n] = f * static_cast<float>(arow[n] - q.a_zp * q.colsum[n]) +
                      bias[n];
    }
}

}  // namespace

std::vector<FloatMat> encoder_forward_batch(const EncoderWeights& w,
                                            const std::vector<TokenSequence>& batch,
                                            ForwardTrace* trace,
                                            const ActivationHook* hook) {
    const EncoderConfig& cfg = w.cfg;
    size_t H = static_cast<size_t>(cfg.hidden_size);
    size_t A = static_cast<size_t>(cfg.num_heads);
    size_t dh = H / A;
    float inv_sqrt_dh = 1.0f / std::sqrt(static_cast<float>(dh));

    std::vector<size_t> offset(batch.size()), len(batch.size());
    size_t M = 0;
    for (size_t s = 0; s < batch.size(); ++s) {
        const TokenSequence& t = batch[s];
        if (t.ids.empty()) throw ContractError("encoder: empty token sequence");
        if (t.ids.size() > static_cast<size_t>(cfg.max_seq_len))
            throw ContractError("encoder: sequence exceeds max_seq_len");
        if (t.attention.size() != t.ids.size())
            throw ContractError("encoder: attention mask length mismatch");
        offset[s] = M;
        len[s] = t.ids.size();
        M += t.ids.size();
    }
    if (M == 0) return {};

    FloatMat X(M, H);
    for (size_t s = 0; s < batch.size(); ++s) {
        for (size_t p = 0; p < len[s]; ++p) {
            int32_t id = batch[s].ids[p];
            if (id < 0 || id >= cfg.vocab_size)
                throw ContractError("encoder: token id out of range");
            const float* te = w.tok_emb.row(static_cast<size_t>(id));
            const float* pe = w.pos_emb.row(p);
            float* row = X.row(offset[s] + p);
            for (size_t h = 0; h < H; ++h) row[h] = te[h] + pe[h];
        }
    }
    layer_norm_rows(X, w.emb_ln_g, w.emb_ln_b);

    if (trace) {
        trace->attn.assign(static_cast<size_t>(cfg.num_layers), {});
    }

    FloatMat Q, K, V, ctx, O, Hff, F;
    std::vector<float> scores;
    for (size_t l = 0; l < static_cast<size_t>(cfg.num_layers); ++l) {
        const EncoderLayerWeights& L = w.layers[l];
        std::string base = "layers." + std::to_string(l);
        apply_linear(w, base + ".attn.wq", X, L.wq, L.bq, Q, hook);
        apply_linear(w, base + ".attn.wk", X, L.wk, L.bk, K, hook);
        apply_linear(w, base + ".attn.wv", X, L.wv, L.bv, V, hook);

        ctx = FloatMat(M, H);
        if (trace)
            trace->attn[l].assign(A, FloatMat(len.empty() ? 0 : len[0],
                                              len.empty() ? 0 : len[0]));
        for (size_t s = 0; s < batch.size(); ++s) {
            size_t off = offset[s], n = len[s];
            const std::vector<uint8_t>& am = batch[s].attention;
            scores.assign(n, 0.0f);
            for (size_t a = 0; a < A; ++a) {
                size_t hd = a * dh;
                for (size_t i = 0; i < n; ++i) {
                    const float* qrow = Q.row(off + i) + hd;
                    float mx = -std::numeric_limits<float>::infinity();
                    for (size_t j = 0; j < n; ++j) {
                        if (!am[j]) continue;
                        const float* krow = K.row(off + j) + hd;
                        float dot = 0.0f;
                        for (size_t t = 0; t < dh; ++t) dot += qrow[t] * krow[t];
                        scores[j] = dot * inv_sqrt_dh;
                        if (scores[j] > mx) mx = scores[j];
                    }
                    float denom = 0.0f;
                    for (size_t j = 0; j < n; ++j) {
                        if (!am[j]) {
                            scores[j] = 0.0f;
                            continue;
                        }
                        scores[j] = std::exp(scores[j] - mx);
                        denom += scores[j];
                    }
                    if (denom == 0.0f) continue;  // fully masked row
                    float* crow = ctx.row(off + i) + hd;
                    for (size_t j = 0; j < n; ++j) {
                        if (!am[j]) continue;
                        float p = scores[j] / denom;
                        if (trace && s == 0) trace->attn[l][a].at(i, j) = p;
                        const float* vrow = V.row(off + j) + hd;
                        for (size_t t = 0; t < dh; ++t) crow[t] += p * vrow[t];
                    }
                }
            }
        }
        apply_linear(w, base + ".attn.wo", ctx, L.wo, L.bo, O, hook);
        add_rows(X, O);
        layer_norm_rows(X, L.ln1_g, L.ln1_b);

        apply_linear(w, base + ".ffn.in", X, L.ffn_in, L.ffn_in_b, Hff, hook);
        for (float& v : Hff.data) v = gelu_tanh(v);
        apply_linear(w, base + ".ffn.out", Hff, L.ffn_out, L.ffn_out_b, F, hook);
        add_rows(X, F);
        layer_norm_rows(X, L.ln2_g, L.ln2_b);
    }

    std::vector<FloatMat> out(batch.size());
    for (size_t s = 0; s < batch.size(); ++s) {
        out[s] = FloatMat(len[s], H);
        std::copy(X.row(offset[s]), X.row(offset[s]) + len[s] * H,
                  out[s].data.begin());
    }
    return out;
}

FloatMat encoder_forward(const EncoderWeights& w, const TokenSequence& tokens,
                         ForwardTrace* trace) {
    auto v = encoder_forward_batch(w, {tokens}, trace, nullptr);
    return std::move(v[0]);
}

std::vector<float> mean_pool(const FloatMat& hidden,
                             const std::vector<uint8_t>& poolable) {
    if (hidden.rows == 0) throw ContractError("mean_pool: empty hidden states");
    if (poolable.size() != hidden.rows)
        throw ContractError("mean_pool: mask length mismatch");
    size_t H = hidden.cols;
    std::vector<double> acc(H, 0.0);
    size_t n = 0;
    for (size_t i = 0; i < hidden.rows; ++i) {
        if (!poolable[i]) continue;
        const float* row = hidden.row(i);
        for (size_t h = 0; h < H; ++h) acc[h] += row[h];
        ++n;
    }
    std::vector<float> out(H);
    if (n == 0) {
        const float* row = hidden.row(0);  // [CLS] fallback
        std::copy(row, row + H, out.begin());
        return out;
    }
    for (size_t h = 0; h < H; ++h)
        out[h] = static_cast<float>(acc[h] / static_cast<double>(n));
    return out;
}

FloatMat embed_events(const EncoderWeights& w, const Vocab& vocab,
                      const std::vector<std::string>& texts,
                      const EmbedOptions& opts) {
    w.verify_shapes();
    if (static_cast<size_t>(w.cfg.vocab_size) < vocab.size())
        throw ContractError("embed_events: vocab larger than model vocab_size");
    size_t n = texts.size();
    size_t H = static_cast<size_t>(w.cfg.hidden_size);
    FloatMat out(n, H);
    std::vector<TokenSequence> seqs(n);
    parallel_for(n, opts.threads, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i)
            seqs[i] = wordpiece_tokenize(texts[i], vocab, w.cfg.max_seq_len);
    });
    size_t bs = opts.batch_size < 1 ? 1 : static_cast<size_t>(opts.batch_size);
    size_t nbatches = (n + bs - 1) / bs;
    parallel_for(nbatches, opts.threads, [&](size_t bb, size_t be) {
        for (size_t bi = bb; bi < be; ++bi) {
            size_t b = bi * bs;
            size_t e = std::min(n, b + bs);
            std::vector<TokenSequence> chunk(seqs.begin() + b, seqs.begin() + e);
            std::vector<FloatMat> states = encoder_forward_batch(w, chunk);
            for (size_t i = b; i < e; ++i) {
                std::vector<float> p = mean_pool(states[i - b], seqs[i].poolable);
                std::copy(p.begin(), p.end(), out.row(i));
            }
        }
    });
    return out;
}

// ----------------------------------------------------------- init/(de)io --

EncoderWeights random_init(const EncoderConfig& cfg, uint64_t seed) {
    cfg.validate();
    EncoderWeights w;
    w.cfg = cfg;
    Rng rng(seed);
    auto fill_normal = [&](FloatMat& m, size_t r, size_t c) {
        m = FloatMat(r, c);
        for (float& v : m.data) v = static_cast<float>(rng.normal(0.0, 0.02));
    };
    size_t H = static_cast<size_t>(cfg.hidden_size);
    size_t I = static_cast<size_t>(cfg.intermediate_size);
    fill_normal(w.tok_emb, static_cast<size_t>(cfg.vocab_size), H);
    fill_normal(w.pos_emb, static_cast<size_t>(cfg.max_seq_len), H);
    w.emb_ln_g.assign(H, 1.0f);
    w.emb_ln_b.assign(H, 0.0f);
    w.layers.resize(static_cast<size_t>(cfg.num_layers));
    for (EncoderLayerWeights& L : w.layers) {
        fill_normal(L.wq, H, H);
        fill_normal(L.wk, H, H);
        fill_normal(L.wv, H, H);
        fill_normal(L.wo, H, H);
        fill_normal(L.ffn_in, H, I);
        fill_normal(L.ffn_out, I, H);
        L.bq.assign(H, 0.0f);
        L.bk.assign(H, 0.0f);
        L.bv.assign(H, 0.0f);
        L.bo.assign(H, 0.0f);
        L.ffn_in_b.assign(I, 0.0f);
        L.ffn_out_b.assign(H, 0.0f);
        L.ln1_g.assign(H, 1.0f);
        L.ln1_b.assign(H, 0.0f);
        L.ln2_g.assign(H, 1.0f);
        L.ln2_b.assign(H, 0.0f);
    }
    w.verify_shapes();
    return w;
}

namespace {

// weights live [in, out] in memory but [out, in] in the container
Tensor transpose_to_tensor(const std::string& name, const FloatMat& m) {
    std::vector<float> data(m.numel());
    for (size_t i = 0; i < m.rows; ++i)
        for (size_t j = 0; j < m.cols; ++j) data[j * m.rows + i] = m.at(i, j);
    return make_f32_tensor(name, {m.cols, m.rows}, std::move(data));
}

FloatMat transpose_from_tensor(const Tensor& t) {
    size_t out = static_cast<size_t>(t.dims[0]);
    size_t in = static_cast<size_t>(t.dims[1]);
    FloatMat m(in, out);
    for (size_t o = 0; o < out; ++o)
        for (size_t i = 0; i < in; ++i) m.at(i, o) = t.f32[o * in + i];
    return m;
}

Tensor mat_tensor(const std::string& name, const FloatMat& m) {
    return make_f32_tensor(name, {m.rows, m.cols}, m.data);
}

Tensor vec_tensor(const std::string& name, const std::vector<float>& v) {
    return make_f32_tensor(name, {v.size()}, v);
}

std::vector<float> vec_from(const Tensor& t, size_t n, const std::string& name) {
    if (t.dims.size() != 1 || t.numel() != n)
        throw FormatError("weights: tensor '" + name + "' has wrong shape");
    return t.f32;
}

}  // namespace

std::vector<Tensor> weights_to_tensors(const EncoderWeights& w) {
    std::vector<Tensor> ts;
    ts.push_back(mat_tensor("embeddings.word", w.tok_emb));
    ts.push_back(mat_tensor("embeddings.position", w.pos_emb));
    ts.push_back(vec_tensor("embeddings.ln.gamma", w.emb_ln_g));
    ts.push_back(vec_tensor("embeddings.ln.beta", w.emb_ln_b));
    for (size_t i = 0; i < w.layers.size(); ++i) {
        const EncoderLayerWeights& L = w.layers[i];
        std::string base = "layers." + std::to_string(i);
        auto put_linear = [&](const std::string& name, const FloatMat& m,
                              const std::vector<float>& bias) {
            auto it = w.qlayers.find(name);
            if (it != w.qlayers.end()) {
                const Int8Linear& q = it->second;
                ts.push_back(make_i8_tensor(name + ".weight", {q.out, q.in}, q.w_q));
                ts.push_back(vec_tensor(name + ".bias", q.bias));
            } else {
                ts.push_back(transpose_to_tensor(name + ".weight", m));
                ts.push_back(vec_tensor(name + ".bias", bias));
            }
        };
        put_linear(base + ".attn.wq", L.wq, L.bq);
        put_linear(base + ".attn.wk", L.wk, L.bk);
        put_linear(base + ".attn.wv", L.wv, L.bv);
        put_linear(base + ".attn.wo", L.wo, L.bo);
        put_linear(base + ".ffn.in", L.ffn_in, L.ffn_in_b);
        put_linear(base + ".ffn.out", L.ffn_out, L.ffn_out_b);
        ts.push_back(vec_tensor(base + ".ln1.gamma", L.ln1_g));
        ts.push_back(vec_tensor(base + ".ln1.beta", L.ln1_b));
        ts.push_back(vec_tensor(base + ".ln2.gamma", L.ln2_g));
        ts.push_back(vec_tensor(base + ".ln2.beta", L.ln2_b));
    }
    return ts;
}

EncoderWeights weights_from_tensors(
    const EncoderConfig& cfg, const std::vector<Tensor>& tensors,
    const std::map<std::string, LinearQuantInfo>* qinfo) {
    cfg.validate();
    EncoderWeights w;
    w.cfg = cfg;
    size_t H = static_cast<size_t>(cfg.hidden_size);
    size_t I = static_cast<size_t>(cfg.intermediate_size);

    auto get = [&](const std::string& name) -> const Tensor& {
        if (!has_tensor(tensors, name))
            throw FormatError("weights: missing tensor '" + name + "'");
        return find_tensor(tensors, name);
    };
    auto get_mat = [&](const std::string& name, size_t r, size_t c) {
        const Tensor& t = get(name);
        if (t.dtype != DType::F32 || t.dims.size() != 2 || t.dims[0] != r ||
            t.dims[1] != c)
            throw FormatError("weights: tensor '" + name + "' has wrong shape");
        FloatMat m(r, c);
        m.data = t.f32;
        return m;
    };
    w.tok_emb = get_mat("embeddings.word", static_cast<size_t>(cfg.vocab_size), H);
    w.pos_emb =
        get_mat("embeddings.position", static_cast<size_t>(cfg.max_seq_len), H);
    w.emb_ln_g = vec_from(get("embeddings.ln.gamma"), H, "embeddings.ln.gamma");
    w.emb_ln_b = vec_from(get("embeddings.ln.beta"), H, "embeddings.ln.beta");
    w.layers.resize(static_cast<size_t>(cfg.num_layers));
    for (size_t i = 0; i < w.layers.size(); ++i) {
        EncoderLayerWeights& L = w.layers[i];
        std::string base = "layers." + std::to_string(i);
        auto load_linear = [&](const std::string& name, FloatMat& m,
                               std::vector<float>& bias, size_t in, size_t out) {
            const Tensor& wt = get(name + ".weight");
            bias = vec_from(get(name + ".bias"), out, name + ".bias");
            if (wt.dims.size() != 2 || wt.dims[0] != out || wt.dims[1] != in)
                throw FormatError("weights: tensor '" + name +
                                  ".weight' has wrong shape");
            if (wt.dtype == DType::F32) {
                m = transpose_from_tensor(wt);
                return;
            }
            // INT8 layer: scales must come from the quantization manifest.
            if (qinfo == nullptr)
                throw FormatError(
                    "weights: '" + name +
                    ".weight' is INT8; load it through the quantized-encoder "
                    "loader with its manifest");
            auto qi = qinfo->find(name);
            if (qi == qinfo->end())
                throw FormatError("weights: INT8 layer '" + name +
                                  "' missing from quantization manifest");
            Int8Linear q;
            q.in = in;
            q.out = out;
            q.w_q = wt.i8;
            q.bias = bias;
            q.w_scale = qi->second.w_scale;
            q.a_scale = qi->second.a_scale;
            q.a_zp = qi->second.a_zp;
            q.build_cache();
            w.qlayers[name] = std::move(q);
        };
        load_linear(base + ".attn.wq", L.wq, L.bq, H, H);
        load_linear(base + ".attn.wk", L.wk, L.bk, H, H);
        load_linear(base + ".attn.wv", L.wv, L.bv, H, H);
        load_linear(base + ".attn.wo", L.wo, L.bo, H, H);
        load_linear(base + ".ffn.in", L.ffn_in, L.ffn_in_b, H, I);
        load_linear(base + ".ffn.out", L.ffn_out, L.ffn_out_b, I, H);
        L.ln1_g = vec_from(get(base + ".ln1.gamma"), H, base + ".ln1.gamma");
        L.ln1_b = vec_from(get(base + ".ln1.beta"), H, base + ".ln1.beta");
        L.ln2_g = vec_from(get(base + ".ln2.gamma"), H, base + ".ln2.gamma");
        L.ln2_b = vec_from(get(base + ".ln2.beta"), H, base + ".ln2.beta");
    }
    w.verify_shapes();
    return w;
}

void save_weights(const std::string& path, const EncoderWeights& w) {
    w.verify_shapes();
    write_container(path, weights_to_tensors(w));
    std::ofstream os(path + ".json", std::ios::trunc);
    if (!os) throw FormatError("cannot write config sidecar: " + path + ".json");
    os << encoder_config_to_json(w.cfg) << '\n';
}

EncoderWeights load_weights(const std::string& path) {
    std::ifstream is(path + ".json");
    if (!is)
        throw MissingArtifactError("missing config sidecar: " + path + ".json");
    std::stringstream ss;
    ss << is.rdbuf();
    EncoderConfig cfg = encoder_config_from_json(ss.str());
    std::vector<Tensor> tensors = read_container(path);
    return weights_from_tensors(cfg, tensors, nullptr);
}

void save_embedding_matrix(const std::string& path, const FloatMat& m) {
    write_container(path, {make_f32_tensor("embeddings", {m.rows, m.cols}, m.data)});
}

FloatMat load_embedding_matrix(const std::string& path) {
    std::vector<Tensor> ts = read_container(path);
    const Tensor& t = find_tensor(ts, "embeddings");
    if (t.dtype != DType::F32 || t.dims.size() != 2)
        throw FormatError("embedding matrix: bad tensor in " + path);
    FloatMat m(static_cast<size_t>(t.dims[0]), static_cast<size_t>(t.dims[1]));
    m.data = t.f32;
    return m;
}

}  // namespace logsem
