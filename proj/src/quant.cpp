#include "logsem/quant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"

namespace logsem {

using nlohmann::json;

// ---------------------------------------------------------------- stats --

void ActivationStats::observe(const float* x, size_t n) {
    for (size_t i = 0; i < n; ++i) {
        double v = static_cast<double>(x[i]);
        if (count == 0) {
            min_v = max_v = v;
        } else {
            if (v < min_v) min_v = v;
            if (v > max_v) max_v = v;
        }
        ++count;
        double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
}

void ActivationStats::prepare_hist(double lo, double hi) {
    hist_lo = lo;
    hist_hi = hi;
    hist.assign(kBins, 0);
}

void ActivationStats::observe_hist(const float* x, size_t n) {
    if (hist.empty()) throw ContractError("stats: histogram not prepared");
    double w = hist_hi - hist_lo;
    for (size_t i = 0; i < n; ++i) {
        double v = static_cast<double>(x[i]);
        size_t b = 0;
        if (w > 0.0) {
            double f = (v - hist_lo) / w * static_cast<double>(kBins);
            if (f < 0.0) f = 0.0;
            b = static_cast<size_t>(f);
            if (b >= kBins) b = kBins - 1;
        }
        ++hist[b];
    }
}

void ActivationStats::merge(const ActivationStats& o) {
    if (o.count == 0) return;
    if (count == 0) {
        *this = o;
        return;
    }
    double lo = std::min(min_v, o.min_v);
    double hi = std::max(max_v, o.max_v);
    // Chan's parallel combine for moments.
    double na = static_cast<double>(count), nb = static_cast<double>(o.count);
    double delta = o.mean - mean;
    double n = na + nb;
    double new_mean = mean + delta * nb / n;
    double new_m2 = m2 + o.m2 + delta * delta * na * nb / n;
    // Re-bin both histograms over the union range by bin centers.
    std::vector<uint64_t> merged;
    bool have_hist = !hist.empty() || !o.hist.empty();
    if (have_hist) {
        merged.assign(kBins, 0);
        double w = hi - lo;
        auto add = [&](const std::vector<uint64_t>& h, double h_lo, double h_hi) {
            if (h.empty()) return;
            double src_w = h_hi - h_lo;
            for (size_t b = 0; b < h.size(); ++b) {
                if (h[b] == 0) continue;
                double center =
                    h_lo + (static_cast<double>(b) + 0.5) / static_cast<double>(kBins) * src_w;
                size_t dst = 0;
                if (w > 0.0) {
                    double f = (center - lo) / w * static_cast<double>(kBins);
                    if (f < 0.0) f = 0.0;
                    dst = static_cast<size_t>(f);
                    if (dst >= kBins) dst = kBins - 1;
                }
                merged[dst] += h[b];
            }
        };
        add(hist, hist_lo, hist_hi);
        add(o.hist, o.hist_lo, o.hist_hi);
    }
    min_v = lo;
    max_v = hi;
    mean = new_mean;
    m2 = new_m2;
    count += o.count;
    hist = std::move(merged);
    hist_lo = lo;
    hist_hi = hi;
}

std::map<std::string, ActivationStats> collect_stats(
    const EncoderWeights& enc, const Vocab& vocab, const CalibrationSet& calib,
    int batch_size) {
    if (calib.texts.empty())
        throw ContractError("calibration: empty calibration set for system '" +
                            calib.system_id + "'");
    enc.verify_shapes();
    std::map<std::string, ActivationStats> stats;
    for (const std::string& name : linear_layer_names(enc.cfg))
        stats.emplace(name, ActivationStats{});

    std::vector<TokenSequence> seqs;
    seqs.reserve(calib.texts.size());
    for (const std::string& t : calib.texts)
        seqs.push_back(wordpiece_tokenize(t, vocab, enc.cfg.max_seq_len));

    size_t bs = batch_size < 1 ? 1 : static_cast<size_t>(batch_size);
    auto run_pass = [&](const ActivationHook& hook) {
        for (size_t b = 0; b < seqs.size(); b += bs) {
            size_t e = std::min(seqs.size(), b + bs);
            std::vector<TokenSequence> chunk(seqs.begin() + b, seqs.begin() + e);
            encoder_forward_batch(enc, chunk, nullptr, &hook);
        }
    };
    ActivationHook pass1 = [&](const std::string& name, const float* rows,
                               size_t m, size_t k) {
        stats.at(name).observe(rows, m * k);
    };
    run_pass(pass1);
    for (auto& [name, st] : stats)
        if (st.count) st.prepare_hist(st.min_v, st.max_v);
    ActivationHook pass2 = [&](const std::string& name, const float* rows,
                               size_t m, size_t k) {
        stats.at(name).observe_hist(rows, m * k);
    };
    run_pass(pass2);
    return stats;
}

// --------------------------------------------------------------- params --

namespace {

// Clipped activation range from the histogram; p percent off each tail.
void clipped_range(const ActivationStats& s, double p, double& lo, double& hi) {
    if (p <= 0.0 || s.hist.empty()) {
        lo = s.min_v;
        hi = s.max_v;
        return;
    }
    double target = static_cast<double>(s.count) * (p / 100.0);
    double w = (s.hist_hi - s.hist_lo) / static_cast<double>(ActivationStats::kBins);
    uint64_t c = 0;
    lo = s.hist_lo;
    for (size_t b = 0; b < s.hist.size(); ++b) {
        c += s.hist[b];
        if (static_cast<double>(c) >= target) {
            lo = s.hist_lo + static_cast<double>(b) * w;
            break;
        }
    }
    c = 0;
    hi = s.hist_hi;
    for (size_t b = s.hist.size(); b-- > 0;) {
        c += s.hist[b];
        if (static_cast<double>(c) >= target) {
            hi = s.hist_lo + static_cast<double>(b + 1) * w;
            break;
        }
    }
    if (hi < lo) std::swap(lo, hi);
}

}  // namespace

QuantParams activation_quant_params(const ActivationStats& stats,
                                    const QuantPolicy& policy) {
    if (stats.count == 0) throw ContractError("quant: stats have no observations");
    double lo, hi;
    clipped_range(stats, policy.clip_percentile, lo, hi);
    // widen to include zero so the affine grid covers the whole range
    lo = std::min(lo, 0.0);
    hi = std::max(hi, 0.0);
    if (hi == lo) throw NumericError("quant: degenerate activation range");
    QuantParams p;
    p.scheme = QuantScheme::AsymmetricUint8Activations;
    p.scale = static_cast<float>((hi - lo) / 255.0);
    double zp = std::nearbyint(-lo / static_cast<double>(p.scale));
    if (zp < 0.0) zp = 0.0;
    if (zp > 255.0) zp = 255.0;
    p.zero_point = static_cast<int32_t>(zp);
    return p;
}

QuantParams weight_quant_params(const float* w, size_t n) {
    float amax = 0.0f;
    for (size_t i = 0; i < n; ++i) {
        float a = std::fabs(w[i]);
        if (a > amax) amax = a;
    }
    if (amax == 0.0f) throw NumericError("quant: all-zero weight tensor");
    QuantParams p;
    p.scheme = QuantScheme::SymmetricInt8Weights;
    p.scale = amax / 127.0f;
    p.zero_point = 0;
    return p;
}

uint8_t quantize_value_u8(float x, const QuantParams& p) {
    uint8_t q;
    quantize_u8(&x, &q, 1, p.scale, p.zero_point);
    return q;
}

float dequantize_value_u8(uint8_t q, const QuantParams& p) {
    return (static_cast<int32_t>(q) - p.zero_point) * p.scale;
}

int8_t quantize_value_s8(float x, float scale) {
    float r = std::nearbyintf(x / scale);
    if (r < -127.0f) r = -127.0f;
    if (r > 127.0f) r = 127.0f;
    return static_cast<int8_t>(r);
}

// ------------------------------------------------------------ selection --

std::vector<std::string> select_layers(const EncoderConfig& cfg, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("quant: fraction must be in (0,1)");
    cfg.validate();
    size_t total = static_cast<size_t>(cfg.num_layers) * 6;
    size_t k = static_cast<size_t>(
        std::ceil(fraction * static_cast<double>(total)));
    std::vector<std::string> candidates;
    for (int i = cfg.num_layers - 1; i >= 0; --i) {
        std::string base = "layers." + std::to_string(i);
        candidates.push_back(base + ".ffn.in");
        candidates.push_back(base + ".ffn.out");
    }
    for (int i = cfg.num_layers - 1; i >= 0; --i) {
        std::string base = "layers." + std::to_string(i);
        for (const char* n : {".attn.wq", ".attn.wk", ".attn.wv", ".attn.wo"})
            candidates.push_back(base + n);
    }
    if (k > candidates.size()) k = candidates.size();
    candidates.resize(k);
    return candidates;
}

// ------------------------------------------------------------- quantize --

QuantizedEncoder quantize_encoder(const EncoderWeights& enc,
                                  const std::map<std::string, ActivationStats>& stats,
                                  const std::vector<std::string>& selection,
                                  const QuantPolicy& policy) {
    enc.verify_shapes();
    QuantizedEncoder out;
    out.enc = enc;
    out.clip_percentile = policy.clip_percentile;
    for (const std::string& name : selection) {
        auto st = stats.find(name);
        if (st == stats.end() || st->second.count == 0)
            throw ContractError("calibration: no activation stats for layer '" +
                                name + "'");
        // locate the FP32 matrix + bias belonging to this name
        size_t layer_idx = 0;
        {
            size_t dot1 = name.find('.');
            size_t dot2 = name.find('.', dot1 + 1);
            layer_idx = static_cast<size_t>(
                std::stoul(name.substr(dot1 + 1, dot2 - dot1 - 1)));
        }
        if (layer_idx >= out.enc.layers.size())
            throw ContractError("quant: bad layer name '" + name + "'");
        EncoderLayerWeights& L = out.enc.layers[layer_idx];
        FloatMat* m = nullptr;
        std::vector<float>* bias = nullptr;
        if (name.find(".attn.wq") != std::string::npos) m = &L.wq, bias = &L.bq;
        else if (name.find(".attn.wk") != std::string::npos) m = &L.wk, bias = &L.bk;
        else if (name.find(".attn.wv") != std::string::npos) m = &L.wv, bias = &L.bv;
        else if (name.find(".attn.wo") != std::string::npos) m = &L.wo, bias = &L.bo;
        else if (name.find(".ffn.in") != std::string::npos) m = &L.ffn_in, bias = &L.ffn_in_b;
        else if (name.find(".ffn.out") != std::string::npos) m = &L.ffn_out, bias = &L.ffn_out_b;
        else throw ContractError("quant: unknown linear name '" + name + "'");

        QuantParams ap;
        try {
            ap = activation_quant_params(st->second, policy);
        } catch (const NumericError&) {
            continue;  // degenerate range: layer stays FP32
        }
        QuantParams wp;
        try {
            wp = weight_quant_params(m->data.data(), m->data.size());
        } catch (const NumericError&) {
            continue;
        }

        Int8Linear q;
        q.in = m->rows;   // memory layout is [in, out]
        q.out = m->cols;
        q.w_q.resize(q.in * q.out);
        for (size_t o = 0; o < q.out; ++o)  // store [out, in]
            for (size_t i = 0; i < q.in; ++i)
                q.w_q[o * q.in + i] = quantize_value_s8(m->at(i, o), wp.scale);
        q.bias = *bias;
        q.w_scale = wp.scale;
        q.a_scale = ap.scale;
        q.a_zp = ap.zero_point;
        q.build_cache();
        out.enc.qlayers[name] = std::move(q);
        out.selection.push_back(name);
        *m = FloatMat{};  // FP32 payload no longer needed
    }
    out.enc.verify_shapes();
    return out;
}

FloatMat quantized_forward(const QuantizedEncoder& q, const TokenSequence& tokens) {
    return encoder_forward(q.enc, tokens);
}

FloatMat quantized_embed_events(const QuantizedEncoder& q, const Vocab& vocab,
                                const std::vector<std::string>& texts,
                                const EmbedOptions& opts) {
    return embed_events(q.enc, vocab, texts, opts);
}

// ------------------------------------------------------------------- io --

void save_quantized(const std::string& path, const QuantizedEncoder& q) {
    save_weights(path, q.enc);
    json man;
    man["selection"] = q.selection;
    man["clip_percentile"] = q.clip_percentile;
    json per = json::object();
    for (const std::string& name : q.selection) {
        const Int8Linear& L = q.enc.qlayers.at(name);
        per[name] = {{"w_scale", L.w_scale},
                     {"a_scale", L.a_scale},
                     {"a_zp", L.a_zp}};
    }
    man["per_layer"] = per;
    std::ofstream os(path + ".quant.json", std::ios::trunc);
    if (!os) throw FormatError("cannot write quant manifest: " + path);
    os << man.dump(2) << '\n';
}

QuantizedEncoder load_quantized(const std::string& path) {
    std::ifstream cs(path + ".json");
    if (!cs)
        throw MissingArtifactError("missing config sidecar: " + path + ".json");
    std::stringstream css;
    css << cs.rdbuf();
    EncoderConfig cfg = encoder_config_from_json(css.str());

    std::ifstream ms(path + ".quant.json");
    if (!ms)
        throw MissingArtifactError("missing quant manifest: " + path +
                                   ".quant.json");
    json man;
    try {
        ms >> man;
    } catch (const json::exception& e) {
        throw FormatError(path + ".quant.json: " + e.what());
    }
    QuantizedEncoder q;
    q.clip_percentile = man.value("clip_percentile", 0.1);
    std::map<std::string, LinearQuantInfo> qinfo;
    for (const auto& name : man.at("selection")) {
        std::string n = name.get<std::string>();
        const json& p = man.at("per_layer").at(n);
        LinearQuantInfo info;
        info.w_scale = p.at("w_scale").get<float>();
        info.a_scale = p.at("a_scale").get<float>();
        info.a_zp = p.at("a_zp").get<int32_t>();
        qinfo[n] = info;
        q.selection.push_back(n);
    }
    q.enc = weights_from_tensors(cfg, read_container(path), &qinfo);
    for (const std::string& n : q.selection)
        if (!q.enc.qlayers.count(n))
            throw FormatError("quant manifest lists '" + n +
                              "' but container tensor is not INT8");
    return q;
}

}  // namespace logsem
