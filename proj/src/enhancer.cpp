#include "logsem/enhancer.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "logsem/container.hpp"
#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"
#include "logsem/rng.hpp"

namespace logsem {

using nlohmann::json;

void EnhancerParams::verify() const {
    if (r == 0 || d_s == 0 || d_t == 0)
        throw ContractError("enhancer: dimensions must be positive");
    if (d_s > d_t)
        throw ContractError("enhancer: d_S must not exceed d_T (pad() only extends)");
    if (A.rows != r || A.cols != d_s)
        throw ContractError("enhancer: A must be r x d_S");
    if (B.rows != d_t || B.cols != r)
        throw ContractError("enhancer: B must be d_T x r");
}

EnhancerParams init_enhancer(size_t r, size_t d_s, size_t d_t, uint64_t seed) {
    EnhancerParams p;
    p.r = r;
    p.d_s = d_s;
    p.d_t = d_t;
    p.A = FloatMat(r, d_s);
    p.B = FloatMat(d_t, r);
    Rng rng(seed);
    double std = 1.0 / std::sqrt(static_cast<double>(d_s));
    for (float& v : p.A.data) v = static_cast<float>(rng.normal(0.0, std));
    for (float& v : p.B.data) v = static_cast<float>(rng.normal(0.0, std));
    p.verify();
    return p;
}

FloatMat enhance_batch(const EnhancerParams& p, const FloatMat& h_s) {
    p.verify();
    if (h_s.cols != p.d_s)
        throw ContractError("enhance: input dim " + std::to_string(h_s.cols) +
                            " != d_S " + std::to_string(p.d_s));
    size_t n = h_s.rows;
    // kernel layout is [in, out]: transpose A and B once per call
    FloatMat At(p.d_s, p.r), Bt(p.r, p.d_t);
    for (size_t i = 0; i < p.r; ++i)
        for (size_t j = 0; j < p.d_s; ++j) At.at(j, i) = p.A.at(i, j);
    for (size_t i = 0; i < p.d_t; ++i)
        for (size_t j = 0; j < p.r; ++j) Bt.at(j, i) = p.B.at(i, j);
    FloatMat proj(n, p.r);
    gemm_f32(h_s.data.data(), At.data.data(), proj.data.data(), n, p.d_s, p.r);
    FloatMat out(n, p.d_t);
    for (size_t i = 0; i < n; ++i)  // out starts as pad(h_s)
        std::copy(h_s.row(i), h_s.row(i) + p.d_s, out.row(i));
    gemm_f32(proj.data.data(), Bt.data.data(), out.data.data(), n, p.r, p.d_t);
    return out;
}

std::vector<float> enhance(const EnhancerParams& p, const std::vector<float>& h_s) {
    FloatMat m(1, h_s.size());
    m.data = h_s;
    FloatMat y = enhance_batch(p, m);
    return y.data;
}

namespace {

void check_pairs(const EnhancerParams& p, const EmbeddingPairs& pairs) {
    if (pairs.h_s.rows == 0) throw ContractError("enhancer: empty pair set");
    if (pairs.h_s.rows != pairs.h_t.rows)
        throw ContractError("enhancer: pair count mismatch");
    if (pairs.h_s.cols != p.d_s || pairs.h_t.cols != p.d_t)
        throw ContractError("enhancer: pair dimensions do not match params");
}

}  // namespace

double enhancer_mse(const EnhancerParams& p, const EmbeddingPairs& pairs) {
    check_pairs(p, pairs);
    FloatMat y = enhance_batch(p, pairs.h_s);
    double acc = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) {
        double d = static_cast<double>(y.data[i]) -
                   static_cast<double>(pairs.h_t.data[i]);
        acc += d * d;
    }
    return acc / static_cast<double>(pairs.h_s.rows);
}

EnhancerGrads enhancer_grad(const EnhancerParams& p, const EmbeddingPairs& pairs) {
    check_pairs(p, pairs);
    size_t n = pairs.h_s.rows;
    FloatMat y = enhance_batch(p, pairs.h_s);

    // E = y - h_T; P = h_S A^T recomputed here (cheap relative to clarity)
    FloatMat At(p.d_s, p.r);
    for (size_t i = 0; i < p.r; ++i)
        for (size_t j = 0; j < p.d_s; ++j) At.at(j, i) = p.A.at(i, j);
    FloatMat proj(n, p.r);
    gemm_f32(pairs.h_s.data.data(), At.data.data(), proj.data.data(), n, p.d_s,
             p.r);
    for (size_t i = 0; i < y.data.size(); ++i) y.data[i] -= pairs.h_t.data[i];
    const FloatMat& E = y;

    // dB = (2/n) E^T P ; dA = (2/n) (B^T E^T) H_S
    std::vector<double> db(p.d_t * p.r, 0.0), da(p.r * p.d_s, 0.0);
    std::vector<double> bte(p.r);  // B^T e_i per pair
    for (size_t i = 0; i < n; ++i) {
        const float* e = E.row(i);
        const float* pr = proj.row(i);
        const float* hs = pairs.h_s.row(i);
        for (size_t t = 0; t < p.d_t; ++t) {
            double ev = e[t];
            for (size_t j = 0; j < p.r; ++j) db[t * p.r + j] += ev * pr[j];
        }
        std::fill(bte.begin(), bte.end(), 0.0);
        for (size_t t = 0; t < p.d_t; ++t) {
            double ev = e[t];
            const float* brow = p.B.row(t);
            for (size_t j = 0; j < p.r; ++j) bte[j] += brow[j] * ev;
        }
        for (size_t j = 0; j < p.r; ++j) {
            double bv = bte[j];
            for (size_t k = 0; k < p.d_s; ++k) da[j * p.d_s + k] += bv * hs[k];
        }
    }
    double scale = 2.0 / static_cast<double>(n);
    EnhancerGrads g;
    g.dA = FloatMat(p.r, p.d_s);
    g.dB = FloatMat(p.d_t, p.r);
    for (size_t i = 0; i < da.size(); ++i)
        g.dA.data[i] = static_cast<float>(da[i] * scale);
    for (size_t i = 0; i < db.size(); ++i)
        g.dB.data[i] = static_cast<float>(db[i] * scale);
    return g;
}

EnhancerTrainResult train_enhancer(const EmbeddingPairs& pairs, size_t r,
                                   const EnhancerTrainConfig& cfg) {
    if (pairs.h_s.rows == 0) throw ContractError("enhancer: empty training set");
    if (cfg.epochs < 0) throw ConfigError("enhancer: epochs must be >= 0");
    if (!(cfg.learning_rate >= 0.0))
        throw ConfigError("enhancer: learning rate must be >= 0");
    EnhancerTrainResult res;
    res.params = init_enhancer(r, pairs.h_s.cols, pairs.h_t.cols, cfg.seed);
    EnhancerParams& p = res.params;

    size_t n = pairs.h_s.rows;
    size_t bs = cfg.batch_size <= 0 ? n : static_cast<size_t>(cfg.batch_size);
    auto slice = [&](size_t b, size_t e) {
        EmbeddingPairs s;
        s.h_s = FloatMat(e - b, pairs.h_s.cols);
        s.h_t = FloatMat(e - b, pairs.h_t.cols);
        std::copy(pairs.h_s.row(b), pairs.h_s.row(e), s.h_s.data.begin());
        std::copy(pairs.h_t.row(b), pairs.h_t.row(e), s.h_t.data.begin());
        return s;
    };

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = enhancer_mse(p, pairs);
        if (!std::isfinite(loss))
            throw NumericError("enhancer: loss diverged at epoch " +
                               std::to_string(epoch));
        res.loss_trace.push_back(loss);
        for (size_t b = 0; b < n; b += bs) {
            size_t e = std::min(n, b + bs);
            EnhancerGrads g;
            if (b == 0 && e == n) {
                g = enhancer_grad(p, pairs);
            } else {
                EmbeddingPairs sub = slice(b, e);
                g = enhancer_grad(p, sub);
            }
            float lr = static_cast<float>(cfg.learning_rate);
            for (size_t i = 0; i < p.A.data.size(); ++i)
                p.A.data[i] -= lr * g.dA.data[i];
            for (size_t i = 0; i < p.B.data.size(); ++i)
                p.B.data[i] -= lr * g.dB.data[i];
        }
    }
    double final_loss = enhancer_mse(p, pairs);
    if (!std::isfinite(final_loss))
        throw NumericError("enhancer: loss diverged at epoch " +
                           std::to_string(cfg.epochs));
    res.loss_trace.push_back(final_loss);
    return res;
}

void save_enhancer(const std::string& path, const EnhancerParams& p) {
    p.verify();
    std::vector<Tensor> ts;
    ts.push_back(make_f32_tensor("crosys.A", {p.r, p.d_s}, p.A.data));
    ts.push_back(make_f32_tensor("crosys.B", {p.d_t, p.r}, p.B.data));
    write_container(path, ts);
    json man;
    man["r"] = p.r;
    man["d_S"] = p.d_s;
    man["d_T"] = p.d_t;
    man["trained_on"] = p.trained_on;
    std::ofstream os(path + ".json", std::ios::trunc);
    if (!os) throw FormatError("cannot write enhancer manifest: " + path);
    os << man.dump(2) << '\n';
}

EnhancerParams load_enhancer(const std::string& path, size_t expect_d_s,
                             size_t expect_d_t) {
    std::vector<Tensor> ts = read_container(path);
    if (!has_tensor(ts, "crosys.A") || !has_tensor(ts, "crosys.B"))
        throw FormatError("enhancer container must hold crosys.A and crosys.B: " +
                          path);
    const Tensor& a = find_tensor(ts, "crosys.A");
    const Tensor& b = find_tensor(ts, "crosys.B");
    if (a.dtype != DType::F32 || b.dtype != DType::F32 || a.dims.size() != 2 ||
        b.dims.size() != 2)
        throw FormatError("enhancer tensors must be rank-2 FP32: " + path);
    EnhancerParams p;
    p.r = static_cast<size_t>(a.dims[0]);
    p.d_s = static_cast<size_t>(a.dims[1]);
    p.d_t = static_cast<size_t>(b.dims[0]);
    if (static_cast<size_t>(b.dims[1]) != p.r)
        throw FormatError("enhancer: A and B disagree on r: " + path);
    p.A = FloatMat(p.r, p.d_s);
    p.A.data = a.f32;
    p.B = FloatMat(p.d_t, p.r);
    p.B.data = b.f32;
    std::ifstream is(path + ".json");
    if (is) {
        json man;
        try {
            is >> man;
            if (man.contains("trained_on"))
                p.trained_on = man["trained_on"].get<std::vector<std::string>>();
        } catch (const json::exception&) {
            // manifest is advisory; tensor shapes are authoritative
        }
    }
    p.verify();
    if (expect_d_s && p.d_s != expect_d_s)
        throw ContractError("enhancer: d_S mismatch (file " + std::to_string(p.d_s) +
                            ", expected " + std::to_string(expect_d_s) + ")");
    if (expect_d_t && p.d_t != expect_d_t)
        throw ContractError("enhancer: d_T mismatch (file " + std::to_string(p.d_t) +
                            ", expected " + std::to_string(expect_d_t) + ")");
    return p;
}

}  // namespace logsem
