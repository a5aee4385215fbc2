#include "logsem/detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "logsem/container.hpp"
#include "logsem/errors.hpp"
#include "logsem/kernels.hpp"
#include "logsem/parallel.hpp"
#include "logsem/rng.hpp"

namespace logsem {

using nlohmann::json;

namespace {

float sigmoidf(float z) {
    if (z >= 0.0f) {
        return 1.0f / (1.0f + std::exp(-z));
    }
    float e = std::exp(z);
    return e / (1.0f + e);
}

double softplus(double v) {
    return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double sigmoidd(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// mask/label-aware logit gradient of the (optionally pos-weighted) BCE
double dloss_dz(double z, float y, double pos_weight) {
    if (y > 0.5f) return -pos_weight * (1.0 - sigmoidd(z));
    return sigmoidd(z);
}

double bce_term(double z, float y, double pos_weight) {
    if (y > 0.5f) return pos_weight * softplus(-z);
    return softplus(z);
}

FloatMat transpose(const FloatMat& m) {
    FloatMat t(m.cols, m.rows);
    for (size_t i = 0; i < m.rows; ++i)
        for (size_t j = 0; j < m.cols; ++j) t.at(j, i) = m.at(i, j);
    return t;
}

// Windows stacked per time step so every recurrence step is one GEMM over
// the whole batch; row-local accumulation keeps per-window results bitwise
// equal to rnn_forward.
struct WindowBatch {
    size_t b = 0, m = 0, d = 0;
    std::vector<FloatMat> xt;   // m entries, each b x d
    std::vector<FloatMat> xt_t; // transposes (d x b), for the backward pass
    std::vector<std::vector<float>> y;      // per t, length b
    std::vector<std::vector<uint8_t>> mask; // per t, length b
    size_t unmasked = 0;
};

WindowBatch make_batch(const std::vector<Window>& windows, size_t lo, size_t hi) {
    WindowBatch wb;
    wb.b = hi - lo;
    wb.m = windows[lo].x.rows;
    wb.d = windows[lo].x.cols;
    for (size_t w = lo; w < hi; ++w) {
        if (windows[w].x.rows != wb.m || windows[w].x.cols != wb.d)
            throw ContractError("detector: windows disagree on shape");
        if (windows[w].y.size() != wb.m || windows[w].mask.size() != wb.m)
            throw ContractError("detector: window label/mask length mismatch");
    }
    wb.xt.reserve(wb.m);
    wb.y.resize(wb.m);
    wb.mask.resize(wb.m);
    for (size_t t = 0; t < wb.m; ++t) {
        FloatMat xt(wb.b, wb.d);
        wb.y[t].resize(wb.b);
        wb.mask[t].resize(wb.b);
        for (size_t w = lo; w < hi; ++w) {
            size_t r = w - lo;
            std::copy(windows[w].x.row(t), windows[w].x.row(t) + wb.d, xt.row(r));
            wb.y[t][r] = windows[w].y[t];
            wb.mask[t][r] = windows[w].mask[t];
            if (windows[w].mask[t]) ++wb.unmasked;
        }
        wb.xt_t.push_back(transpose(xt));
        wb.xt.push_back(std::move(xt));
    }
    return wb;
}

struct BatchForward {
    std::vector<FloatMat> h;            // per t: b x hidden (post-tanh)
    std::vector<std::vector<float>> z;  // per t: b logits
};

BatchForward forward_batch(const RnnParams& p, const WindowBatch& wb) {
    if (wb.d != p.input_dim())
        throw ContractError("detector: embedding dim " + std::to_string(wb.d) +
                            " != params input dim " +
                            std::to_string(p.input_dim()));
    size_t hd = p.hidden_dim();
    BatchForward f;
    f.h.reserve(wb.m);
    f.z.resize(wb.m);
    const FloatMat* hprev = nullptr;
    for (size_t t = 0; t < wb.m; ++t) {
        FloatMat a(wb.b, hd);
        fill_bias(a.data.data(), p.b_h.data(), wb.b, hd);
        gemm_f32(wb.xt[t].data.data(), p.w_xh.data.data(), a.data.data(), wb.b,
                 wb.d, hd);
        if (hprev)
            gemm_f32(hprev->data.data(), p.w_hh.data.data(), a.data.data(),
                     wb.b, hd, hd);
        for (float& v : a.data) v = std::tanh(v);
        f.z[t].resize(wb.b);
        for (size_t r = 0; r < wb.b; ++r) {
            const float* hr = a.row(r);
            float z = p.b_ro;
            for (size_t j = 0; j < hd; ++j) z += hr[j] * p.w_ro[j];
            f.z[t][r] = z;
        }
        f.h.push_back(std::move(a));
        hprev = &f.h.back();
    }
    return f;
}

double loss_from_forward(const BatchForward& f, const WindowBatch& wb,
                         double pos_weight) {
    if (wb.unmasked == 0)
        throw ContractError("detector: no unmasked labeled events");
    double acc = 0.0;
    for (size_t t = 0; t < wb.m; ++t)
        for (size_t r = 0; r < wb.b; ++r)
            if (wb.mask[t][r])
                acc += bce_term(f.z[t][r], wb.y[t][r], pos_weight);
    return acc / static_cast<double>(wb.unmasked);
}

// Accumulates un-normalized gradients into g (caller scales by 1/count).
void backward_batch(const RnnParams& p, const WindowBatch& wb,
                    const BatchForward& f, double pos_weight, FloatMat& d_w_xh,
                    FloatMat& d_w_hh, std::vector<double>& d_b_h,
                    std::vector<double>& d_w_ro, double& d_b_ro) {
    size_t hd = p.hidden_dim();
    FloatMat whh_t = transpose(p.w_hh);  // [out,in] view for the h-chain
    FloatMat g_a(wb.b, hd), g_h(wb.b, hd);
    bool have_next = false;
    for (size_t t = wb.m; t-- > 0;) {
        std::vector<float> dz(wb.b, 0.0f);
        for (size_t r = 0; r < wb.b; ++r)
            if (wb.mask[t][r])
                dz[r] = static_cast<float>(
                    dloss_dz(f.z[t][r], wb.y[t][r], pos_weight));
        for (size_t r = 0; r < wb.b; ++r) {
            float* row = g_h.row(r);
            float d = dz[r];
            for (size_t j = 0; j < hd; ++j) row[j] = d * p.w_ro[j];
        }
        if (have_next)
            gemm_f32(g_a.data.data(), whh_t.data.data(), g_h.data.data(), wb.b,
                     hd, hd);
        const FloatMat& ht = f.h[t];
        for (size_t i = 0; i < g_h.data.size(); ++i) {
            float h = ht.data[i];
            g_a.data[i] = g_h.data[i] * (1.0f - h * h);
        }
        gemm_f32(wb.xt_t[t].data.data(), g_a.data.data(), d_w_xh.data.data(),
                 wb.d, wb.b, hd);
        if (t > 0) {
            FloatMat hprev_t = transpose(f.h[t - 1]);
            gemm_f32(hprev_t.data.data(), g_a.data.data(), d_w_hh.data.data(),
                     hd, wb.b, hd);
        }
        for (size_t r = 0; r < wb.b; ++r) {
            const float* ga = g_a.row(r);
            const float* hr = ht.row(r);
            double d = dz[r];
            for (size_t j = 0; j < hd; ++j) {
                d_b_h[j] += ga[j];
                d_w_ro[j] += d * hr[j];
            }
            d_b_ro += d;
        }
        have_next = true;
    }
}

RnnGrads grads_from_batches(const RnnParams& p,
                            const std::vector<WindowBatch>& batches,
                            double pos_weight) {
    size_t d = p.input_dim(), hd = p.hidden_dim();
    RnnGrads g;
    g.d_w_xh = FloatMat(d, hd);
    g.d_w_hh = FloatMat(hd, hd);
    std::vector<double> db(hd, 0.0), dro(hd, 0.0);
    double dbro = 0.0;
    size_t count = 0;
    for (const WindowBatch& wb : batches) {
        BatchForward f = forward_batch(p, wb);
        backward_batch(p, wb, f, pos_weight, g.d_w_xh, g.d_w_hh, db, dro, dbro);
        count += wb.unmasked;
    }
    if (count == 0) throw ContractError("detector: no unmasked labeled events");
    float inv = 1.0f / static_cast<float>(count);
    for (float& v : g.d_w_xh.data) v *= inv;
    for (float& v : g.d_w_hh.data) v *= inv;
    g.d_b_h.resize(hd);
    g.d_w_ro.resize(hd);
    for (size_t j = 0; j < hd; ++j) {
        g.d_b_h[j] = static_cast<float>(db[j] / static_cast<double>(count));
        g.d_w_ro[j] = static_cast<float>(dro[j] / static_cast<double>(count));
    }
    g.d_b_ro = static_cast<float>(dbro / static_cast<double>(count));
    return g;
}

}  // namespace

void RnnParams::verify() const {
    size_t d = w_xh.rows, h = w_xh.cols;
    if (d == 0 || h == 0) throw ContractError("detector: empty parameter shapes");
    if (w_hh.rows != h || w_hh.cols != h)
        throw ContractError("detector: W_hh must be hidden x hidden");
    if (b_h.size() != h || w_ro.size() != h)
        throw ContractError("detector: bias/readout length mismatch");
    for (float v : w_xh.data)
        if (!std::isfinite(v)) throw ContractError("detector: non-finite W_xh");
    for (float v : w_hh.data)
        if (!std::isfinite(v)) throw ContractError("detector: non-finite W_hh");
}

void DetectorConfig::validate() const {
    if (window_size == 0) throw ConfigError("detector: window_size must be >= 1");
    if (hidden == 0) throw ConfigError("detector: hidden must be >= 1");
    if (!(learning_rate >= 0.0))
        throw ConfigError("detector: learning rate must be >= 0");
    if (epochs < 0) throw ConfigError("detector: epochs must be >= 0");
    if (!(threshold >= 0.0 && threshold <= 1.0))
        throw ConfigError("detector: threshold must lie in [0,1]");
    if (!(pos_weight > 0.0))
        throw ConfigError("detector: pos_weight must be > 0");
    if (batch_size < 0) throw ConfigError("detector: batch_size must be >= 0");
}

std::vector<Window> partition_windows(const FloatMat& embeddings,
                                      const std::vector<uint8_t>& labels,
                                      const WindowSpec& spec) {
    if (spec.window_size == 0)
        throw ConfigError("detector: window_size must be >= 1");
    size_t n = embeddings.rows, d = embeddings.cols, m = spec.window_size;
    if (labels.size() != n)
        throw ContractError("detector: labels not aligned with embeddings");
    std::vector<Window> out;
    if (n == 0) return out;
    size_t count = (n + m - 1) / m;
    out.reserve(count);
    for (size_t w = 0; w < count; ++w) {
        Window win;
        win.start = w * m;
        win.x = FloatMat(m, d);
        win.y.assign(m, 0.0f);
        win.mask.assign(m, 0);
        for (size_t t = 0; t < m; ++t) {
            size_t idx = w * m + t;
            if (idx >= n) break;
            std::copy(embeddings.row(idx), embeddings.row(idx) + d,
                      win.x.row(t));
            win.y[t] = labels[idx] ? 1.0f : 0.0f;
            win.mask[t] = 1;
        }
        out.push_back(std::move(win));
    }
    return out;
}

RnnParams init_detector(size_t input_dim, size_t hidden, uint64_t seed) {
    if (input_dim == 0 || hidden == 0)
        throw ConfigError("detector: dimensions must be positive");
    RnnParams p;
    p.w_xh = FloatMat(input_dim, hidden);
    p.w_hh = FloatMat(hidden, hidden);
    p.b_h.assign(hidden, 0.0f);
    p.w_ro.assign(hidden, 0.0f);
    p.b_ro = 0.0f;
    Rng rng(seed);
    for (float& v : p.w_xh.data) v = static_cast<float>(rng.normal(0.0, 0.02));
    for (float& v : p.w_hh.data) v = static_cast<float>(rng.normal(0.0, 0.02));
    for (float& v : p.w_ro) v = static_cast<float>(rng.normal(0.0, 0.02));
    return p;
}

PredictionSeq rnn_forward(const RnnParams& p, const Window& w,
                          double threshold) {
    p.verify();
    if (w.x.cols != p.input_dim())
        throw ContractError("detector: embedding dim " +
                            std::to_string(w.x.cols) + " != params input dim " +
                            std::to_string(p.input_dim()));
    size_t m = w.x.rows, d = w.x.cols, hd = p.hidden_dim();
    PredictionSeq seq;
    seq.prob.resize(m);
    seq.decision.resize(m);
    std::vector<float> h(hd, 0.0f), a(hd);
    for (size_t t = 0; t < m; ++t) {
        fill_bias(a.data(), p.b_h.data(), 1, hd);
        gemm_f32(w.x.row(t), p.w_xh.data.data(), a.data(), 1, d, hd);
        if (t > 0) gemm_f32(h.data(), p.w_hh.data.data(), a.data(), 1, hd, hd);
        for (size_t j = 0; j < hd; ++j) h[j] = std::tanh(a[j]);
        float z = p.b_ro;
        for (size_t j = 0; j < hd; ++j) z += h[j] * p.w_ro[j];
        float prob = sigmoidf(z);
        seq.prob[t] = prob;
        seq.decision[t] = prob >= threshold ? 1 : 0;
    }
    return seq;
}

double detector_loss(const RnnParams& p, const std::vector<Window>& windows,
                     double pos_weight) {
    if (windows.empty()) throw ContractError("detector: no windows");
    WindowBatch wb = make_batch(windows, 0, windows.size());
    BatchForward f = forward_batch(p, wb);
    return loss_from_forward(f, wb, pos_weight);
}

RnnGrads detector_grad(const RnnParams& p, const std::vector<Window>& windows,
                       double pos_weight) {
    if (windows.empty()) throw ContractError("detector: no windows");
    std::vector<WindowBatch> batches;
    batches.push_back(make_batch(windows, 0, windows.size()));
    return grads_from_batches(p, batches, pos_weight);
}

DetectorTrainResult train_detector(const std::vector<Window>& windows,
                                   size_t input_dim,
                                   const DetectorConfig& cfg) {
    cfg.validate();
    if (windows.empty()) throw ContractError("detector: no training windows");
    if (windows[0].x.cols != input_dim)
        throw ContractError("detector: windows do not match input_dim");

    DetectorTrainResult res;
    res.params = init_detector(input_dim, cfg.hidden, cfg.seed);
    RnnParams& p = res.params;

    size_t nw = windows.size();
    size_t bs = cfg.batch_size <= 0 ? nw : static_cast<size_t>(cfg.batch_size);
    std::vector<WindowBatch> batches;
    for (size_t lo = 0; lo < nw; lo += bs)
        batches.push_back(make_batch(windows, lo, std::min(nw, lo + bs)));
    WindowBatch full = make_batch(windows, 0, nw);

    auto epoch_loss = [&]() {
        BatchForward f = forward_batch(p, full);
        return loss_from_forward(f, full, cfg.pos_weight);
    };

    // The saturating recurrence can keep the loss finite even after a runaway
    // update, so overflowing parameters count as divergence in their own right.
    auto params_finite = [&]() {
        auto ok = [](const std::vector<float>& v) {
            for (float x : v)
                if (!std::isfinite(x)) return false;
            return true;
        };
        return ok(p.w_xh.data) && ok(p.w_hh.data) && ok(p.b_h) &&
               ok(p.w_ro) && std::isfinite(p.b_ro);
    };

    float lr = static_cast<float>(cfg.learning_rate);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double loss = epoch_loss();
        if (!std::isfinite(loss))
            throw NumericError("detector: loss diverged at epoch " +
                               std::to_string(epoch));
        res.loss_trace.push_back(loss);
        for (WindowBatch& wb : batches) {
            std::vector<WindowBatch> one;
            one.push_back(std::move(wb));
            RnnGrads g = grads_from_batches(p, one, cfg.pos_weight);
            wb = std::move(one[0]);
            for (size_t i = 0; i < p.w_xh.data.size(); ++i)
                p.w_xh.data[i] -= lr * g.d_w_xh.data[i];
            for (size_t i = 0; i < p.w_hh.data.size(); ++i)
                p.w_hh.data[i] -= lr * g.d_w_hh.data[i];
            for (size_t j = 0; j < p.b_h.size(); ++j) {
                p.b_h[j] -= lr * g.d_b_h[j];
                p.w_ro[j] -= lr * g.d_w_ro[j];
            }
            p.b_ro -= lr * g.d_b_ro;
        }
        if (!params_finite())
            throw NumericError("detector: training diverged at epoch " +
                               std::to_string(epoch + 1));
    }
    double final_loss = epoch_loss();
    if (!std::isfinite(final_loss))
        throw NumericError("detector: loss diverged at epoch " +
                           std::to_string(cfg.epochs));
    res.loss_trace.push_back(final_loss);
    return res;
}

EventPredictions predict_events(const RnnParams& p,
                                const std::vector<Window>& windows,
                                double threshold, size_t max_threads) {
    p.verify();
    std::vector<PredictionSeq> per_window(windows.size());
    parallel_for(windows.size(), max_threads, [&](size_t b, size_t e) {
        for (size_t w = b; w < e; ++w)
            per_window[w] = rnn_forward(p, windows[w], threshold);
    });
    EventPredictions out;
    for (size_t w = 0; w < windows.size(); ++w) {
        const Window& win = windows[w];
        for (size_t t = 0; t < win.mask.size(); ++t) {
            if (!win.mask[t]) continue;
            out.prob.push_back(per_window[w].prob[t]);
            out.decision.push_back(per_window[w].decision[t]);
        }
    }
    return out;
}

void save_detector(const std::string& path, const RnnParams& p,
                   const DetectorConfig& cfg) {
    p.verify();
    size_t d = p.input_dim(), hd = p.hidden_dim();
    std::vector<Tensor> ts;
    ts.push_back(
        make_f32_tensor("detector.w_xh", {hd, d}, transpose(p.w_xh).data));
    ts.push_back(
        make_f32_tensor("detector.w_hh", {hd, hd}, transpose(p.w_hh).data));
    ts.push_back(make_f32_tensor("detector.b_h", {hd}, p.b_h));
    ts.push_back(make_f32_tensor("detector.w_ro", {hd}, p.w_ro));
    ts.push_back(make_f32_tensor("detector.b_ro", {1}, {p.b_ro}));
    write_container(path, ts);
    json man;
    man["window_size"] = cfg.window_size;
    man["hidden"] = hd;
    man["input_dim"] = d;
    man["threshold"] = cfg.threshold;
    man["pos_weight"] = cfg.pos_weight;
    std::ofstream os(path + ".json", std::ios::trunc);
    if (!os) throw FormatError("cannot write detector manifest: " + path);
    os << man.dump(2) << '\n';
}

RnnParams load_detector(const std::string& path, DetectorConfig& cfg_out) {
    std::vector<Tensor> ts = read_container(path);
    for (const char* name : {"detector.w_xh", "detector.w_hh", "detector.b_h",
                             "detector.w_ro", "detector.b_ro"})
        if (!has_tensor(ts, name))
            throw FormatError(std::string("detector container missing ") + name +
                              ": " + path);
    const Tensor& wxh = find_tensor(ts, "detector.w_xh");
    const Tensor& whh = find_tensor(ts, "detector.w_hh");
    if (wxh.dims.size() != 2 || whh.dims.size() != 2)
        throw FormatError("detector weight tensors must be rank-2: " + path);
    size_t hd = static_cast<size_t>(wxh.dims[0]);
    size_t d = static_cast<size_t>(wxh.dims[1]);
    RnnParams p;
    FloatMat stored(hd, d);
    stored.data = wxh.f32;
    p.w_xh = transpose(stored);
    FloatMat stored_hh(hd, hd);
    if (whh.dims[0] != hd || whh.dims[1] != hd)
        throw FormatError("detector: W_hh shape mismatch: " + path);
    stored_hh.data = whh.f32;
    p.w_hh = transpose(stored_hh);
    p.b_h = find_tensor(ts, "detector.b_h").f32;
    p.w_ro = find_tensor(ts, "detector.w_ro").f32;
    const Tensor& bro = find_tensor(ts, "detector.b_ro");
    if (bro.f32.size() != 1)
        throw FormatError("detector: b_ro must hold one value: " + path);
    p.b_ro = bro.f32[0];
    p.verify();

    std::ifstream is(path + ".json");
    if (!is) throw MissingArtifactError("detector manifest missing: " + path +
                                        ".json");
    json man;
    try {
        is >> man;
        cfg_out.window_size = man.at("window_size").get<size_t>();
        cfg_out.hidden = man.at("hidden").get<size_t>();
        cfg_out.threshold = man.at("threshold").get<double>();
        if (man.contains("pos_weight"))
            cfg_out.pos_weight = man["pos_weight"].get<double>();
    } catch (const json::exception& e) {
        throw FormatError("detector manifest malformed: " + path + ".json (" +
                          e.what() + ")");
    }
    if (cfg_out.hidden != hd)
        throw FormatError("detector manifest hidden dim disagrees with tensors: " +
                          path);
    return p;
}

void write_predictions_csv(const std::string& path,
                           const EventPredictions& pred,
                           const std::vector<uint8_t>& labels) {
    if (labels.size() != pred.prob.size())
        throw ContractError("predictions: label count mismatch");
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write predictions: " + path);
    os << "index,probability,decision,label\n";
    char buf[64];
    for (size_t i = 0; i < pred.prob.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(pred.prob[i]));
        os << i << ',' << buf << ',' << int(pred.decision[i]) << ','
           << int(labels[i]) << '\n';
    }
}

}  // namespace logsem
