// Acceptance gate: twelve end-to-end checks, one PASS/FAIL line each.
// Usage: acceptance <logsem-binary> <gencorpus-binary>
// Exit status = number of failed criteria.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "logsem/bench.hpp"
#include "logsem/detector.hpp"
#include "logsem/encoder.hpp"
#include "logsem/enhancer.hpp"
#include "logsem/ingest.hpp"
#include "logsem/mat.hpp"
#include "logsem/quant.hpp"
#include "logsem/rng.hpp"

using namespace logsem;
namespace fs = std::filesystem;

namespace {

struct CheckFail : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& msg) {
    if (!ok) throw CheckFail(msg);
}

int g_failures = 0;

void run_criterion(int n, double budget_s,
                   const std::function<std::string()>& fn) {
    auto t0 = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;
    try {
        detail = fn();
    } catch (const std::exception& e) {
        ok = false;
        detail = e.what();
    }
    double elapsed = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    if (ok && budget_s > 0.0 && elapsed > budget_s) {
        char b[96];
        std::snprintf(b, sizeof b, "exceeded the %.0f s runtime budget",
                      budget_s);
        ok = false;
        detail = b;
    }
    std::printf("criterion %2d: %s -- %s [%.2fs]\n", n, ok ? "PASS" : "FAIL",
                detail.c_str(), elapsed);
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    expect(is.good(), "cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    expect(end && *end == '\0' && end != s.c_str(),
           what + " is not numeric: \"" + s + "\"");
    return v;
}

int run_cmd(const std::string& cmd) {
    int status = std::system(cmd.c_str());
    if (status == -1) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return -1;
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

bool all_equal_values(const std::vector<float>& a,
                      const std::vector<float>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!(a[i] == b[i])) return false;
    return true;
}

// ---------------------------------------------------------------- criterion 1

std::string c1_metric_fidelity() {
    // tp/(tp+fp) = 0.9365 and tp/(tp+fn) = 0.8642 hold as exact rationals,
    // so correctly rounded division reproduces the decimal literals bitwise.
    ConfusionCounts c;
    c.tp = 80932330;
    c.fp = 5487670;   // tp + fp = 86,420,000
    c.fn = 12717670;  // tp + fn = 93,650,000
    c.tn = 650000000;
    DetectionMetrics m = precision_recall_f1(c);
    expect(m.precision == 0.9365, "precision must equal 93.65% exactly");
    expect(m.recall == 0.8642, "recall must equal 86.42% exactly");
    expect(std::fabs(100.0 * m.f1 - 89.89) <= 0.01,
           "F1 must land within 0.01 of 89.89");

    Rng rng(20260825);
    for (int i = 0; i < 20; ++i) {
        ConfusionCounts t;
        t.tp = rng.uniform_index(1000000);
        t.fp = rng.uniform_index(1000000);
        t.fn = rng.uniform_index(1000000);
        t.tn = rng.uniform_index(1000000);
        DetectionMetrics got = precision_recall_f1(t);
        double tp = static_cast<double>(t.tp);
        double pden = tp + static_cast<double>(t.fp);
        double rden = tp + static_cast<double>(t.fn);
        double p = pden > 0.0 ? tp / pden : 0.0;
        double r = rden > 0.0 ? tp / rden : 0.0;
        double s = p + r;
        double f1 = s > 0.0 ? 2.0 * p * r / s : 0.0;
        expect(got.precision == p && got.recall == r && got.f1 == f1,
               "randomized table " + std::to_string(i) +
                   " deviates from the direct formula");
    }
    char b[96];
    std::snprintf(b, sizeof b,
                  "F1=%.4f%% from constructed counts; 20 random tables exact",
                  100.0 * m.f1);
    return b;
}

// ---------------------------------------------------------------- criterion 2

std::string c2_quant_roundtrip() {
    Rng rng(77);
    size_t checked = 0;
    double worst_ratio = 0.0;
    for (int t = 0; t < 1000; ++t) {
        size_t n = 64 + rng.uniform_index(193);
        double lo = -rng.uniform(0.1, 4.0);
        double hi = rng.uniform(0.1, 6.0);
        std::vector<float> x(n);
        for (float& v : x) v = static_cast<float>(rng.uniform(lo, hi));

        ActivationStats st;
        st.observe(x.data(), n);
        st.prepare_hist(st.min_v, st.max_v);
        st.observe_hist(x.data(), n);
        QuantParams qp = activation_quant_params(st, QuantPolicy{0.0});

        // scale/2 is the mathematical bound; the integer zero-point and the
        // float cast of the scale shift the grid ends by a few 1e-5 relative,
        // so allow that much headroom (a real defect costs a whole step).
        double half = 0.5 * static_cast<double>(qp.scale) * (1.0 + 1e-4);
        for (float v : x) {
            uint8_t q = quantize_value_u8(v, qp);
            float dq = dequantize_value_u8(q, qp);
            double err = std::fabs(static_cast<double>(dq) -
                                   static_cast<double>(v));
            worst_ratio =
                std::max(worst_ratio, err / (0.5 * static_cast<double>(qp.scale)));
            expect(err <= half, "roundtrip error above scale/2");
            ++checked;
        }

        std::vector<float> sorted = x;
        std::sort(sorted.begin(), sorted.end());
        uint8_t prev_q = quantize_value_u8(sorted[0], qp);
        float prev_dq = dequantize_value_u8(prev_q, qp);
        for (size_t i = 1; i < n; ++i) {
            uint8_t q = quantize_value_u8(sorted[i], qp);
            float dq = dequantize_value_u8(q, qp);
            expect(q >= prev_q, "codes must be monotone on sorted inputs");
            expect(dq >= prev_dq,
                   "dequantized values must be monotone on sorted inputs");
            prev_q = q;
            prev_dq = dq;
        }
    }
    char b[128];
    std::snprintf(b, sizeof b,
                  "%zu roundtrips within scale/2 (worst err ratio %.6f); "
                  "monotone on sorted inputs",
                  checked, worst_ratio);
    return b;
}

// ---------------------------------------------------------------- criterion 3

std::string c3_calibration_specificity() {
    EncoderConfig cfg;
    cfg.num_layers = 2;
    cfg.hidden_size = 32;
    cfg.num_heads = 4;
    cfg.intermediate_size = 64;
    cfg.max_seq_len = 16;

    const int kWords = 15;
    std::vector<std::string> words{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (int i = 0; i < kWords; ++i) words.push_back("alpha" + std::to_string(i));
    for (int i = 0; i < kWords; ++i) words.push_back("beta" + std::to_string(i));
    Vocab vocab = Vocab::from_tokens(words);
    cfg.vocab_size = static_cast<int>(vocab.size());

    auto make_texts = [&](Rng& rng, const std::string& stem, int count) {
        std::vector<std::string> out;
        for (int i = 0; i < count; ++i) {
            int len = 4 + static_cast<int>(rng.uniform_index(4));
            std::string s;
            for (int k = 0; k < len; ++k) {
                if (k) s += ' ';
                s += stem + std::to_string(rng.uniform_index(kWords));
            }
            out.push_back(std::move(s));
        }
        return out;
    };

    // ceil(0.999 * count) = count, i.e. quantize everything
    std::vector<std::string> selection = select_layers(cfg, 0.999);
    QuantPolicy policy{0.0};
    const size_t H = static_cast<size_t>(cfg.hidden_size);

    int matched_wins = 0;
    const int kTrials = 100;
    for (int trial = 0; trial < kTrials; ++trial) {
        Rng rng(9000 + trial);
        EncoderWeights w = random_init(cfg, 9000 + trial);
        // Two vocab regimes with opposite-sign spike channels: the two
        // calibration sets see very different activation ranges, so the
        // mismatched scale clips the regime it never saw.
        for (int i = 0; i < 2 * kWords; ++i) {
            float* row = w.tok_emb.row(static_cast<size_t>(4 + i));
            for (size_t c = 0; c < H; ++c)
                row[c] = static_cast<float>(rng.normal(0.0, 0.05));
            row[rng.uniform_index(H)] = i < kWords ? 30.0f : -30.0f;
        }

        std::vector<std::string> calib_a = make_texts(rng, "alpha", 20);
        std::vector<std::string> calib_b = make_texts(rng, "beta", 20);
        std::vector<std::string> eval_a = make_texts(rng, "alpha", 20);

        auto stats_a = collect_stats(w, vocab, CalibrationSet{"a", calib_a});
        auto stats_b = collect_stats(w, vocab, CalibrationSet{"b", calib_b});
        QuantizedEncoder qa = quantize_encoder(w, stats_a, selection, policy);
        QuantizedEncoder qb = quantize_encoder(w, stats_b, selection, policy);

        FloatMat ref = embed_events(w, vocab, eval_a);
        FloatMat ea = quantized_embed_events(qa, vocab, eval_a);
        FloatMat eb = quantized_embed_events(qb, vocab, eval_a);
        auto mse = [&](const FloatMat& m) {
            double acc = 0.0;
            for (size_t i = 0; i < m.data.size(); ++i) {
                double d = static_cast<double>(m.data[i]) -
                           static_cast<double>(ref.data[i]);
                acc += d * d;
            }
            return acc / static_cast<double>(m.data.size());
        };
        if (mse(ea) < mse(eb)) ++matched_wins;
    }
    expect(matched_wins >= 95, "matched calibration won only " +
                                   std::to_string(matched_wins) +
                                   "/100 trials");
    return "matched-calibration MSE strictly lower in " +
           std::to_string(matched_wins) + "/100 trials";
}

// ---------------------------------------------------------------- criterion 4

std::string c4_layer_selection() {
    EncoderConfig student;
    student.num_layers = 4;
    student.hidden_size = 312;
    student.num_heads = 12;
    student.intermediate_size = 1248;
    student.max_seq_len = 128;
    student.vocab_size = 1000;
    EncoderConfig teacher;
    teacher.num_layers = 12;
    teacher.hidden_size = 768;
    teacher.num_heads = 12;
    teacher.intermediate_size = 3072;
    teacher.max_seq_len = 128;
    teacher.vocab_size = 1000;

    auto check = [&](const EncoderConfig& cfg, size_t total, size_t want) {
        std::vector<std::string> names = linear_layer_names(cfg);
        expect(names.size() == total,
               "expected " + std::to_string(total) + " linear layers");
        std::vector<std::string> sel = select_layers(cfg, 0.2);
        expect(sel.size() == want,
               "selection must pick " + std::to_string(want) + " of " +
                   std::to_string(total) + " layers, got " +
                   std::to_string(sel.size()));
        std::set<std::string> seen;
        for (const std::string& s : sel) {
            expect(std::find(names.begin(), names.end(), s) != names.end(),
                   "selected an unknown layer: " + s);
            expect(seen.insert(s).second, "duplicate selection: " + s);
        }
    };
    check(student, 24, 5);
    check(teacher, 72, 15);
    return "fraction 0.2 selects 5/24 (student) and 15/72 (teacher) layers";
}

// ---------------------------------------------------------------- criterion 5

// Double-precision mirror of the enhancer objective for finite differences.
double enhancer_mse_ref(const std::vector<double>& theta, size_t r, size_t ds,
                        size_t dt, const EmbeddingPairs& pairs) {
    const double* A = theta.data();           // r x ds
    const double* B = theta.data() + r * ds;  // dt x r
    size_t n = pairs.h_s.rows;
    std::vector<double> proj(r);
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const float* hs = pairs.h_s.row(i);
        const float* ht = pairs.h_t.row(i);
        for (size_t j = 0; j < r; ++j) {
            double a = 0.0;
            for (size_t k = 0; k < ds; ++k)
                a += A[j * ds + k] * static_cast<double>(hs[k]);
            proj[j] = a;
        }
        for (size_t t = 0; t < dt; ++t) {
            double y = t < ds ? static_cast<double>(hs[t]) : 0.0;
            for (size_t j = 0; j < r; ++j) y += B[t * r + j] * proj[j];
            double d = y - static_cast<double>(ht[t]);
            acc += d * d;
        }
    }
    return acc / static_cast<double>(n);
}

std::string c5_enhancer() {
    // (a) a zero factor must reduce the map to the zero-padded identity
    {
        Rng rng(50);
        std::vector<float> h(4);
        for (float& v : h) v = static_cast<float>(rng.uniform(-2.0, 2.0));
        for (int which = 0; which < 2; ++which) {
            EnhancerParams p = init_enhancer(3, 4, 6, 51 + which);
            if (which == 0)
                std::fill(p.A.data.begin(), p.A.data.end(), 0.0f);
            else
                std::fill(p.B.data.begin(), p.B.data.end(), 0.0f);
            std::vector<float> y = enhance(p, h);
            expect(y.size() == 6, "enhanced vector must have dimension d_T");
            for (size_t i = 0; i < 4; ++i)
                expect(y[i] == h[i],
                       "zero factor must reproduce the input exactly");
            for (size_t i = 4; i < 6; ++i)
                expect(y[i] == 0.0f, "zero factor must zero-pad the tail");
        }
    }

    // (b) analytic gradients vs central differences on the double mirror
    {
        const size_t r = 2, ds = 3, dt = 4, n = 5;
        Rng rng(55);
        EmbeddingPairs pairs;
        pairs.h_s = FloatMat(n, ds);
        pairs.h_t = FloatMat(n, dt);
        for (float& v : pairs.h_s.data)
            v = static_cast<float>(rng.normal(0.0, 1.0));
        for (float& v : pairs.h_t.data)
            v = static_cast<float>(rng.normal(0.0, 1.0));
        EnhancerParams p = init_enhancer(r, ds, dt, 56);

        std::vector<double> theta;
        for (float v : p.A.data) theta.push_back(v);
        for (float v : p.B.data) theta.push_back(v);
        EnhancerGrads g = enhancer_grad(p, pairs);
        std::vector<double> analytic;
        for (float v : g.dA.data) analytic.push_back(v);
        for (float v : g.dB.data) analytic.push_back(v);

        const double step = 1e-5;
        double max_fd = 0.0, max_diff = 0.0;
        for (size_t k = 0; k < theta.size(); ++k) {
            std::vector<double> tp = theta, tm = theta;
            tp[k] += step;
            tm[k] -= step;
            double fd = (enhancer_mse_ref(tp, r, ds, dt, pairs) -
                         enhancer_mse_ref(tm, r, ds, dt, pairs)) /
                        (2.0 * step);
            max_fd = std::max(max_fd, std::fabs(fd));
            max_diff = std::max(max_diff, std::fabs(fd - analytic[k]));
        }
        expect(max_fd > 0.0, "finite differences must be nonzero");
        expect(max_diff / max_fd <= 1e-4,
               "enhancer gradient relative error above 1e-4");
    }

    // (c) a rank-r linear teacher must be driven to <= 1% of the initial MSE
    const size_t ds = 6, dt = 10, r = 3, n = 40;
    Rng rng(57);
    FloatMat a_true(r, ds), b_true(dt, r);
    for (float& v : a_true.data) v = static_cast<float>(rng.normal(0.0, 0.6));
    for (float& v : b_true.data) v = static_cast<float>(rng.normal(0.0, 0.6));
    EmbeddingPairs pairs;
    pairs.h_s = FloatMat(n, ds);
    for (float& v : pairs.h_s.data)
        v = static_cast<float>(rng.normal(0.0, 1.0));
    pairs.h_t = FloatMat(n, dt);
    for (size_t i = 0; i < n; ++i) {
        const float* hs = pairs.h_s.row(i);
        float* ht = pairs.h_t.row(i);
        std::vector<double> proj(r, 0.0);
        for (size_t j = 0; j < r; ++j)
            for (size_t k = 0; k < ds; ++k)
                proj[j] += static_cast<double>(a_true.at(j, k)) *
                           static_cast<double>(hs[k]);
        for (size_t t = 0; t < dt; ++t) {
            double acc = t < ds ? static_cast<double>(hs[t]) : 0.0;
            for (size_t j = 0; j < r; ++j)
                acc += static_cast<double>(b_true.at(t, j)) * proj[j];
            ht[t] = static_cast<float>(acc);
        }
    }
    EnhancerTrainConfig tc;
    tc.learning_rate = 0.02;
    tc.epochs = 500;
    tc.seed = 58;
    tc.batch_size = 0;
    EnhancerTrainResult res = train_enhancer(pairs, r, tc);
    expect(res.loss_trace.size() == 501, "loss trace must hold epochs+1 points");
    double first = res.loss_trace.front(), last = res.loss_trace.back();
    expect(first > 0.0, "initial MSE must be positive");
    expect(last <= 0.01 * first, "final MSE above 1% of the initial MSE");

    char b[128];
    std::snprintf(b, sizeof b,
                  "identity exact; gradcheck ok; linear-teacher MSE %.3g -> "
                  "%.3g (%.2f%%)",
                  first, last, 100.0 * last / first);
    return b;
}

// ---------------------------------------------------------------- criterion 6

// Independent double-precision RNN forward: per-step probabilities plus the
// masked mean BCE, parameters flattened as w_xh|w_hh|b_h|w_ro|b_ro.
double softplus_ref(double v) {
    return v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
}

double rnn_loss_ref(const std::vector<double>& theta, size_t d, size_t h,
                    const std::vector<Window>& windows, double pos_weight) {
    const double* w_xh = theta.data();
    const double* w_hh = w_xh + d * h;
    const double* b_h = w_hh + h * h;
    const double* w_ro = b_h + h;
    double b_ro = theta[d * h + h * h + h + h];
    double acc = 0.0;
    size_t count = 0;
    for (const Window& w : windows) {
        size_t m = w.x.rows;
        std::vector<double> hp(h, 0.0), hc(h);
        for (size_t t = 0; t < m; ++t) {
            for (size_t j = 0; j < h; ++j) {
                double a = b_h[j];
                for (size_t i = 0; i < d; ++i)
                    a += static_cast<double>(w.x.at(t, i)) * w_xh[i * h + j];
                for (size_t k = 0; k < h; ++k) a += hp[k] * w_hh[k * h + j];
                hc[j] = std::tanh(a);
            }
            double z = b_ro;
            for (size_t j = 0; j < h; ++j) z += hc[j] * w_ro[j];
            if (w.mask[t]) {
                acc += w.y[t] > 0.5f ? pos_weight * softplus_ref(-z)
                                     : softplus_ref(z);
                ++count;
            }
            hp = hc;
        }
    }
    return acc / static_cast<double>(count);
}

std::vector<double> flatten_params(const RnnParams& p) {
    std::vector<double> theta;
    for (float v : p.w_xh.data) theta.push_back(v);
    for (float v : p.w_hh.data) theta.push_back(v);
    for (float v : p.b_h) theta.push_back(v);
    for (float v : p.w_ro) theta.push_back(v);
    theta.push_back(p.b_ro);
    return theta;
}

std::vector<float> flatten_grads(const RnnGrads& g) {
    std::vector<float> flat;
    for (float v : g.d_w_xh.data) flat.push_back(v);
    for (float v : g.d_w_hh.data) flat.push_back(v);
    for (float v : g.d_b_h) flat.push_back(v);
    for (float v : g.d_w_ro) flat.push_back(v);
    flat.push_back(g.d_b_ro);
    return flat;
}

std::string c6_detector() {
    // (a) BPTT vs central differences, d=3 h=4 m=5, padded tail included
    {
        const size_t d = 3, h = 4, m = 5;
        Rng rng(60);
        std::vector<Window> windows;
        for (size_t wi = 0; wi < 2; ++wi) {
            Window w;
            w.start = wi * m;
            w.x = FloatMat(m, d);
            w.y.assign(m, 0.0f);
            w.mask.assign(m, 1);
            size_t real = wi == 1 ? m - 2 : m;
            for (size_t t = 0; t < m; ++t) {
                if (t >= real) {
                    w.mask[t] = 0;
                    continue;
                }
                for (size_t i = 0; i < d; ++i)
                    w.x.at(t, i) = static_cast<float>(rng.uniform(-1.0, 1.0));
                w.y[t] = rng.uniform() < 0.4 ? 1.0f : 0.0f;
            }
            windows.push_back(std::move(w));
        }
        RnnParams p = init_detector(d, h, 61);
        for (float& v : p.w_xh.data)
            v = static_cast<float>(rng.uniform(-0.8, 0.8));
        for (float& v : p.w_hh.data)
            v = static_cast<float>(rng.uniform(-0.8, 0.8));
        for (float& v : p.b_h) v = static_cast<float>(rng.uniform(-0.8, 0.8));
        for (float& v : p.w_ro) v = static_cast<float>(rng.uniform(-0.8, 0.8));
        p.b_ro = static_cast<float>(rng.uniform(-0.8, 0.8));

        for (double pw : {1.0, 1.7}) {
            std::vector<double> theta = flatten_params(p);
            std::vector<float> analytic = flatten_grads(detector_grad(p, windows, pw));
            const double step = 1e-5;
            double max_fd = 0.0, max_diff = 0.0;
            for (size_t k = 0; k < theta.size(); ++k) {
                std::vector<double> tp = theta, tm = theta;
                tp[k] += step;
                tm[k] -= step;
                double fd = (rnn_loss_ref(tp, d, h, windows, pw) -
                             rnn_loss_ref(tm, d, h, windows, pw)) /
                            (2.0 * step);
                max_fd = std::max(max_fd, std::fabs(fd));
                max_diff = std::max(
                    max_diff, std::fabs(fd - static_cast<double>(analytic[k])));
            }
            expect(max_fd > 0.0, "finite differences must be nonzero");
            expect(max_diff / max_fd <= 1e-4,
                   "BPTT gradient relative error above 1e-4");
        }
    }

    // (b) linearly separable embeddings reach F1 >= 0.99 within 20 epochs
    double f1 = 0.0;
    {
        const size_t n = 96, d = 3;
        Rng rng(62);
        FloatMat emb(n, d);
        std::vector<uint8_t> labels(n);
        for (size_t i = 0; i < n; ++i) {
            labels[i] = rng.uniform() < 0.3 ? 1 : 0;
            for (size_t j = 0; j < d; ++j)
                emb.at(i, j) = static_cast<float>(rng.normal(0.0, 0.05));
            if (labels[i]) emb.at(i, 0) += 10.0f;
        }
        std::vector<Window> windows =
            partition_windows(emb, labels, WindowSpec{8});
        DetectorConfig dc;
        dc.window_size = 8;
        dc.hidden = 8;
        dc.learning_rate = 0.5;
        dc.epochs = 20;
        dc.threshold = 0.5;
        dc.pos_weight = 1.0;
        dc.seed = 63;
        dc.batch_size = 0;
        DetectorTrainResult res = train_detector(windows, d, dc);
        EventPredictions pred = predict_events(res.params, windows, dc.threshold);
        ConfusionCounts cc = confusion_counts(pred.decision, labels);
        f1 = precision_recall_f1(cc).f1;
        expect(f1 >= 0.99, "separable training reached only F1=" +
                               std::to_string(f1) + " after 20 epochs");
    }

    // (c) trailing padding must leave loss, gradients and predictions alone
    {
        const size_t n = 23, d = 4, m = 5;
        Rng rng(64);
        FloatMat emb(n, d);
        for (float& v : emb.data) v = static_cast<float>(rng.uniform(-1.0, 1.0));
        std::vector<uint8_t> labels(n);
        for (auto& b : labels) b = rng.uniform() < 0.4 ? 1 : 0;
        std::vector<Window> padded =
            partition_windows(emb, labels, WindowSpec{m});
        RnnParams p = init_detector(d, 6, 65);

        // masked positions must be dead weight: overwriting the zero padding
        // with garbage may not change any result
        std::vector<Window> garbage = padded;
        {
            Window& tail = garbage.back();
            for (size_t t = 0; t < m; ++t) {
                if (tail.mask[t]) continue;
                for (size_t i = 0; i < d; ++i) tail.x.at(t, i) = 123.456f;
                tail.y[t] = 1.0f;
            }
        }
        expect(detector_loss(p, padded) == detector_loss(p, garbage),
               "masked content must not change the loss");
        expect(all_equal_values(flatten_grads(detector_grad(p, padded)),
                                flatten_grads(detector_grad(p, garbage))),
               "masked content must not change the gradients");
        EventPredictions pp = predict_events(p, padded, 0.5);
        EventPredictions pg = predict_events(p, garbage, 0.5);
        expect(pp.prob.size() == n && pg.prob.size() == n,
               "predictions must cover every event exactly once");
        expect(all_equal_values(pp.prob, pg.prob) && pp.decision == pg.decision,
               "masked content must not change the predictions");

        // the padded tail alone must agree with its truncated counterpart
        // (single-window batches, so the shapes may legally differ)
        std::vector<Window> tail_only{padded.back()};
        std::vector<Window> trunc_only;
        {
            const Window& tail = padded.back();
            size_t real = 0;
            for (uint8_t mk : tail.mask) real += mk;
            expect(real > 0 && real < m, "tail window should be partial");
            Window tw;
            tw.start = tail.start;
            tw.x = FloatMat(real, d);
            std::copy(tail.x.row(0), tail.x.row(real), tw.x.data.begin());
            tw.y.assign(tail.y.begin(), tail.y.begin() + real);
            tw.mask.assign(real, 1);
            trunc_only.push_back(std::move(tw));
        }
        expect(detector_loss(p, tail_only) == detector_loss(p, trunc_only),
               "padding must not change the loss");
        expect(all_equal_values(flatten_grads(detector_grad(p, tail_only)),
                                flatten_grads(detector_grad(p, trunc_only))),
               "padding must not change the gradients");
        EventPredictions pt = predict_events(p, tail_only, 0.5);
        EventPredictions pu = predict_events(p, trunc_only, 0.5);
        expect(all_equal_values(pt.prob, pu.prob) && pt.decision == pu.decision,
               "padding must not change the tail predictions");
    }

    char b[96];
    std::snprintf(b, sizeof b,
                  "gradcheck ok; separable F1=%.4f in 20 epochs; padding "
                  "invariant",
                  f1);
    return b;
}

// ---------------------------------------------------------------- criterion 7

std::string c7_efficiency() {
    EncoderConfig tcfg;
    tcfg.num_layers = 12;
    tcfg.hidden_size = 768;
    tcfg.num_heads = 12;
    tcfg.intermediate_size = 3072;
    tcfg.max_seq_len = 16;
    EncoderConfig scfg;
    scfg.num_layers = 4;
    scfg.hidden_size = 312;
    scfg.num_heads = 12;
    scfg.intermediate_size = 1248;
    scfg.max_seq_len = 16;

    std::vector<std::string> words{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (int i = 0; i < 40; ++i) words.push_back("event" + std::to_string(i));
    Vocab vocab = Vocab::from_tokens(words);
    tcfg.vocab_size = static_cast<int>(vocab.size());
    scfg.vocab_size = static_cast<int>(vocab.size());

    Rng rng(70);
    std::vector<std::string> texts;
    texts.reserve(5000);
    for (int i = 0; i < 5000; ++i)
        texts.push_back("event" + std::to_string(rng.uniform_index(40)));

    EncoderWeights teacher = random_init(tcfg, 71);
    EncoderWeights student = random_init(scfg, 72);

    CalibrationSet calib;
    calib.system_id = "synthetic";
    calib.texts.assign(texts.begin(), texts.begin() + 100);
    auto stats = collect_stats(student, vocab, calib, 64);
    std::vector<std::string> sel = select_layers(scfg, 0.2);
    QuantizedEncoder q = quantize_encoder(student, stats, sel, QuantPolicy{0.1});
    EnhancerParams enh = init_enhancer(64, 312, 768, 73);

    EmbedOptions opts;
    opts.batch_size = 256;
    opts.threads = 1;

    FloatMat s_emb;
    TimingReport rs = time_run(
        [&] { s_emb = quantized_embed_events(q, vocab, texts, opts); },
        texts.size(), 1, 0);
    TimingReport re = time_run(
        [&] {
            FloatMat out = enhance_batch(enh, s_emb);
            (void)out;
        },
        texts.size(), 1, 0);
    TimingReport rt = time_run(
        [&] {
            FloatMat out = embed_events(teacher, vocab, texts, opts);
            (void)out;
        },
        texts.size(), 1, 0);

    double student_total = rs.total_seconds + re.total_seconds;
    double speedup = rt.total_seconds / student_total;
    double overhead = re.total_seconds / rs.total_seconds;
    char b[192];
    std::snprintf(b, sizeof b,
                  "teacher %.2fs vs student+enhancer %.2fs (%.1fx); enhancer "
                  "adds %.2f%%",
                  rt.total_seconds, student_total, speedup, 100.0 * overhead);
    expect(speedup >= 3.0, std::string("speedup below 3x: ") + b);
    expect(overhead <= 0.02,
           std::string("enhancer overhead above 2%: ") + b);
    return b;
}

// ---------------------------------------------------------------- criterion 8

std::string c8_dimension_and_latency() {
    EncoderConfig tcfg;
    tcfg.num_layers = 2;
    tcfg.hidden_size = 64;
    tcfg.num_heads = 4;
    tcfg.intermediate_size = 128;
    tcfg.max_seq_len = 32;
    EncoderConfig scfg;
    scfg.num_layers = 2;
    scfg.hidden_size = 32;
    scfg.num_heads = 4;
    scfg.intermediate_size = 64;
    scfg.max_seq_len = 32;

    std::vector<std::string> words{"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
    for (int i = 0; i < 30; ++i) words.push_back("svc" + std::to_string(i));
    Vocab vocab = Vocab::from_tokens(words);
    tcfg.vocab_size = static_cast<int>(vocab.size());
    scfg.vocab_size = static_cast<int>(vocab.size());

    Rng rng(80);
    std::vector<std::string> texts;
    for (int i = 0; i < 200; ++i) {
        int len = 3 + static_cast<int>(rng.uniform_index(6));
        std::string s;
        for (int k = 0; k < len; ++k) {
            if (k) s += ' ';
            s += "svc" + std::to_string(rng.uniform_index(30));
        }
        texts.push_back(std::move(s));
    }

    EncoderWeights teacher = random_init(tcfg, 81);
    EncoderWeights student = random_init(scfg, 82);
    CalibrationSet calib;
    calib.system_id = "tiny";
    calib.texts.assign(texts.begin(), texts.begin() + 60);
    auto stats = collect_stats(student, vocab, calib, 64);
    QuantizedEncoder q = quantize_encoder(
        student, stats, select_layers(scfg, 0.2), QuantPolicy{0.1});

    EmbedOptions opts;
    EmbeddingPairs pairs;
    pairs.h_s = quantized_embed_events(q, vocab, texts, opts);
    pairs.h_t = embed_events(teacher, vocab, texts, opts);

    EnhancerTrainConfig ec;
    ec.learning_rate = 1e-3;
    ec.epochs = 10;
    ec.seed = 83;
    EnhancerTrainResult er = train_enhancer(pairs, 8, ec);
    FloatMat qty = enhance_batch(er.params, pairs.h_s);
    expect(qty.cols == er.params.d_t &&
               qty.cols == static_cast<size_t>(tcfg.hidden_size),
           "enhanced embeddings must have the teacher dimension d_T");

    // identical detector over equal-dimension inputs: latency must agree
    const size_t reps = 500;
    const size_t rows = texts.size() * reps;
    FloatMat big_q(rows, qty.cols), big_t(rows, pairs.h_t.cols);
    for (size_t r = 0; r < reps; ++r) {
        std::copy(qty.data.begin(), qty.data.end(),
                  big_q.data.begin() + r * qty.data.size());
        std::copy(pairs.h_t.data.begin(), pairs.h_t.data.end(),
                  big_t.data.begin() + r * pairs.h_t.data.size());
    }
    std::vector<uint8_t> y(rows, 0);
    std::vector<Window> windows_q = partition_windows(big_q, y, WindowSpec{16});
    std::vector<Window> windows_t = partition_windows(big_t, y, WindowSpec{16});
    RnnParams det = init_detector(qty.cols, 32, 84);

    TimingReport tq = time_run(
        [&] { predict_events(det, windows_q, 0.5, 1); }, rows, 1, 1);
    TimingReport tt = time_run(
        [&] { predict_events(det, windows_t, 0.5, 1); }, rows, 1, 1);
    double rel = std::fabs(tq.total_seconds - tt.total_seconds) /
                 std::max(tq.total_seconds, tt.total_seconds);
    char b[160];
    std::snprintf(b, sizeof b,
                  "d_T=%zu; detection %.3fs vs %.3fs (%.1f%% apart)",
                  qty.cols, tq.total_seconds, tt.total_seconds, 100.0 * rel);
    expect(rel <= 0.10, std::string("detection latency gap above 10%: ") + b);
    return b;
}

// ---------------------------------------------------------------- criterion 9

std::string c9_windowing() {
    Rng rng(90);
    size_t total_windows = 0;
    for (int t = 0; t < 200; ++t) {
        size_t n = 1 + rng.uniform_index(380);
        size_t m = 1 + rng.uniform_index(50);
        size_t d = 1 + rng.uniform_index(6);
        FloatMat emb(n, d);
        for (float& v : emb.data) v = static_cast<float>(rng.uniform(-3.0, 3.0));
        std::vector<uint8_t> y(n);
        for (auto& b : y) b = rng.uniform() < 0.5 ? 1 : 0;

        std::vector<Window> ws = partition_windows(emb, y, WindowSpec{m});
        expect(ws.size() == (n + m - 1) / m, "window count must be ceil(N/m)");
        size_t covered = 0;
        for (size_t wi = 0; wi < ws.size(); ++wi) {
            const Window& w = ws[wi];
            expect(w.start == wi * m, "windows must tile the stream in order");
            expect(w.x.rows == m && w.x.cols == d, "window must be m x d");
            expect(w.y.size() == m && w.mask.size() == m,
                   "labels and mask must have length m");
            for (size_t step = 0; step < m; ++step) {
                size_t idx = w.start + step;
                if (idx < n) {
                    expect(w.mask[step] == 1, "real rows must be unmasked");
                    expect(std::memcmp(w.x.row(step), emb.row(idx),
                                       d * sizeof(float)) == 0,
                           "window row must equal the source row");
                    expect(w.y[step] == (y[idx] ? 1.0f : 0.0f),
                           "window label must match the source");
                    ++covered;
                } else {
                    expect(w.mask[step] == 0, "padded rows must be masked out");
                    for (size_t c = 0; c < d; ++c)
                        expect(w.x.at(step, c) == 0.0f,
                               "padded rows must be zero");
                }
            }
        }
        expect(covered == n, "every event must be covered exactly once");
        total_windows += ws.size();
    }
    return "200 random (N,m) partitions exact-once and in order (" +
           std::to_string(total_windows) + " windows)";
}

// --------------------------------------------------------------- criterion 10

std::string c10_similarity() {
    Rng rng(100);
    for (int t = 0; t < 100; ++t) {
        size_t n = 3 + rng.uniform_index(48);
        std::vector<double> x(n), y(n);
        for (auto& v : x)
            v = static_cast<double>(rng.uniform_index(8));  // forces ties
        for (auto& v : y) v = rng.uniform(-5.0, 5.0);
        if (*std::max_element(x.begin(), x.end()) ==
            *std::min_element(x.begin(), x.end()))
            x[0] += 1.5;  // a constant series has no defined correlation

        // brute-force average ranks + Pearson oracle
        auto ranks = [](const std::vector<double>& v) {
            std::vector<double> r(v.size());
            for (size_t i = 0; i < v.size(); ++i) {
                size_t smaller = 0, equal = 0;
                for (double o : v) {
                    if (o < v[i]) ++smaller;
                    if (o == v[i]) ++equal;
                }
                r[i] = static_cast<double>(smaller) +
                       (static_cast<double>(equal) + 1.0) / 2.0;
            }
            return r;
        };
        std::vector<double> rx = ranks(x), ry = ranks(y);
        double mx = 0.0, my = 0.0;
        for (size_t i = 0; i < n; ++i) {
            mx += rx[i];
            my += ry[i];
        }
        mx /= static_cast<double>(n);
        my /= static_cast<double>(n);
        double sxy = 0.0, sxx = 0.0, syy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            sxy += (rx[i] - mx) * (ry[i] - my);
            sxx += (rx[i] - mx) * (rx[i] - mx);
            syy += (ry[i] - my) * (ry[i] - my);
        }
        double want = sxy / std::sqrt(sxx * syy);

        SpearmanResult got = spearman_rho(x, y);
        expect(std::fabs(got.rho - want) <= 1e-10,
               "spearman deviates from the brute-force rank oracle");
    }

    // crafted exact cosine cases: norms with perfect-square products
    FloatMat a(3, 2), b(3, 2);
    a.at(0, 0) = 2.0f;  b.at(0, 0) = 4.0f;   // parallel      -> 1
    a.at(1, 1) = 3.0f;  b.at(1, 0) = 5.0f;   // orthogonal    -> 0
    a.at(2, 0) = 2.0f;  b.at(2, 0) = -4.0f;  // antiparallel  -> -1
    expect(cosine(a.row(0), b.row(0), 2) == 1.0, "parallel cosine must be 1");
    expect(cosine(a.row(1), b.row(1), 2) == 0.0,
           "orthogonal cosine must be 0");
    expect(cosine(a.row(2), b.row(2), 2) == -1.0,
           "antiparallel cosine must be -1");
    float zero[2] = {0.0f, 0.0f};
    expect(cosine(zero, b.row(0), 2) == 0.0,
           "zero-norm cosine must be 0 by definition");
    expect(cosine_mean(a, b) == 0.0, "mean of {1,0,-1} must be exactly 0");
    return "100 spearman cases within 1e-10 of the rank oracle; cosine "
           "(+1, 0, -1) exact";
}

// --------------------------------------------------------------- criterion 11

std::string c11_end_to_end(const std::string& logsem,
                           const std::string& gencorpus) {
    fs::path scratch = fs::absolute("acceptance_scratch");
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    // the generated config uses relative paths, so run from inside
    fs::current_path(scratch);

    expect(run_cmd(quote(gencorpus) +
                   " --out-dir data --train 1000 --test 400 --seed 42"
                   " > gencorpus.log 2>&1") == 0,
           "corpus generation failed");
    expect(fs::exists("data/config.json"),
           "the corpus generator must write data/config.json");

    // exit-code contract: 1 = config problem, 2 = missing upstream artifact
    expect(run_cmd(quote(logsem) +
                   " --config no_such_config.json ingest > probe1.log 2>&1") ==
               1,
           "a bad config path must exit 1");
    expect(run_cmd(quote(logsem) +
                   " --config data/config.json --out-dir out_missing quantize"
                   " > probe2.log 2>&1") == 2,
           "a missing upstream artifact must exit 2");

    const std::vector<std::string> steps = {
        "ingest",
        "mine-templates",
        "init-encoder",
        "calibrate",
        "quantize",
        "train-enhancer",
        "embed",
        "embed --representation teacher",
        "embed --representation static:word2vec",
        "train-detector",
        "detect",
        "compare-embeddings",
    };
    int log_no = 0;
    auto run_step = [&](const std::string& s) {
        std::string cmd = quote(logsem) + " --config data/config.json " + s +
                          " > step" + std::to_string(log_no++) + ".log 2>&1";
        expect(run_cmd(cmd) == 0, "step `" + s + "` must exit 0");
    };
    for (const std::string& s : steps) run_step(s);
    run_step("bench-embed");
    run_step("bench-detect");

    // detection metrics table shape
    {
        std::vector<std::string> lines =
            split_lines(read_file("out/metrics_qtybert.csv"));
        expect(lines.size() >= 2,
               "metrics CSV needs a header plus at least one row");
        expect(lines[0] == "model,representation,precision,recall,f1",
               "metrics CSV header mismatch");
        for (size_t i = 1; i < lines.size(); ++i) {
            std::vector<std::string> f = split_csv(lines[i]);
            expect(f.size() == 5, "metrics row must have 5 fields");
            for (size_t k = 2; k < 5; ++k) {
                double v = parse_double(f[k], "metrics field");
                expect(v >= 0.0 && v <= 100.0,
                       "metric percentages must lie in [0,100]");
            }
        }
    }
    // timing table shape
    for (const char* name : {"out/timing_embed.csv", "out/timing_detect.csv"}) {
        std::vector<std::string> lines = split_lines(read_file(name));
        expect(lines.size() >= 2,
               std::string(name) + " needs a header plus at least one row");
        expect(lines[0] == "method,system,cores,total_s,avg_ms",
               std::string(name) + " header mismatch");
        for (size_t i = 1; i < lines.size(); ++i) {
            std::vector<std::string> f = split_csv(lines[i]);
            expect(f.size() == 5, "timing row must have 5 fields");
            expect(parse_double(f[3], "total_s") >= 0.0, "total_s negative");
            expect(parse_double(f[4], "avg_ms") >= 0.0, "avg_ms negative");
        }
    }
    expect(fs::exists("out/predictions_qtybert.csv"),
           "detect must export per-event predictions");
    expect(fs::exists("out/compare_qtybert_vs_teacher.json"),
           "compare-embeddings must export a similarity report");

    // idempotence: rerun every non-benchmark step into the same out dir and
    // demand byte-identical artifacts (timing files excepted)
    fs::remove_all("out_snapshot");
    fs::copy("out", "out_snapshot", fs::copy_options::recursive);
    for (const std::string& s : steps) run_step(s);
    size_t compared = 0;
    for (const auto& entry :
         fs::recursive_directory_iterator("out_snapshot")) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), "out_snapshot");
        if (rel.filename().string().rfind("timing_", 0) == 0) continue;
        fs::path counterpart = fs::path("out") / rel;
        expect(fs::exists(counterpart), "rerun lost artifact " + rel.string());
        expect(read_file(entry.path().string()) ==
                   read_file(counterpart.string()),
               "rerun changed artifact " + rel.string());
        ++compared;
    }
    expect(compared >= 10, "rerun comparison covered too few artifacts");

    // the environment override must redirect artifacts, nothing else
    expect(run_cmd("LOGSEM_OUT_DIR=out_env " + quote(logsem) +
                   " --config data/config.json ingest > env.log 2>&1") == 0,
           "ingest under LOGSEM_OUT_DIR failed");
    expect(fs::exists("out_env/events_train.jsonl"),
           "LOGSEM_OUT_DIR must redirect the artifact directory");
    expect(read_file("out_env/events_train.jsonl") ==
               read_file("out/events_train.jsonl"),
           "the redirected run must produce identical events");

    char b[160];
    std::snprintf(b, sizeof b,
                  "pipeline exit 0; CSV shapes ok; %zu artifacts byte-stable "
                  "on rerun; env override ok",
                  compared);
    return b;
}

// --------------------------------------------------------------- criterion 12

std::string c12_ablation(const std::string& logsem) {
    expect(fs::exists("data/config.json") && fs::exists("out/crosys.lrep") &&
               fs::exists("out/student.lrep"),
           "end-to-end artifacts are required first");
    expect(run_cmd(quote(logsem) +
                   " --config data/config.json ablate > ablate.log 2>&1") == 0,
           "ablate must exit 0");

    std::vector<std::string> lines = split_lines(read_file("out/ablation.csv"));
    expect(!lines.empty() && lines[0] == "variant,precision,recall,f1",
           "ablation CSV header mismatch");
    auto has_row = [&](const std::string& name) {
        for (size_t i = 1; i < lines.size(); ++i)
            if (lines[i].rfind(name + ",", 0) == 0) return true;
        return false;
    };
    for (const char* want :
         {"full", "w/o CroSysEh", "w/o SysBE", "w/o calibration",
          "calib-size=30", "calib-size=50", "calib-size=70",
          "calib-size=100"})
        expect(has_row(want), std::string("ablation row missing: ") + want);
    expect(lines.size() == 9, "ablation CSV must hold exactly 8 variant rows");

    // the no-quant variant must equal the FP32 student path bitwise
    EncoderWeights student = load_weights("out/student.lrep");
    EnhancerParams enh = load_enhancer(
        "out/crosys.lrep", static_cast<size_t>(student.cfg.hidden_size), 0);
    Vocab vocab = Vocab::load("data/vocab.txt");
    std::vector<LogEvent> events = load_events_jsonl("out/events_test.jsonl");
    std::vector<std::string> texts;
    for (const LogEvent& e : events) texts.push_back(e.text);
    EmbedOptions opts;  // batch 64, one thread, as configured
    FloatMat want = enhance_batch(enh, embed_events(student, vocab, texts, opts));
    FloatMat got = load_embedding_matrix("out/ablate/wo_sysbe_test.lrep");
    expect(got.rows == want.rows && got.cols == want.cols,
           "no-quant export shape mismatch");
    expect(std::memcmp(got.data.data(), want.data.data(),
                       got.data.size() * sizeof(float)) == 0,
           "no-quant variant must match the FP32 path bitwise");
    return "8 ablation rows present; no-quant export matches the FP32 path "
           "bitwise";
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 3) {
        std::fprintf(stderr,
                     "usage: acceptance <logsem-binary> <gencorpus-binary>\n");
        return 2;
    }
    const std::string logsem_bin = fs::absolute(argv[1]).string();
    const std::string gencorpus_bin = fs::absolute(argv[2]).string();

    run_criterion(1, 1.0, c1_metric_fidelity);
    run_criterion(2, 5.0, c2_quant_roundtrip);
    run_criterion(3, 30.0, c3_calibration_specificity);
    run_criterion(4, 0.0, c4_layer_selection);
    run_criterion(5, 60.0, c5_enhancer);
    run_criterion(6, 60.0, c6_detector);
    run_criterion(7, 600.0, c7_efficiency);
    run_criterion(8, 120.0, c8_dimension_and_latency);
    run_criterion(9, 0.0, c9_windowing);
    run_criterion(10, 0.0, c10_similarity);
    run_criterion(11, 300.0,
                  [&] { return c11_end_to_end(logsem_bin, gencorpus_bin); });
    run_criterion(12, 0.0, [&] { return c12_ablation(logsem_bin); });

    if (g_failures)
        std::printf("acceptance: %d of 12 criteria failed\n", g_failures);
    else
        std::printf("acceptance: all 12 criteria passed\n");
    return g_failures;
}
