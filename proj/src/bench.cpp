#include "logsem/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "logsem/errors.hpp"
#include "logsem/rng.hpp"

namespace logsem {

using nlohmann::json;

ConfusionCounts confusion_counts(const std::vector<uint8_t>& predicted,
                                 const std::vector<uint8_t>& truth) {
    if (predicted.size() != truth.size())
        throw ContractError("confusion: prediction/truth length mismatch");
    ConfusionCounts c;
    for (size_t i = 0; i < predicted.size(); ++i) {
        bool p = predicted[i] != 0, t = truth[i] != 0;
        if (p && t) ++c.tp;
        else if (p && !t) ++c.fp;
        else if (!p && t) ++c.fn;
        else ++c.tn;
    }
    return c;
}

DetectionMetrics precision_recall_f1(const ConfusionCounts& c) {
    DetectionMetrics m;
    double tp = static_cast<double>(c.tp);
    double pden = tp + static_cast<double>(c.fp);
    double rden = tp + static_cast<double>(c.fn);
    m.precision = pden > 0.0 ? tp / pden : 0.0;
    m.recall = rden > 0.0 ? tp / rden : 0.0;
    double s = m.precision + m.recall;
    m.f1 = s > 0.0 ? 2.0 * m.precision * m.recall / s : 0.0;
    return m;
}

namespace {
std::atomic<bool> g_timing_active{false};
}

TimingReport time_run(const std::function<void()>& fn, size_t event_count,
                      size_t cpu_core_budget, int warmup) {
    if (warmup < 0) throw ConfigError("timing: warmup must be >= 0");
    TimingReport r;
    r.event_count = event_count;
    r.cpu_core_budget = cpu_core_budget == 0 ? 1 : cpu_core_budget;
    r.warmup_runs = warmup;
    if (event_count == 0) {
        r.degenerate = true;
        return r;
    }
    bool expected = false;
    if (!g_timing_active.compare_exchange_strong(expected, true))
        throw ContractError("timing: a benchmark is already running in this process");
    try {
        for (int i = 0; i < warmup; ++i) fn();
        double samples[3];
        for (int i = 0; i < 3; ++i) {
            auto t0 = std::chrono::steady_clock::now();
            fn();
            auto t1 = std::chrono::steady_clock::now();
            samples[i] = std::chrono::duration<double>(t1 - t0).count();
        }
        std::sort(samples, samples + 3);
        r.total_seconds = samples[1];
        r.measured_runs = 3;
        r.avg_ms_per_event =
            1000.0 * r.total_seconds / static_cast<double>(event_count);
    } catch (...) {
        g_timing_active.store(false);
        throw;
    }
    g_timing_active.store(false);
    return r;
}

double cosine(const float* a, const float* b, size_t n) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < n; ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double cosine_mean(const FloatMat& a, const FloatMat& b) {
    if (a.rows != b.rows)
        throw ContractError("cosine_mean: row count mismatch");
    if (a.cols != b.cols)
        throw ContractError("cosine_mean: dimension mismatch");
    if (a.rows == 0) throw ContractError("cosine_mean: empty input");
    double acc = 0.0;
    for (size_t i = 0; i < a.rows; ++i) acc += cosine(a.row(i), b.row(i), a.cols);
    return acc / static_cast<double>(a.rows);
}

std::vector<double> average_ranks(const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::stable_sort(idx.begin(), idx.end(),
                     [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
        double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

SpearmanResult spearman_rho(const std::vector<double>& x,
                            const std::vector<double>& y) {
    size_t n = x.size();
    if (y.size() != n) throw ContractError("spearman: length mismatch");
    if (n < 3) throw ContractError("spearman: need at least 3 observations");
    for (double v : x)
        if (!std::isfinite(v)) throw NumericError("spearman: non-finite input");
    for (double v : y)
        if (!std::isfinite(v)) throw NumericError("spearman: non-finite input");
    auto constant = [](const std::vector<double>& v) {
        for (double u : v)
            if (u != v[0]) return false;
        return true;
    };
    if (constant(x) || constant(y))
        throw NumericError("spearman: correlation undefined for constant input");

    std::vector<double> rx = average_ranks(x), ry = average_ranks(y);
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double dx = rx[i] - mx, dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    SpearmanResult r;
    r.rho = sxy / std::sqrt(sxx * syy);
    if (r.rho > 1.0) r.rho = 1.0;
    if (r.rho < -1.0) r.rho = -1.0;
    double nf = static_cast<double>(n);
    if (std::abs(r.rho) >= 1.0) {
        r.t_statistic = std::numeric_limits<double>::infinity() *
                        (r.rho > 0 ? 1.0 : -1.0);
        r.approx_p_value = 0.0;
    } else {
        r.t_statistic = r.rho * std::sqrt((nf - 2.0) / (1.0 - r.rho * r.rho));
        r.approx_p_value = std::erfc(std::abs(r.t_statistic) / std::sqrt(2.0));
    }
    return r;
}

SimilarityReport embedding_similarity(const FloatMat& a, const FloatMat& b,
                                      size_t pairs, uint64_t seed) {
    if (a.rows != b.rows)
        throw ContractError("similarity: embedding counts differ");
    if (a.rows < 2)
        throw ContractError("similarity: need at least 2 embeddings");
    if (pairs < 3) throw ConfigError("similarity: need at least 3 sampled pairs");

    SimilarityReport rep;
    rep.pair_sample = pairs;
    rep.seed = seed;
    rep.flags.push_back("pairwise-similarity-ranks");
    rep.flags.push_back("normal-approx-p");

    Rng rng(seed);
    std::vector<double> sa(pairs), sb(pairs);
    size_t n = a.rows;
    for (size_t k = 0; k < pairs; ++k) {
        size_t i = static_cast<size_t>(rng.uniform_index(n));
        size_t j = static_cast<size_t>(rng.uniform_index(n - 1));
        if (j >= i) ++j;
        sa[k] = cosine(a.row(i), a.row(j), a.cols);
        sb[k] = cosine(b.row(i), b.row(j), b.cols);
    }
    SpearmanResult s = spearman_rho(sa, sb);
    rep.spearman_rho = s.rho;
    rep.t_statistic = s.t_statistic;
    rep.approx_p_value = s.approx_p_value;

    if (a.cols == b.cols) {
        rep.cosine_mean = cosine_mean(a, b);
    } else {
        rep.cosine_mean = std::numeric_limits<double>::quiet_NaN();
        rep.flags.push_back("cosine-skipped-dim-mismatch");
    }
    return rep;
}

namespace {

std::string fmt(double v, const char* spec) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

}  // namespace

void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write metrics csv: " + path);
    os << "model,representation,precision,recall,f1\n";
    for (const MetricsRow& r : rows)
        os << r.model << ',' << r.representation << ','
           << fmt(100.0 * r.metrics.precision, "%.2f") << ','
           << fmt(100.0 * r.metrics.recall, "%.2f") << ','
           << fmt(100.0 * r.metrics.f1, "%.2f") << '\n';
}

void write_timing_csv(const std::string& path,
                      const std::vector<TimingRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write timing csv: " + path);
    os << "method,system,cores,total_s,avg_ms\n";
    for (const TimingRow& r : rows)
        os << r.method << ',' << r.system << ',' << r.cores << ','
           << fmt(r.total_s, "%.6f") << ',' << fmt(r.avg_ms, "%.6f") << '\n';
}

std::string timing_report_json(const TimingReport& r) {
    json j;
    j["total_seconds"] = r.total_seconds;
    j["avg_ms_per_event"] = r.avg_ms_per_event;
    j["event_count"] = r.event_count;
    j["cpu_core_budget"] = r.cpu_core_budget;
    j["warmup_runs"] = r.warmup_runs;
    j["measured_runs"] = r.measured_runs;
    j["degenerate"] = r.degenerate;
    return j.dump(2);
}

std::string similarity_report_json(const SimilarityReport& r) {
    json j;
    if (std::isnan(r.cosine_mean))
        j["cosine_mean"] = nullptr;
    else
        j["cosine_mean"] = r.cosine_mean;
    j["spearman_rho"] = r.spearman_rho;
    if (std::isinf(r.t_statistic))
        j["t_statistic"] = r.t_statistic > 0 ? "inf" : "-inf";
    else
        j["t_statistic"] = r.t_statistic;
    j["approx_p_value"] = r.approx_p_value;
    j["pair_sample"] = r.pair_sample;
    j["seed"] = r.seed;
    j["flags"] = r.flags;
    return j.dump(2);
}

}  // namespace logsem
