#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "logsem/mat.hpp"

namespace logsem {

struct ConfusionCounts {
    uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

// Fractions in [0,1]; CSV reports render them as percent.
struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

ConfusionCounts confusion_counts(const std::vector<uint8_t>& predicted,
                                 const std::vector<uint8_t>& truth);

// P = TP/(TP+FP), R = TP/(TP+FN), F1 harmonic mean; a zero denominator
// yields 0 for the affected metric.
DetectionMetrics precision_recall_f1(const ConfusionCounts& c);

struct TimingReport {
    double total_seconds = 0.0;
    double avg_ms_per_event = 0.0;  // always 1000 * total / count
    size_t event_count = 0;
    size_t cpu_core_budget = 1;
    int warmup_runs = 0;
    int measured_runs = 0;
    bool degenerate = false;  // event_count == 0
};

// Runs fn `warmup` times untimed, then three timed runs on a monotonic
// clock and reports the median total.  Nested timing in one process is
// refused (ContractError) so runs never contend.
TimingReport time_run(const std::function<void()>& fn, size_t event_count,
                      size_t cpu_core_budget, int warmup = 2);

// Mean cosine similarity over aligned pairs; zero-norm vectors contribute 0.
double cosine_mean(const FloatMat& a, const FloatMat& b);

double cosine(const float* a, const float* b, size_t n);

struct SpearmanResult {
    double rho = 0.0;
    double t_statistic = 0.0;
    double approx_p_value = 1.0;  // two-sided, normal approximation
};

// Average-rank tie handling; rho = Pearson of ranks;
// t = rho * sqrt((n-2)/(1-rho^2)).  n < 3 -> ContractError; a constant
// input has no defined correlation -> NumericError.
SpearmanResult spearman_rho(const std::vector<double>& x,
                            const std::vector<double>& y);

// Ranks with average ties, 1-based (exposed for oracle tests).
std::vector<double> average_ranks(const std::vector<double>& v);

struct SimilarityReport {
    double cosine_mean = 0.0;
    double spearman_rho = 0.0;
    double t_statistic = 0.0;
    double approx_p_value = 1.0;
    size_t pair_sample = 0;
    uint64_t seed = 0;
    std::vector<std::string> flags;  // construction caveats, carried to output
};

// Embedding-space agreement between two reprs of the same events: sample
// `pairs` seeded event pairs (i,j) and rank-correlate cos(a_i,a_j) against
// cos(b_i,b_j).  cosine_mean additionally compares aligned vectors when the
// dimensions match (NaN + flag otherwise).  The pairwise-ranks construction
// is flagged in the report.
SimilarityReport embedding_similarity(const FloatMat& a, const FloatMat& b,
                                      size_t pairs, uint64_t seed);

struct MetricsRow {
    std::string model;
    std::string representation;
    DetectionMetrics metrics;
};

struct TimingRow {
    std::string method;
    std::string system;
    size_t cores = 1;
    double total_s = 0.0;
    double avg_ms = 0.0;
};

// header: model,representation,precision,recall,f1  (metrics as percent)
void write_metrics_csv(const std::string& path,
                       const std::vector<MetricsRow>& rows);
// header: method,system,cores,total_s,avg_ms
void write_timing_csv(const std::string& path,
                      const std::vector<TimingRow>& rows);

std::string timing_report_json(const TimingReport& r);
std::string similarity_report_json(const SimilarityReport& r);

}  // namespace logsem
