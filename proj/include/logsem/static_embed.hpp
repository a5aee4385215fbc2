#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include "logsem/drain.hpp"
#include "logsem/mat.hpp"

namespace logsem {

struct EmbeddingTable {
    size_t dimension = 0;
    std::unordered_map<std::string, std::vector<float>> vectors;
    std::string name;
    size_t duplicate_count = 0;  // duplicate words seen at load (last wins)
};

struct IdfModel {
    size_t doc_count = 0;
    std::unordered_map<std::string, size_t> doc_freq;

    // ln((N+1)/(df+1)) + 1; words never seen get the max-rarity value.
    double idf(const std::string& word) const;
};

// Text format: one line per word, "word v1 v2 ... vd", space separated.
EmbeddingTable load_embedding_table(const std::string& path);

// Documents are the mined templates; the wildcard token is excluded.
IdfModel fit_idf(const std::vector<LogTemplate>& templates);

// TF-IDF weighted mean of in-vocabulary token vectors; all-OOV -> zeros.
std::vector<float> embed_event(const std::vector<std::string>& event_tokens,
                               const EmbeddingTable& table, const IdfModel& idf);

// Convenience: embed a batch of preprocessed texts into an N x d matrix.
FloatMat embed_events_static(const std::vector<std::string>& texts,
                             const EmbeddingTable& table, const IdfModel& idf,
                             int threads = 1);

}  // namespace logsem
