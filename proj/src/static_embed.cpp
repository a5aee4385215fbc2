#include "logsem/static_embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "logsem/errors.hpp"
#include "logsem/parallel.hpp"

namespace logsem {

EmbeddingTable load_embedding_table(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open embedding table: " + path);
    EmbeddingTable table;
    table.name = path;
    std::string line;
    size_t ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        std::vector<float> vec;
        float v;
        while (ss >> v) vec.push_back(v);
        if (word.empty() || vec.empty())
            throw FormatError(path + ":" + std::to_string(ln) + ": malformed row");
        if (table.dimension == 0) table.dimension = vec.size();
        if (vec.size() != table.dimension)
            throw FormatError(path + ":" + std::to_string(ln) +
                              ": row length " + std::to_string(vec.size()) +
                              " != dimension " + std::to_string(table.dimension));
        if (table.vectors.count(word)) ++table.duplicate_count;
        table.vectors[word] = std::move(vec);  // last occurrence wins
    }
    if (table.vectors.empty()) throw FormatError("empty embedding table: " + path);
    return table;
}

double IdfModel::idf(const std::string& word) const {
    double n = static_cast<double>(doc_count);
    auto it = doc_freq.find(word);
    double df = it == doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((n + 1.0) / (df + 1.0)) + 1.0;
}

IdfModel fit_idf(const std::vector<LogTemplate>& templates) {
    if (templates.empty()) throw ContractError("fit_idf: no templates");
    IdfModel model;
    model.doc_count = templates.size();
    for (const LogTemplate& t : templates) {
        std::set<std::string> uniq(t.tokens.begin(), t.tokens.end());
        uniq.erase(kWildcard);
        for (const std::string& w : uniq) ++model.doc_freq[w];
    }
    return model;
}

std::vector<float> embed_event(const std::vector<std::string>& event_tokens,
                               const EmbeddingTable& table, const IdfModel& idf) {
    std::vector<float> out(table.dimension, 0.0f);
    double wsum = 0.0;
    std::vector<double> acc(table.dimension, 0.0);
    // Each distinct word contributes once, in first-appearance order, with
    // tf counted over the event's own token list.
    for (size_t i = 0; i < event_tokens.size(); ++i) {
        const std::string& word = event_tokens[i];
        bool seen = false;
        for (size_t j = 0; j < i && !seen; ++j) seen = event_tokens[j] == word;
        if (seen) continue;
        auto it = table.vectors.find(word);
        if (it == table.vectors.end()) continue;  // OOV skipped
        size_t count = 0;
        for (const std::string& t : event_tokens) count += t == word;
        double w = static_cast<double>(count) * idf.idf(word);
        wsum += w;
        const std::vector<float>& v = it->second;
        for (size_t d = 0; d < table.dimension; ++d) acc[d] += w * v[d];
    }
    if (wsum > 0.0)
        for (size_t d = 0; d < table.dimension; ++d)
            out[d] = static_cast<float>(acc[d] / wsum);
    return out;
}

FloatMat embed_events_static(const std::vector<std::string>& texts,
                             const EmbeddingTable& table, const IdfModel& idf,
                             int threads) {
    FloatMat out(texts.size(), table.dimension);
    parallel_for(texts.size(), threads, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            std::vector<float> v = embed_event(tokenize_ws(texts[i]), table, idf);
            std::copy(v.begin(), v.end(), out.row(i));
        }
    });
    return out;
}

}  // namespace logsem
