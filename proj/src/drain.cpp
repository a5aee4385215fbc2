#include "logsem/drain.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include <json.hpp>

#include "logsem/errors.hpp"

namespace logsem {

using nlohmann::json;

namespace {

bool has_digit(const std::string& s) {
    for (char c : s)
        if (std::isdigit(static_cast<unsigned char>(c))) return true;
    return false;
}

}  // namespace

ParseTree::ParseTree(DrainConfig cfg) : cfg_(cfg) {
    if (cfg_.tree_depth < 3) throw ConfigError("drain: tree_depth must be >= 3");
    if (!(cfg_.similarity_threshold > 0.0 && cfg_.similarity_threshold < 1.0))
        throw ConfigError("drain: similarity_threshold must be in (0,1)");
    if (cfg_.max_children < 1) throw ConfigError("drain: max_children must be >= 1");
}

int64_t ParseTree::mine_template(const std::vector<std::string>& event_tokens) {
    if (event_tokens.empty())
        throw ContractError("drain: empty token list");
    auto& level1 = root_[event_tokens.size()];
    if (!level1) level1 = std::make_unique<Node>();
    Node* cur = level1.get();

    size_t internal_levels = static_cast<size_t>(cfg_.tree_depth - 2);
    size_t walk = std::min(internal_levels, event_tokens.size());
    for (size_t d = 0; d < walk; ++d) {
        std::string key = has_digit(event_tokens[d]) ? kWildcard : event_tokens[d];
        auto it = cur->children.find(key);
        if (it == cur->children.end()) {
            if (cur->children.size() >= static_cast<size_t>(cfg_.max_children))
                key = kWildcard;  // overflow routes to the catch-all child
            auto& slot = cur->children[key];
            if (!slot) slot = std::make_unique<Node>();
            cur = slot.get();
        } else {
            cur = it->second.get();
        }
    }

    // Best group in the leaf by non-wildcard positional similarity.
    double best_sim = -1.0;
    size_t best = 0;
    for (size_t gid : cur->group_ids) {
        const LogTemplate& t = templates_[gid];
        size_t match = 0;
        for (size_t i = 0; i < event_tokens.size(); ++i)
            if (t.tokens[i] != kWildcard && t.tokens[i] == event_tokens[i]) ++match;
        double sim = static_cast<double>(match) /
                     static_cast<double>(event_tokens.size());
        if (sim > best_sim) {
            best_sim = sim;
            best = gid;
        }
    }
    ++mined_;
    if (best_sim >= cfg_.similarity_threshold) {
        LogTemplate& t = templates_[best];
        for (size_t i = 0; i < event_tokens.size(); ++i)
            if (t.tokens[i] != event_tokens[i]) t.tokens[i] = kWildcard;
        ++t.support_count;
        return t.template_id;
    }
    LogTemplate t;
    t.template_id = static_cast<int64_t>(templates_.size());
    t.tokens = event_tokens;
    t.support_count = 1;
    cur->group_ids.push_back(templates_.size());
    templates_.push_back(std::move(t));
    return templates_.back().template_id;
}

const LogTemplate& ParseTree::get_template(int64_t id) const {
    if (id < 0 || static_cast<size_t>(id) >= templates_.size())
        throw ContractError("drain: unknown template id " + std::to_string(id));
    return templates_[static_cast<size_t>(id)];
}

std::vector<std::string> tokenize_ws(const std::string& text) {
    std::vector<std::string> out;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && text[i] == ' ') ++i;
        size_t b = i;
        while (i < text.size() && text[i] != ' ') ++i;
        if (i > b) out.push_back(text.substr(b, i - b));
    }
    return out;
}

void save_templates_json(const std::string& path,
                         const std::vector<LogTemplate>& templates) {
    json arr = json::array();
    for (const LogTemplate& t : templates) {
        json j;
        j["id"] = t.template_id;
        j["tokens"] = t.tokens;
        j["support"] = t.support_count;
        arr.push_back(std::move(j));
    }
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write templates: " + path);
    os << arr.dump(2) << '\n';
}

std::vector<LogTemplate> load_templates_json(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open templates: " + path);
    json arr;
    try {
        is >> arr;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    std::vector<LogTemplate> out;
    for (const auto& j : arr) {
        LogTemplate t;
        t.template_id = j.at("id").get<int64_t>();
        t.tokens = j.at("tokens").get<std::vector<std::string>>();
        t.support_count = j.at("support").get<size_t>();
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace logsem
