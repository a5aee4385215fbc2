#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace logsem {

struct DrainConfig {
    int tree_depth = 4;               // >= 3: root + internal levels + leaf
    double similarity_threshold = 0.4;  // in (0,1)
    int max_children = 100;           // per internal node, overflow -> "<*>"
};

inline constexpr const char* kWildcard = "<*>";

struct LogTemplate {
    int64_t template_id = 0;
    std::vector<std::string> tokens;  // parameter positions hold "<*>"
    size_t support_count = 0;
};

// Fixed-depth parse tree: root children keyed by token count, then
// (tree_depth - 2) levels keyed by leading tokens (digit-bearing tokens and
// child overflow both route to the "<*>" child), then leaf groups.
class ParseTree {
  public:
    explicit ParseTree(DrainConfig cfg);

    // Match-or-create; mutates the matched template (mismatching positions
    // become wildcards) and bumps its support count.
    int64_t mine_template(const std::vector<std::string>& event_tokens);

    const LogTemplate& get_template(int64_t id) const;
    const std::vector<LogTemplate>& templates() const { return templates_; }
    size_t mined_count() const { return mined_; }
    const DrainConfig& config() const { return cfg_; }

  private:
    struct Node {
        std::map<std::string, std::unique_ptr<Node>> children;
        std::vector<size_t> group_ids;  // leaf payload
    };

    DrainConfig cfg_;
    std::map<size_t, std::unique_ptr<Node>> root_;  // key: token count
    std::vector<LogTemplate> templates_;
    size_t mined_ = 0;
};

std::vector<std::string> tokenize_ws(const std::string& text);

// JSON table export/import: [{"id":..,"tokens":[..],"support":..}]
void save_templates_json(const std::string& path,
                         const std::vector<LogTemplate>& templates);
std::vector<LogTemplate> load_templates_json(const std::string& path);

}  // namespace logsem
