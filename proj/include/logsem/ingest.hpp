#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

namespace logsem {

struct RawLogRecord {
    size_t line_no = 0;
    std::string raw_text;
};

// One extraction rule per field.  The rule is either a regex whose first
// capture group (or whole match) is the value, or a column spec:
//   "col:N"   -> whitespace-separated column N (0-based)
//   "col:N-"  -> everything from column N to end of line
struct FieldSpec {
    std::string name;
    std::string rule;
    // compiled form
    bool is_column = false;
    size_t column = 0;
    bool column_to_end = false;
    std::regex re;
};

struct FieldLayout {
    std::vector<FieldSpec> field_specs;
    std::vector<std::string> required;
};

struct MaskRule {
    std::string pattern;
    std::string replacement;
    std::regex re;  // compiled at load
};

enum class Label : uint8_t { Normal = 0, Anomalous = 1, Unknown = 2 };

struct LogEvent {
    size_t index = 0;
    std::optional<double> timestamp;
    std::string text;
    Label label = Label::Unknown;
};

struct Dataset {
    std::vector<LogEvent> events;
    size_t skipped_count = 0;
};

// Well-known field names.  "label" maps "-", "0", "" and "normal"
// (case-insensitive) to Normal, anything else to Anomalous; a missing or
// unconfigured label yields Unknown.
extern const std::vector<std::string> kKnownFields;

// Masks the paper-style variables: IPv4 (including a trailing "*" octet),
// absolute paths, hex ids of length >= 8 containing at least one letter.
std::vector<MaskRule> default_masks();

// Validates and compiles a layout + masks; throws ConfigError on malformed
// regexes, unknown required fields, duplicate names, or non-lowercase mask
// replacements.
void compile_layout(FieldLayout& layout);
void compile_masks(std::vector<MaskRule>& masks);

// JSON schema: {"fields":[{"name":..,"regex":..}],"required":[..],
//               "masks":[{"pattern":..,"replacement":..}]}
// A missing "masks" key falls back to default_masks().
void layout_from_json_text(const std::string& json_text, FieldLayout& layout,
                           std::vector<MaskRule>& masks);
void load_layout_file(const std::string& path, FieldLayout& layout,
                      std::vector<MaskRule>& masks);

// Returns the extracted field map, or nullopt (skip) when a required field
// is missing or the line is empty.
std::optional<std::map<std::string, std::string>> parse_raw_line(
    const RawLogRecord& record, const FieldLayout& layout);

// Mask-substitute (declaration order), lowercase, squash non-alphabetic
// runs to single spaces, trim; repeated until the text stops changing.
// Total, and idempotent with the default masks.
std::string preprocess_text(const std::map<std::string, std::string>& fields,
                            const std::vector<MaskRule>& masks);
std::string preprocess_text(const std::string& text,
                            const std::vector<MaskRule>& masks);

// Parse + preprocess + chronological sort (stable on ties), indices
// reassigned 0..N-1.  Events whose text preprocesses to nothing keep the
// sentinel word "empty".  Throws on unreadable file or zero survivors.
Dataset load_dataset(const std::string& path, const FieldLayout& layout,
                     const std::vector<MaskRule>& masks, int threads = 1);

// JSONL round-trip for ingested events ({"index","timestamp","text","label"}
// per line).
void save_events_jsonl(const std::string& path, const std::vector<LogEvent>& events);
std::vector<LogEvent> load_events_jsonl(const std::string& path);

const char* label_name(Label l);

}  // namespace logsem
