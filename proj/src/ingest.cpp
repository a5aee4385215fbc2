#include "logsem/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "logsem/errors.hpp"
#include "logsem/parallel.hpp"

namespace logsem {

using nlohmann::json;

const std::vector<std::string> kKnownFields = {"timestamp", "severity",
                                               "component", "message", "label"};

std::vector<MaskRule> default_masks() {
    std::vector<MaskRule> m;
    // IPv4, allowing the wildcard last octet seen in anonymized logs.
    m.push_back({R"(\b\d{1,3}(\.\d{1,3}){2}\.(\d{1,3}|\*))", "ip address", {}});
    // Absolute filesystem path.
    m.push_back({R"(/[^\s]+)", "file path", {}});
    // Hex identifier: >= 8 hex chars with at least one letter so plain
    // decimal numbers are left to the non-alphabetic squash.
    m.push_back({R"(\b(?=[0-9a-fA-F]{8})(?=[0-9]*[a-fA-F])[0-9a-fA-F]{8,}\b)",
                 "hex id", {}});
    compile_masks(m);
    return m;
}

namespace {

bool parse_column_rule(const std::string& rule, size_t& col, bool& to_end) {
    if (rule.rfind("col:", 0) != 0) return false;
    std::string body = rule.substr(4);
    if (body.empty()) throw ConfigError("empty column spec: " + rule);
    to_end = body.back() == '-';
    if (to_end) body.pop_back();
    if (body.empty() || body.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("bad column spec: " + rule);
    col = static_cast<size_t>(std::stoul(body));
    return true;
}

std::regex compile_or_throw(const std::string& pattern, const std::string& what) {
    try {
        return std::regex(pattern, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
        throw ConfigError("malformed regex in " + what + ": '" + pattern +
                          "': " + e.what());
    }
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> cols;
    size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        size_t b = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i > b) cols.push_back(s.substr(b, i - b));
    }
    return cols;
}

// Start offset of whitespace column `col`, npos when out of range.
size_t column_offset(const std::string& s, size_t col) {
    size_t i = 0, seen = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        if (seen == col) return i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        ++seen;
    }
    return std::string::npos;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string rtrim_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

Label label_from_string(const std::string& raw) {
    std::string v = lower(raw);
    if (v == "-" || v == "0" || v.empty() || v == "normal") return Label::Normal;
    return Label::Anomalous;
}

}  // namespace

void compile_masks(std::vector<MaskRule>& masks) {
    for (MaskRule& m : masks) {
        for (char c : m.replacement) {
            bool ok = (c == ' ') || (c >= 'a' && c <= 'z');
            if (!ok)
                throw ConfigError("mask replacement must be lowercase words: '" +
                                  m.replacement + "'");
        }
        m.re = compile_or_throw(m.pattern, "mask");
    }
}

void compile_layout(FieldLayout& layout) {
    std::vector<std::string> seen;
    for (FieldSpec& f : layout.field_specs) {
        if (std::find(seen.begin(), seen.end(), f.name) != seen.end())
            throw ConfigError("duplicate field name: " + f.name);
        seen.push_back(f.name);
        f.is_column = parse_column_rule(f.rule, f.column, f.column_to_end);
        if (!f.is_column) f.re = compile_or_throw(f.rule, "field '" + f.name + "'");
    }
    for (const std::string& r : layout.required) {
        if (std::find(kKnownFields.begin(), kKnownFields.end(), r) == kKnownFields.end())
            throw ConfigError("unknown required field: " + r);
        if (std::find(seen.begin(), seen.end(), r) == seen.end())
            throw ConfigError("required field has no extraction rule: " + r);
    }
}

void layout_from_json_text(const std::string& json_text, FieldLayout& layout,
                           std::vector<MaskRule>& masks) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("layout json: ") + e.what());
    }
    layout = FieldLayout{};
    masks.clear();
    if (!j.contains("fields") || !j["fields"].is_array())
        throw ConfigError("layout json: missing 'fields' array");
    for (const auto& f : j["fields"]) {
        FieldSpec spec;
        spec.name = f.at("name").get<std::string>();
        spec.rule = f.at("regex").get<std::string>();
        layout.field_specs.push_back(std::move(spec));
    }
    if (j.contains("required"))
        for (const auto& r : j["required"]) layout.required.push_back(r.get<std::string>());
    if (j.contains("masks")) {
        for (const auto& m : j["masks"])
            masks.push_back({m.at("pattern").get<std::string>(),
                             m.at("replacement").get<std::string>(),
                             {}});
        compile_masks(masks);
    } else {
        masks = default_masks();
    }
    compile_layout(layout);
}

void load_layout_file(const std::string& path, FieldLayout& layout,
                      std::vector<MaskRule>& masks) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open layout config: " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    layout_from_json_text(ss.str(), layout, masks);
}

std::optional<std::map<std::string, std::string>> parse_raw_line(
    const RawLogRecord& record, const FieldLayout& layout) {
    const std::string line = rtrim_newline(record.raw_text);
    if (line.find_first_not_of(" \t") == std::string::npos) return std::nullopt;
    std::map<std::string, std::string> out;
    std::vector<std::string> cols;  // lazy split
    bool split_done = false;
    for (const FieldSpec& f : layout.field_specs) {
        std::string value;
        bool found = false;
        if (f.is_column) {
            if (!split_done) {
                cols = split_ws(line);
                split_done = true;
            }
            if (f.column < cols.size()) {
                if (f.column_to_end) {
                    size_t off = column_offset(line, f.column);
                    value = line.substr(off);
                } else {
                    value = cols[f.column];
                }
                found = true;
            }
        } else {
            std::smatch m;
            if (std::regex_search(line, m, f.re)) {
                value = m.size() > 1 && m[1].matched ? m[1].str() : m[0].str();
                found = true;
            }
        }
        if (found) out[f.name] = value;
    }
    for (const std::string& r : layout.required)
        if (out.find(r) == out.end()) return std::nullopt;
    return out;
}

namespace {

std::string preprocess_pass(const std::string& text,
                            const std::vector<MaskRule>& masks) {
    std::string s = text;
    for (const MaskRule& m : masks) s = std::regex_replace(s, m.re, m.replacement);
    s = lower(std::move(s));
    std::string out;
    out.reserve(s.size());
    bool in_gap = true;  // leading gap is dropped
    for (char c : s) {
        if (c >= 'a' && c <= 'z') {
            out.push_back(c);
            in_gap = false;
        } else if (!in_gap) {
            out.push_back(' ');
            in_gap = true;
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace

std::string preprocess_text(const std::string& text,
                            const std::vector<MaskRule>& masks) {
    // Squashing can expose mask sites that were glued to digits or
    // underscores in the raw text, so iterate to a fixed point.  With the
    // default masks passes after the first only shrink the text; the cap
    // keeps the function total under adversarial custom masks.
    std::string cur = preprocess_pass(text, masks);
    for (int pass = 0; pass < 8; ++pass) {
        std::string next = preprocess_pass(cur, masks);
        if (next == cur) break;
        cur = std::move(next);
    }
    return cur;
}

std::string preprocess_text(const std::map<std::string, std::string>& fields,
                            const std::vector<MaskRule>& masks) {
    std::string joined;
    for (const char* name : {"component", "severity", "message"}) {
        auto it = fields.find(name);
        if (it == fields.end()) continue;
        if (!joined.empty()) joined += ' ';
        joined += it->second;
    }
    return preprocess_text(joined, masks);
}

Dataset load_dataset(const std::string& path, const FieldLayout& layout,
                     const std::vector<MaskRule>& masks, int threads) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open dataset: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(is, line)) lines.push_back(line);

    struct Parsed {
        bool ok = false;
        std::optional<double> ts;
        std::string text;
        Label label = Label::Unknown;
    };
    std::vector<Parsed> parsed(lines.size());
    bool has_ts_field = false, has_label_field = false;
    for (const FieldSpec& f : layout.field_specs) {
        if (f.name == "timestamp") has_ts_field = true;
        if (f.name == "label") has_label_field = true;
    }
    parallel_for(lines.size(), threads, [&](size_t b, size_t e) {
        for (size_t i = b; i < e; ++i) {
            RawLogRecord rec{i, lines[i]};
            auto fields = parse_raw_line(rec, layout);
            if (!fields) continue;
            Parsed& p = parsed[i];
            p.ok = true;
            if (has_ts_field) {
                auto it = fields->find("timestamp");
                if (it != fields->end()) {
                    try {
                        size_t pos = 0;
                        double v = std::stod(it->second, &pos);
                        if (pos == it->second.size()) p.ts = v;
                    } catch (...) {
                        // unparseable timestamp -> treated as absent
                    }
                }
            }
            if (has_label_field) {
                auto it = fields->find("label");
                p.label = it != fields->end() ? label_from_string(it->second)
                                              : Label::Unknown;
            }
            p.text = preprocess_text(*fields, masks);
            if (p.text.empty()) p.text = "empty";
        }
    });

    Dataset ds;
    std::vector<size_t> order;
    for (size_t i = 0; i < parsed.size(); ++i)
        if (parsed[i].ok) order.push_back(i);
    ds.skipped_count = parsed.size() - order.size();
    // Missing timestamps sort to the front but keep original relative order.
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        double ta = parsed[a].ts.value_or(-std::numeric_limits<double>::infinity());
        double tb = parsed[b].ts.value_or(-std::numeric_limits<double>::infinity());
        return ta < tb;
    });
    for (size_t i = 0; i < order.size(); ++i) {
        const Parsed& p = parsed[order[i]];
        LogEvent ev;
        ev.index = i;
        ev.timestamp = p.ts;
        ev.text = p.text;
        ev.label = p.label;
        ds.events.push_back(std::move(ev));
    }
    if (ds.events.empty()) throw FormatError("dataset has zero surviving events: " + path);
    return ds;
}

const char* label_name(Label l) {
    switch (l) {
        case Label::Normal: return "normal";
        case Label::Anomalous: return "anomalous";
        case Label::Unknown: return "unknown";
    }
    return "?";
}

namespace {
Label label_from_name(const std::string& s) {
    if (s == "normal") return Label::Normal;
    if (s == "anomalous") return Label::Anomalous;
    return Label::Unknown;
}
}  // namespace

void save_events_jsonl(const std::string& path, const std::vector<LogEvent>& events) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw FormatError("cannot write events: " + path);
    for (const LogEvent& e : events) {
        json j;
        j["index"] = e.index;
        if (e.timestamp)
            j["timestamp"] = *e.timestamp;
        else
            j["timestamp"] = nullptr;
        j["text"] = e.text;
        j["label"] = label_name(e.label);
        os << j.dump() << '\n';
    }
}

std::vector<LogEvent> load_events_jsonl(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MissingArtifactError("cannot open events file: " + path);
    std::vector<LogEvent> events;
    std::string line;
    size_t ln = 0;
    while (std::getline(is, line)) {
        ++ln;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(path + ":" + std::to_string(ln) + ": " + e.what());
        }
        LogEvent ev;
        ev.index = j.at("index").get<size_t>();
        if (j.contains("timestamp") && !j["timestamp"].is_null())
            ev.timestamp = j["timestamp"].get<double>();
        ev.text = j.at("text").get<std::string>();
        ev.label = label_from_name(j.value("label", "unknown"));
        events.push_back(std::move(ev));
    }
    return events;
}

}  // namespace logsem
