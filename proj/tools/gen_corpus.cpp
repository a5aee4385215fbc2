#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logsem/errors.hpp"
#include "logsem/ingest.hpp"
#include "logsem/rng.hpp"

// Deterministic synthetic corpus: "<ts> <label> <component> <severity>
// <message...>" lines with IPv4/path/hex/numeric parameters, plus the layout,
// a WordPiece vocabulary, a static word-vector table and a smoke-test config.

namespace {

using logsem::Rng;

struct Template {
    const char* component;
    const char* message;  // slots: {ip} {path} {hex} {id} {n}
    bool anomalous;
};

const Template kTemplates[] = {
    {"datanode", "Received block blk_{id} of size {n} from {ip}", false},
    {"datanode", "Deleting block blk_{id} file {path}", false},
    {"fsck", "Verification of blk_{id} succeeded after {n} checks", false},
    {"datanode", "PacketResponder {n} for block blk_{id} terminating", false},
    {"datanode", "Starting thread to transfer block blk_{id} to {ip}", false},
    {"datanode", "Served block blk_{id} to {ip} in {n} ms", false},
    {"namenode", "Heartbeat from node {ip} took {n} ms", false},
    {"session", "Session {hex} opened for user admin from {ip}", false},
    {"session", "Session {hex} closed cleanly after {n} seconds", false},
    {"namenode", "Checkpoint completed in {n} ms to {path}", false},
    {"namenode", "Connection from {ip} established on port {n}", false},
    {"scheduler", "Scheduled compaction of segment {n} at {path}", false},
    {"datanode",
     "Exception in receiveBlock for block blk_{id} connection reset by peer",
     true},
    {"datanode",
     "Failed to transfer blk_{id} to {ip} socket timeout exception raised",
     true},
    {"fsck",
     "Checksum verification failed for blk_{id} corrupt replica detected",
     true},
    {"datanode",
     "Out of memory while serving block blk_{id} aborting unrecoverable handler",
     true},
    {"namenode", "Lost heartbeat from node {ip} marking node dead", true},
};

std::string make_ip(Rng& rng) {
    return "10." + std::to_string(rng.uniform_index(250)) + "." +
           std::to_string(rng.uniform_index(250)) + "." +
           std::to_string(1 + rng.uniform_index(250));
}

std::string make_path(Rng& rng) {
    return "/var/data/app/part" + std::to_string(rng.uniform_index(40)) +
           "/seg" + std::to_string(rng.uniform_index(900)) + ".dat";
}

std::string make_hex(Rng& rng) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (int i = 0; i < 12; ++i) s += digits[rng.uniform_index(16)];
    s[3] = "abcdef"[rng.uniform_index(6)];  // guarantee a letter
    return s;
}

std::string fill(const std::string& tpl, Rng& rng) {
    std::string out;
    for (size_t i = 0; i < tpl.size();) {
        if (tpl[i] == '{') {
            size_t j = tpl.find('}', i);
            std::string slot = tpl.substr(i + 1, j - i - 1);
            if (slot == "ip") out += make_ip(rng);
            else if (slot == "path") out += make_path(rng);
            else if (slot == "hex") out += make_hex(rng);
            else if (slot == "id") out += std::to_string(10000000 + rng.uniform_index(89999999));
            else out += std::to_string(rng.uniform_index(100000));
            i = j + 1;
        } else {
            out += tpl[i++];
        }
    }
    return out;
}

void write_log(const std::string& path, size_t count, double anomaly_rate,
               uint64_t base_ts, Rng& rng) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    std::vector<std::string> lines;
    uint64_t ts = base_ts;
    size_t normals = 0;
    for (const Template& t : kTemplates)
        if (!t.anomalous) ++normals;
    for (size_t i = 0; i < count; ++i) {
        bool anomalous = rng.uniform() < anomaly_rate;
        size_t pick = rng.uniform_index(anomalous ? (std::size(kTemplates) - normals)
                                                  : normals);
        const Template* chosen = nullptr;
        for (const Template& t : kTemplates) {
            if (t.anomalous != anomalous) continue;
            if (pick == 0) {
                chosen = &t;
                break;
            }
            --pick;
        }
        const char* severity =
            anomalous ? (rng.uniform() < 0.5 ? "ERROR" : "FATAL")
                      : (rng.uniform() < 0.8 ? "INFO" : "WARN");
        const char* label = anomalous ? "anomaly" : "-";
        ts += rng.uniform_index(3);  // occasional equal timestamps
        lines.push_back(std::to_string(ts) + " " + label + " " +
                        chosen->component + " " + severity + " " +
                        fill(chosen->message, rng));
    }
    // a few local swaps so ingestion actually has to sort
    for (size_t i = 20; i + 1 < lines.size(); i += 50)
        std::swap(lines[i], lines[i + 1]);
    for (const std::string& l : lines) os << l << '\n';
}

const char* kLayoutJson = R"({
  "fields": [
    {"name": "timestamp", "regex": "col:0"},
    {"name": "label", "regex": "col:1"},
    {"name": "component", "regex": "col:2"},
    {"name": "severity", "regex": "col:3"},
    {"name": "message", "regex": "col:4-"}
  ],
  "required": ["timestamp", "message"]
}
)";

uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

std::set<std::string> corpus_words(const std::string& log_path,
                                   const std::string& layout_path) {
    logsem::FieldLayout layout;
    std::vector<logsem::MaskRule> masks;
    logsem::load_layout_file(layout_path, layout, masks);
    logsem::Dataset ds = logsem::load_dataset(log_path, layout, masks, 1);
    std::set<std::string> words;
    for (const logsem::LogEvent& e : ds.events) {
        std::string w;
        for (char c : e.text) {
            if (c == ' ') {
                if (!w.empty()) words.insert(w);
                w.clear();
            } else {
                w += c;
            }
        }
        if (!w.empty()) words.insert(w);
    }
    return words;
}

void write_vocab(const std::string& path, const std::set<std::string>& words) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "[PAD]\n[UNK]\n[CLS]\n[SEP]\n";
    for (const std::string& w : words) {
        if (w == "unrecoverable") continue;  // stays out-of-vocabulary
        if (w.size() > 7 && fnv1a(w) % 4 == 0) {
            os << w.substr(0, 4) << '\n' << "##" << w.substr(4) << '\n';
        } else {
            os << w << '\n';
        }
    }
}

void write_wordvecs(const std::string& path, const std::set<std::string>& words,
                    size_t dim, Rng& rng) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + path);
    char buf[32];
    for (const std::string& w : words) {
        if (fnv1a(w) % 10 == 0) continue;  // some words stay OOV
        os << w;
        for (size_t i = 0; i < dim; ++i) {
            std::snprintf(buf, sizeof buf, " %.6f", rng.normal(0.0, 0.5));
            os << buf;
        }
        os << '\n';
    }
}

const char* kConfigJson = R"({
  "train_log": "data/synthetic_train.log",
  "test_log": "data/synthetic_test.log",
  "layout": "data/layout.json",
  "vocab": "data/vocab.txt",
  "wordvecs": "data/wordvecs.txt",
  "system_id": "synthetic",
  "representation": "qtybert",
  "teacher": {"num_layers": 2, "hidden_size": 64, "num_heads": 4,
              "intermediate_size": 128, "max_seq_len": 32},
  "student": {"num_layers": 2, "hidden_size": 32, "num_heads": 4,
              "intermediate_size": 64, "max_seq_len": 32},
  "quant": {"fraction": 0.2, "clip_percentile": 0.1, "calib_size": 100},
  "enhancer": {"rank": 8, "learning_rate": 0.001, "epochs": 40, "batch_size": 0},
  "detector": {"window_size": 16, "hidden": 32, "learning_rate": 0.05,
               "epochs": 30, "threshold": 0.5, "pos_weight": 1.0,
               "batch_size": 0},
  "drain": {"tree_depth": 4, "similarity_threshold": 0.4, "max_children": 100},
  "bench": {"cores": 1, "warmup": 1, "similarity_pairs": 500},
  "out_dir": "out",
  "seed": 42,
  "batch_size": 64
}
)";

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logsem-gencorpus: deterministic synthetic log corpus"};
    std::string out_dir = "data";
    size_t train_count = 1000, test_count = 400, vec_dim = 50;
    double anomaly_rate = 0.12;
    uint64_t seed = 42;
    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--train", train_count, "training events");
    app.add_option("--test", test_count, "test events");
    app.add_option("--anomaly-rate", anomaly_rate, "anomalous fraction");
    app.add_option("--dim", vec_dim, "static word-vector dimension");
    app.add_option("--seed", seed, "generator seed");
    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);
        auto at = [&](const char* n) {
            return (std::filesystem::path(out_dir) / n).string();
        };
        std::ofstream(at("layout.json"), std::ios::trunc) << kLayoutJson;

        Rng rng(seed);
        write_log(at("synthetic_train.log"), train_count, anomaly_rate,
                  1700000000, rng);
        write_log(at("synthetic_test.log"), test_count, anomaly_rate,
                  1700500000, rng);

        std::set<std::string> words =
            corpus_words(at("synthetic_train.log"), at("layout.json"));
        write_vocab(at("vocab.txt"), words);
        Rng vec_rng(seed + 1);
        write_wordvecs(at("wordvecs.txt"), words, vec_dim, vec_rng);
        std::ofstream(at("config.json"), std::ios::trunc) << kConfigJson;

        std::cout << "gencorpus: " << train_count << " train + " << test_count
                  << " test events, " << words.size() << " words -> " << out_dir
                  << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "logsem-gencorpus: " << e.what() << "\n";
        return 3;
    }
}
