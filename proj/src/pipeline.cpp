#include "logsem/pipeline.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <json.hpp>

#include "logsem/bench.hpp"
#include "logsem/errors.hpp"
#include "logsem/ingest.hpp"
#include "logsem/quant.hpp"
#include "logsem/static_embed.hpp"

namespace logsem {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

void reject_unknown(const json& j, const std::string& scope,
                    std::initializer_list<const char*> known) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok)
            throw ConfigError("unknown config key \"" + scope + it.key() + "\"");
    }
}

template <typename T>
void take(const json& j, const std::string& scope, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field \"" + scope + key + "\" has the wrong type");
    }
}

void merge_encoder(const json& j, const std::string& scope, EncoderConfig& c) {
    reject_unknown(j, scope, {"num_layers", "hidden_size", "num_heads",
                              "intermediate_size", "max_seq_len"});
    take(j, scope, "num_layers", c.num_layers);
    take(j, scope, "hidden_size", c.hidden_size);
    take(j, scope, "num_heads", c.num_heads);
    take(j, scope, "intermediate_size", c.intermediate_size);
    take(j, scope, "max_seq_len", c.max_seq_len);
}

}  // namespace

void PipelineConfig::merge_json_file(const std::string& path) {
    json j = read_json_file(path);
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    reject_unknown(j, "",
                   {"train_log", "test_log", "layout", "vocab", "wordvecs",
                    "system_id", "representation", "teacher", "student", "drain",
                    "quant", "enhancer", "detector", "bench", "compare",
                    "ablate_switch", "out_dir", "seed", "batch_size"});
    take(j, "", "train_log", train_log);
    take(j, "", "test_log", test_log);
    take(j, "", "layout", layout_path);
    take(j, "", "vocab", vocab_path);
    take(j, "", "wordvecs", wordvec_path);
    take(j, "", "system_id", system_id);
    take(j, "", "representation", representation);
    take(j, "", "ablate_switch", ablate_switch);
    take(j, "", "out_dir", out_dir);
    take(j, "", "seed", seed);
    take(j, "", "batch_size", batch_size);
    if (j.contains("teacher")) merge_encoder(j["teacher"], "teacher.", teacher_cfg);
    if (j.contains("student")) merge_encoder(j["student"], "student.", student_cfg);
    if (j.contains("drain")) {
        const json& d = j["drain"];
        reject_unknown(d, "drain.",
                       {"tree_depth", "similarity_threshold", "max_children"});
        take(d, "drain.", "tree_depth", drain.tree_depth);
        take(d, "drain.", "similarity_threshold", drain.similarity_threshold);
        take(d, "drain.", "max_children", drain.max_children);
    }
    if (j.contains("quant")) {
        const json& q = j["quant"];
        reject_unknown(q, "quant.", {"fraction", "clip_percentile", "calib_size"});
        take(q, "quant.", "fraction", quant_fraction);
        take(q, "quant.", "clip_percentile", clip_percentile);
        take(q, "quant.", "calib_size", calib_size);
    }
    if (j.contains("enhancer")) {
        const json& e = j["enhancer"];
        reject_unknown(e, "enhancer.",
                       {"rank", "learning_rate", "epochs", "batch_size"});
        take(e, "enhancer.", "rank", enhancer_rank);
        take(e, "enhancer.", "learning_rate", enhancer.learning_rate);
        take(e, "enhancer.", "epochs", enhancer.epochs);
        take(e, "enhancer.", "batch_size", enhancer.batch_size);
    }
    if (j.contains("detector")) {
        const json& d = j["detector"];
        reject_unknown(d, "detector.",
                       {"window_size", "hidden", "learning_rate", "epochs",
                        "threshold", "pos_weight", "batch_size"});
        take(d, "detector.", "window_size", detector.window_size);
        take(d, "detector.", "hidden", detector.hidden);
        take(d, "detector.", "learning_rate", detector.learning_rate);
        take(d, "detector.", "epochs", detector.epochs);
        take(d, "detector.", "threshold", detector.threshold);
        take(d, "detector.", "pos_weight", detector.pos_weight);
        take(d, "detector.", "batch_size", detector.batch_size);
    }
    if (j.contains("bench")) {
        const json& b = j["bench"];
        reject_unknown(b, "bench.", {"cores", "warmup", "similarity_pairs"});
        take(b, "bench.", "cores", cores);
        take(b, "bench.", "warmup", warmup);
        take(b, "bench.", "similarity_pairs", similarity_pairs);
    }
    if (j.contains("compare")) {
        const json& c = j["compare"];
        reject_unknown(c, "compare.", {"a", "b"});
        take(c, "compare.", "a", compare_a);
        take(c, "compare.", "b", compare_b);
    }
}

void PipelineConfig::apply_env() {
    const char* v = std::getenv("LOGSEM_OUT_DIR");
    if (v && *v) out_dir = v;
}

std::string PipelineConfig::effective_json() const {
    json j;
    j["train_log"] = train_log;
    j["test_log"] = test_log;
    j["layout"] = layout_path;
    j["vocab"] = vocab_path;
    j["wordvecs"] = wordvec_path;
    j["system_id"] = system_id;
    j["representation"] = representation;
    j["teacher"] = {{"num_layers", teacher_cfg.num_layers},
                    {"hidden_size", teacher_cfg.hidden_size},
                    {"num_heads", teacher_cfg.num_heads},
                    {"intermediate_size", teacher_cfg.intermediate_size},
                    {"max_seq_len", teacher_cfg.max_seq_len}};
    j["student"] = {{"num_layers", student_cfg.num_layers},
                    {"hidden_size", student_cfg.hidden_size},
                    {"num_heads", student_cfg.num_heads},
                    {"intermediate_size", student_cfg.intermediate_size},
                    {"max_seq_len", student_cfg.max_seq_len}};
    j["drain"] = {{"tree_depth", drain.tree_depth},
                  {"similarity_threshold", drain.similarity_threshold},
                  {"max_children", drain.max_children}};
    j["quant"] = {{"fraction", quant_fraction},
                  {"clip_percentile", clip_percentile},
                  {"calib_size", calib_size}};
    j["enhancer"] = {{"rank", enhancer_rank},
                     {"learning_rate", enhancer.learning_rate},
                     {"epochs", enhancer.epochs},
                     {"batch_size", enhancer.batch_size}};
    j["detector"] = {{"window_size", detector.window_size},
                     {"hidden", detector.hidden},
                     {"learning_rate", detector.learning_rate},
                     {"epochs", detector.epochs},
                     {"threshold", detector.threshold},
                     {"pos_weight", detector.pos_weight},
                     {"batch_size", detector.batch_size}};
    j["bench"] = {{"cores", cores},
                  {"warmup", warmup},
                  {"similarity_pairs", similarity_pairs}};
    j["compare"] = {{"a", compare_a}, {"b", compare_b}};
    j["ablate_switch"] = ablate_switch;
    j["out_dir"] = out_dir;
    j["seed"] = seed;
    j["batch_size"] = batch_size;
    return j.dump(2);
}

void PipelineConfig::validate() const {
    if (out_dir.empty()) throw ConfigError("config field \"out_dir\" is empty");
    parse_representation(representation);
    parse_representation(compare_a);
    parse_representation(compare_b);
    EncoderConfig t = teacher_cfg, s = student_cfg;
    t.vocab_size = t.vocab_size > 0 ? t.vocab_size : 8;
    s.vocab_size = s.vocab_size > 0 ? s.vocab_size : 8;
    t.validate();
    s.validate();
    detector.validate();
    if (!(quant_fraction >= 0.0 && quant_fraction <= 1.0))
        throw ConfigError("config field \"quant.fraction\" must lie in [0,1]");
    if (!(clip_percentile >= 0.0 && clip_percentile < 50.0))
        throw ConfigError("config field \"quant.clip_percentile\" must lie in [0,50)");
    if (calib_size == 0)
        throw ConfigError("config field \"quant.calib_size\" must be >= 1");
    if (enhancer_rank == 0)
        throw ConfigError("config field \"enhancer.rank\" must be >= 1");
    if (cores == 0) throw ConfigError("config field \"bench.cores\" must be >= 1");
    if (warmup < 0)
        throw ConfigError("config field \"bench.warmup\" must be >= 0");
    if (similarity_pairs < 3)
        throw ConfigError("config field \"bench.similarity_pairs\" must be >= 3");
    if (batch_size < 1)
        throw ConfigError("config field \"batch_size\" must be >= 1");
    if (ablate_switch != "all" && ablate_switch != "no-enhancer" &&
        ablate_switch != "no-quant" && ablate_switch != "no-calibration" &&
        ablate_switch != "calib-size")
        throw ConfigError("config field \"ablate_switch\" must be one of "
                          "all|no-enhancer|no-quant|no-calibration|calib-size");
}

RepSpec parse_representation(const std::string& s) {
    RepSpec r;
    if (s == "teacher") {
        r.kind = RepSpec::Kind::Teacher;
        r.label = "teacher";
    } else if (s == "student") {
        r.kind = RepSpec::Kind::Student;
        r.label = "student";
    } else if (s == "qtybert") {
        r.kind = RepSpec::Kind::Qtybert;
        r.label = "qtybert";
    } else if (s.rfind("static:", 0) == 0 && s.size() > 7) {
        r.kind = RepSpec::Kind::Static;
        r.table = s.substr(7);
        r.label = "static-" + r.table;
    } else {
        throw ConfigError(
            "config field \"representation\" must be static:<table>, teacher, "
            "student or qtybert (got \"" + s + "\")");
    }
    return r;
}

std::string artifact_path(const PipelineConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

void require_artifact(const std::string& path, const std::string& producer) {
    if (!fs::exists(path))
        throw MissingArtifactError("missing artifact " + path + " -- run `" +
                                   producer + "` first");
}

namespace {

void ensure_out_dir(const PipelineConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("cannot create out_dir " + cfg.out_dir + ": " +
                              ec.message());
}

void require_input_file(const std::string& path, const std::string& field) {
    if (path.empty())
        throw ConfigError("config field \"" + field + "\" is required here");
    if (!fs::exists(path))
        throw ConfigError("config field \"" + field + "\" points to a missing file: " +
                          path);
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path, std::ios::trunc | std::ios::binary);
    if (!os) throw FormatError("cannot write " + path);
    os << text;
}

void write_manifest(const PipelineConfig& cfg, const std::string& step,
                    json settings, std::vector<std::string> artifacts) {
    std::sort(artifacts.begin(), artifacts.end());
    json m;
    m["subcommand"] = step;
    m["seed"] = cfg.seed;
    m["settings"] = std::move(settings);
    m["artifacts"] = artifacts;
    write_text(artifact_path(cfg, step + ".manifest.json"), m.dump(2) + "\n");
}

std::vector<LogEvent> load_split(const PipelineConfig& cfg,
                                 const std::string& split) {
    std::string path = artifact_path(cfg, "events_" + split + ".jsonl");
    require_artifact(path, "ingest");
    return load_events_jsonl(path);
}

std::vector<std::string> texts_of(const std::vector<LogEvent>& events) {
    std::vector<std::string> t;
    t.reserve(events.size());
    for (const LogEvent& e : events) t.push_back(e.text);
    return t;
}

// Unknown labels train/score as normal; callers report the unknown count.
std::vector<uint8_t> labels01(const std::vector<LogEvent>& events,
                              size_t* unknown_count = nullptr) {
    std::vector<uint8_t> y;
    y.reserve(events.size());
    size_t unk = 0;
    for (const LogEvent& e : events) {
        y.push_back(e.label == Label::Anomalous ? 1 : 0);
        if (e.label == Label::Unknown) ++unk;
    }
    if (unknown_count) *unknown_count = unk;
    return y;
}

Vocab load_vocab_checked(const PipelineConfig& cfg) {
    require_input_file(cfg.vocab_path, "vocab");
    return Vocab::load(cfg.vocab_path);
}

EmbedOptions embed_opts(const PipelineConfig& cfg) {
    EmbedOptions o;
    o.batch_size = cfg.batch_size;
    o.threads = static_cast<int>(cfg.cores);
    return o;
}

// A ready-to-run embedding function with all artifacts preloaded, so the
// timing harness measures computation, not IO.
struct Embedder {
    std::function<FloatMat(const std::vector<std::string>&)> run;
    size_t dim = 0;
};

Embedder build_embedder(const PipelineConfig& cfg, const RepSpec& rep) {
    Embedder e;
    switch (rep.kind) {
        case RepSpec::Kind::Static: {
            require_input_file(cfg.wordvec_path, "wordvecs");
            std::string tpath = artifact_path(cfg, "templates.json");
            require_artifact(tpath, "mine-templates");
            auto table = std::make_shared<EmbeddingTable>(
                load_embedding_table(cfg.wordvec_path));
            auto idf = std::make_shared<IdfModel>(
                fit_idf(load_templates_json(tpath)));
            size_t threads = cfg.cores;
            e.dim = table->dimension;
            e.run = [table, idf, threads](const std::vector<std::string>& texts) {
                return embed_events_static(texts, *table, *idf,
                                           static_cast<int>(threads));
            };
            break;
        }
        case RepSpec::Kind::Teacher:
        case RepSpec::Kind::Student: {
            bool teacher = rep.kind == RepSpec::Kind::Teacher;
            std::string wpath =
                artifact_path(cfg, teacher ? "teacher.lrep" : "student.lrep");
            require_artifact(wpath, "init-encoder");
            auto w = std::make_shared<EncoderWeights>(load_weights(wpath));
            auto vocab = std::make_shared<Vocab>(load_vocab_checked(cfg));
            EmbedOptions opts = embed_opts(cfg);
            e.dim = static_cast<size_t>(w->cfg.hidden_size);
            e.run = [w, vocab, opts](const std::vector<std::string>& texts) {
                return embed_events(*w, *vocab, texts, opts);
            };
            break;
        }
        case RepSpec::Kind::Qtybert: {
            std::string qpath = artifact_path(cfg, "sysbe.lrep");
            std::string epath = artifact_path(cfg, "crosys.lrep");
            require_artifact(qpath, "quantize");
            require_artifact(epath, "train-enhancer");
            auto q = std::make_shared<QuantizedEncoder>(load_quantized(qpath));
            auto enh = std::make_shared<EnhancerParams>(load_enhancer(
                epath, static_cast<size_t>(q->enc.cfg.hidden_size), 0));
            auto vocab = std::make_shared<Vocab>(load_vocab_checked(cfg));
            EmbedOptions opts = embed_opts(cfg);
            e.dim = enh->d_t;
            e.run = [q, enh, vocab, opts](const std::vector<std::string>& texts) {
                FloatMat hs = quantized_embed_events(*q, *vocab, texts, opts);
                return enhance_batch(*enh, hs);
            };
            break;
        }
    }
    return e;
}

// --- activation-stats JSON (calibration artifact) ---

json stats_to_json(const std::map<std::string, ActivationStats>& stats) {
    json layers = json::object();
    for (const auto& [name, s] : stats) {
        json e;
        e["min"] = s.min_v;
        e["max"] = s.max_v;
        e["mean"] = s.mean;
        e["m2"] = s.m2;
        e["count"] = s.count;
        e["hist_lo"] = s.hist_lo;
        e["hist_hi"] = s.hist_hi;
        e["hist"] = s.hist;
        layers[name] = std::move(e);
    }
    return layers;
}

std::map<std::string, ActivationStats> stats_from_json(const json& layers,
                                                       const std::string& path) {
    std::map<std::string, ActivationStats> stats;
    try {
        for (auto it = layers.begin(); it != layers.end(); ++it) {
            ActivationStats s;
            const json& e = it.value();
            s.min_v = e.at("min").get<double>();
            s.max_v = e.at("max").get<double>();
            s.mean = e.at("mean").get<double>();
            s.m2 = e.at("m2").get<double>();
            s.count = e.at("count").get<uint64_t>();
            s.hist_lo = e.at("hist_lo").get<double>();
            s.hist_hi = e.at("hist_hi").get<double>();
            s.hist = e.at("hist").get<std::vector<uint64_t>>();
            stats[it.key()] = std::move(s);
        }
    } catch (const json::exception& e) {
        throw FormatError("malformed calibration stats in " + path + ": " +
                          e.what());
    }
    return stats;
}

std::map<std::string, ActivationStats> load_calibration(
    const PipelineConfig& cfg, json* header = nullptr) {
    std::string path = artifact_path(cfg, "calibration.json");
    require_artifact(path, "calibrate");
    json j = read_json_file(path);
    if (header) {
        *header = json::object();
        for (const char* k : {"system_id", "calib_size", "clip_percentile"})
            if (j.contains(k)) (*header)[k] = j[k];
    }
    if (!j.contains("layers"))
        throw FormatError("calibration file lacks \"layers\": " + path);
    return stats_from_json(j["layers"], path);
}

// Stats describing a fixed preset range, for quantization without any
// calibration data.
std::map<std::string, ActivationStats> preset_stats(
    const std::vector<std::string>& names, float lo, float hi) {
    std::map<std::string, ActivationStats> stats;
    float vals[2] = {lo, hi};
    for (const std::string& n : names) {
        ActivationStats s;
        s.observe(vals, 2);
        s.prepare_hist(lo, hi);
        s.observe_hist(vals, 2);
        stats[n] = std::move(s);
    }
    return stats;
}

DetectionMetrics metrics_for(const EventPredictions& pred,
                             const std::vector<LogEvent>& events,
                             ConfusionCounts* counts_out = nullptr) {
    std::vector<uint8_t> p, t;
    for (size_t i = 0; i < events.size(); ++i) {
        if (events[i].label == Label::Unknown) continue;
        p.push_back(pred.decision[i]);
        t.push_back(events[i].label == Label::Anomalous ? 1 : 0);
    }
    ConfusionCounts c = confusion_counts(p, t);
    if (counts_out) *counts_out = c;
    return precision_recall_f1(c);
}

}  // namespace

void cmd_ingest(const PipelineConfig& cfg) {
    require_input_file(cfg.train_log, "train_log");
    require_input_file(cfg.layout_path, "layout");
    ensure_out_dir(cfg);
    FieldLayout layout;
    std::vector<MaskRule> masks;
    load_layout_file(cfg.layout_path, layout, masks);

    Dataset train = load_dataset(cfg.train_log, layout, masks,
                                 static_cast<int>(cfg.cores));
    std::string train_path = artifact_path(cfg, "events_train.jsonl");
    save_events_jsonl(train_path, train.events);
    std::vector<std::string> artifacts{train_path};

    size_t test_count = 0, test_skipped = 0;
    if (!cfg.test_log.empty()) {
        require_input_file(cfg.test_log, "test_log");
        Dataset test = load_dataset(cfg.test_log, layout, masks,
                                    static_cast<int>(cfg.cores));
        std::string test_path = artifact_path(cfg, "events_test.jsonl");
        save_events_jsonl(test_path, test.events);
        artifacts.push_back(test_path);
        test_count = test.events.size();
        test_skipped = test.skipped_count;
    }

    json settings = {{"train_log", cfg.train_log},
                     {"test_log", cfg.test_log},
                     {"layout", cfg.layout_path},
                     {"system_id", cfg.system_id},
                     {"cores", cfg.cores},
                     {"train_events", train.events.size()},
                     {"train_skipped", train.skipped_count},
                     {"test_events", test_count},
                     {"test_skipped", test_skipped}};
    write_manifest(cfg, "ingest", settings, artifacts);
    std::cout << "ingest: " << train.events.size() << " train events ("
              << train.skipped_count << " skipped), " << test_count
              << " test events (" << test_skipped << " skipped) -> "
              << cfg.out_dir << "\n";
}

void cmd_mine_templates(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    std::vector<LogEvent> events = load_split(cfg, "train");
    ParseTree tree(cfg.drain);
    for (const LogEvent& e : events) tree.mine_template(tokenize_ws(e.text));
    std::string path = artifact_path(cfg, "templates.json");
    save_templates_json(path, tree.templates());
    json settings = {{"tree_depth", cfg.drain.tree_depth},
                     {"similarity_threshold", cfg.drain.similarity_threshold},
                     {"max_children", cfg.drain.max_children},
                     {"events", events.size()},
                     {"templates", tree.templates().size()}};
    write_manifest(cfg, "mine-templates", settings, {path});
    std::cout << "mine-templates: " << tree.templates().size()
              << " templates from " << events.size() << " events -> " << path
              << "\n";
}

void cmd_init_encoder(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    Vocab vocab = load_vocab_checked(cfg);
    EncoderConfig tcfg = cfg.teacher_cfg, scfg = cfg.student_cfg;
    tcfg.vocab_size = static_cast<int>(vocab.size());
    scfg.vocab_size = static_cast<int>(vocab.size());
    std::string tpath = artifact_path(cfg, "teacher.lrep");
    std::string spath = artifact_path(cfg, "student.lrep");
    save_weights(tpath, random_init(tcfg, cfg.seed));
    save_weights(spath, random_init(scfg, cfg.seed + 1));
    json settings = {{"vocab", cfg.vocab_path},
                     {"vocab_size", vocab.size()},
                     {"teacher_seed", cfg.seed},
                     {"student_seed", cfg.seed + 1}};
    write_manifest(cfg, "init-encoder", settings,
                   {tpath, tpath + ".json", spath, spath + ".json"});
    std::cout << "init-encoder: teacher " << tcfg.num_layers << "L/H"
              << tcfg.hidden_size << ", student " << scfg.num_layers << "L/H"
              << scfg.hidden_size << " (vocab " << vocab.size() << ") -> "
              << cfg.out_dir << "\n";
}

void cmd_embed(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec rep = parse_representation(cfg.representation);
    Embedder emb = build_embedder(cfg, rep);

    std::vector<std::string> artifacts;
    size_t train_n = 0, test_n = 0;
    {
        std::vector<LogEvent> events = load_split(cfg, "train");
        FloatMat m = emb.run(texts_of(events));
        std::string path =
            artifact_path(cfg, "embeddings_train_" + rep.label + ".lrep");
        save_embedding_matrix(path, m);
        artifacts.push_back(path);
        train_n = m.rows;
    }
    if (fs::exists(artifact_path(cfg, "events_test.jsonl"))) {
        std::vector<LogEvent> events = load_split(cfg, "test");
        FloatMat m = emb.run(texts_of(events));
        std::string path =
            artifact_path(cfg, "embeddings_test_" + rep.label + ".lrep");
        save_embedding_matrix(path, m);
        artifacts.push_back(path);
        test_n = m.rows;
    }
    json settings = {{"representation", cfg.representation},
                     {"dimension", emb.dim},
                     {"batch_size", cfg.batch_size},
                     {"cores", cfg.cores},
                     {"train_events", train_n},
                     {"test_events", test_n}};
    write_manifest(cfg, "embed", settings, artifacts);
    std::cout << "embed: " << rep.label << " d=" << emb.dim << ", " << train_n
              << " train / " << test_n << " test events -> " << cfg.out_dir
              << "\n";
}

void cmd_calibrate(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    std::string spath = artifact_path(cfg, "student.lrep");
    require_artifact(spath, "init-encoder");
    EncoderWeights student = load_weights(spath);
    Vocab vocab = load_vocab_checked(cfg);
    std::vector<LogEvent> events = load_split(cfg, "train");

    CalibrationSet calib;
    calib.system_id = cfg.system_id;
    size_t n = std::min(cfg.calib_size, events.size());
    for (size_t i = 0; i < n; ++i) calib.texts.push_back(events[i].text);

    std::map<std::string, ActivationStats> stats =
        collect_stats(student, vocab, calib, cfg.batch_size);

    json j;
    j["system_id"] = cfg.system_id;
    j["calib_size"] = n;
    j["clip_percentile"] = cfg.clip_percentile;
    j["layers"] = stats_to_json(stats);
    std::string path = artifact_path(cfg, "calibration.json");
    write_text(path, j.dump(2) + "\n");

    json settings = {{"system_id", cfg.system_id},
                     {"calib_size", n},
                     {"clip_percentile", cfg.clip_percentile},
                     {"layers", stats.size()}};
    write_manifest(cfg, "calibrate", settings, {path});
    std::cout << "calibrate: " << stats.size() << " linear layers over " << n
              << " events -> " << path << "\n";
}

void cmd_quantize(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    std::string spath = artifact_path(cfg, "student.lrep");
    require_artifact(spath, "init-encoder");
    EncoderWeights student = load_weights(spath);
    std::map<std::string, ActivationStats> stats = load_calibration(cfg);

    std::vector<std::string> selection =
        select_layers(student.cfg, cfg.quant_fraction);
    QuantPolicy policy{cfg.clip_percentile};
    QuantizedEncoder q = quantize_encoder(student, stats, selection, policy);

    std::string path = artifact_path(cfg, "sysbe.lrep");
    save_quantized(path, q);
    json settings = {{"fraction", cfg.quant_fraction},
                     {"clip_percentile", cfg.clip_percentile},
                     {"requested", selection},
                     {"quantized", q.selection}};
    write_manifest(cfg, "quantize", settings,
                   {path, path + ".json", path + ".quant.json"});
    std::cout << "quantize: " << q.selection.size() << "/"
              << linear_layer_names(student.cfg).size()
              << " linear layers int8 -> " << path << "\n";
}

void cmd_train_enhancer(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    std::string qpath = artifact_path(cfg, "sysbe.lrep");
    std::string tpath = artifact_path(cfg, "teacher.lrep");
    require_artifact(qpath, "quantize");
    require_artifact(tpath, "init-encoder");
    QuantizedEncoder q = load_quantized(qpath);
    EncoderWeights teacher = load_weights(tpath);
    Vocab vocab = load_vocab_checked(cfg);
    std::vector<LogEvent> events = load_split(cfg, "train");
    std::vector<std::string> texts = texts_of(events);

    EmbeddingPairs pairs;
    pairs.h_s = quantized_embed_events(q, vocab, texts, embed_opts(cfg));
    pairs.h_t = embed_events(teacher, vocab, texts, embed_opts(cfg));

    EnhancerTrainConfig ec = cfg.enhancer;
    ec.seed = cfg.seed;
    EnhancerTrainResult res = train_enhancer(pairs, cfg.enhancer_rank, ec);
    res.params.trained_on = {cfg.system_id};
    std::string path = artifact_path(cfg, "crosys.lrep");
    save_enhancer(path, res.params);

    json settings = {{"rank", cfg.enhancer_rank},
                     {"learning_rate", ec.learning_rate},
                     {"epochs", ec.epochs},
                     {"batch_size", ec.batch_size},
                     {"pairs", texts.size()},
                     {"d_S", res.params.d_s},
                     {"d_T", res.params.d_t},
                     {"loss_trace", res.loss_trace}};
    write_manifest(cfg, "train-enhancer", settings, {path, path + ".json"});
    std::cout << "train-enhancer: r=" << cfg.enhancer_rank << " on "
              << texts.size() << " pairs, mse " << res.loss_trace.front()
              << " -> " << res.loss_trace.back() << " -> " << path << "\n";
}

void cmd_train_detector(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec rep = parse_representation(cfg.representation);
    std::string epath =
        artifact_path(cfg, "embeddings_train_" + rep.label + ".lrep");
    require_artifact(epath, "embed");
    FloatMat emb = load_embedding_matrix(epath);
    std::vector<LogEvent> events = load_split(cfg, "train");
    if (emb.rows != events.size())
        throw ContractError("train embeddings and events disagree on count");

    size_t unknown = 0;
    std::vector<uint8_t> y = labels01(events, &unknown);
    WindowSpec spec{cfg.detector.window_size};
    std::vector<Window> windows = partition_windows(emb, y, spec);

    DetectorConfig dc = cfg.detector;
    dc.seed = cfg.seed;
    DetectorTrainResult res = train_detector(windows, emb.cols, dc);
    std::string path = artifact_path(cfg, "detector_" + rep.label + ".lrep");
    save_detector(path, res.params, dc);

    json settings = {{"representation", cfg.representation},
                     {"window_size", dc.window_size},
                     {"hidden", dc.hidden},
                     {"learning_rate", dc.learning_rate},
                     {"epochs", dc.epochs},
                     {"threshold", dc.threshold},
                     {"pos_weight", dc.pos_weight},
                     {"windows", windows.size()},
                     {"unknown_labels", unknown},
                     {"loss_trace", res.loss_trace}};
    write_manifest(cfg, "train-detector", settings, {path, path + ".json"});
    std::cout << "train-detector: " << rep.label << " over " << windows.size()
              << " windows, bce " << res.loss_trace.front() << " -> "
              << res.loss_trace.back() << " -> " << path << "\n";
}

void cmd_detect(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec rep = parse_representation(cfg.representation);
    std::string dpath = artifact_path(cfg, "detector_" + rep.label + ".lrep");
    std::string epath =
        artifact_path(cfg, "embeddings_test_" + rep.label + ".lrep");
    require_artifact(dpath, "train-detector");
    require_artifact(epath, "embed");
    DetectorConfig dc;
    RnnParams params = load_detector(dpath, dc);
    FloatMat emb = load_embedding_matrix(epath);
    std::vector<LogEvent> events = load_split(cfg, "test");
    if (emb.rows != events.size())
        throw ContractError("test embeddings and events disagree on count");

    std::vector<uint8_t> y = labels01(events);
    WindowSpec spec{dc.window_size};
    std::vector<Window> windows = partition_windows(emb, y, spec);
    EventPredictions pred =
        predict_events(params, windows, dc.threshold, cfg.cores);

    std::string ppath = artifact_path(cfg, "predictions_" + rep.label + ".csv");
    write_predictions_csv(ppath, pred, y);

    ConfusionCounts counts;
    DetectionMetrics m = metrics_for(pred, events, &counts);
    std::string mpath = artifact_path(cfg, "metrics_" + rep.label + ".csv");
    write_metrics_csv(mpath, {{"RNN", rep.label, m}});

    json settings = {{"representation", cfg.representation},
                     {"threshold", dc.threshold},
                     {"window_size", dc.window_size},
                     {"events", events.size()},
                     {"tp", counts.tp},
                     {"fp", counts.fp},
                     {"fn", counts.fn},
                     {"tn", counts.tn},
                     {"precision", m.precision},
                     {"recall", m.recall},
                     {"f1", m.f1}};
    write_manifest(cfg, "detect", settings, {ppath, mpath});
    std::cout << "detect: " << rep.label << " P=" << 100.0 * m.precision
              << "% R=" << 100.0 * m.recall << "% F1=" << 100.0 * m.f1
              << "% -> " << mpath << "\n";
}

void cmd_bench_embed(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec rep = parse_representation(cfg.representation);
    Embedder emb = build_embedder(cfg, rep);
    std::string split =
        fs::exists(artifact_path(cfg, "events_test.jsonl")) ? "test" : "train";
    std::vector<LogEvent> events = load_split(cfg, split);
    std::vector<std::string> texts = texts_of(events);

    TimingReport r = time_run([&] { emb.run(texts); }, texts.size(), cfg.cores,
                              cfg.warmup);
    TimingRow row{rep.label, cfg.system_id, cfg.cores, r.total_seconds,
                  r.avg_ms_per_event};
    std::string cpath = artifact_path(cfg, "timing_embed.csv");
    write_timing_csv(cpath, {row});
    std::string jpath = artifact_path(cfg, "timing_embed.json");
    write_text(jpath, timing_report_json(r) + "\n");

    json settings = {{"representation", cfg.representation},
                     {"split", split},
                     {"events", texts.size()},
                     {"cores", cfg.cores},
                     {"warmup", cfg.warmup}};
    write_manifest(cfg, "bench-embed", settings, {cpath, jpath});
    std::cout << "bench-embed: " << rep.label << " " << r.total_seconds
              << " s total, " << r.avg_ms_per_event << " ms/event -> " << cpath
              << "\n";
}

void cmd_bench_detect(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec rep = parse_representation(cfg.representation);
    std::string dpath = artifact_path(cfg, "detector_" + rep.label + ".lrep");
    std::string epath =
        artifact_path(cfg, "embeddings_test_" + rep.label + ".lrep");
    require_artifact(dpath, "train-detector");
    require_artifact(epath, "embed");
    DetectorConfig dc;
    RnnParams params = load_detector(dpath, dc);
    FloatMat emb = load_embedding_matrix(epath);
    std::vector<uint8_t> y(emb.rows, 0);
    std::vector<Window> windows =
        partition_windows(emb, y, WindowSpec{dc.window_size});

    TimingReport r =
        time_run([&] { predict_events(params, windows, dc.threshold, cfg.cores); },
                 emb.rows, cfg.cores, cfg.warmup);
    TimingRow row{"rnn-" + rep.label, cfg.system_id, cfg.cores, r.total_seconds,
                  r.avg_ms_per_event};
    std::string cpath = artifact_path(cfg, "timing_detect.csv");
    write_timing_csv(cpath, {row});
    std::string jpath = artifact_path(cfg, "timing_detect.json");
    write_text(jpath, timing_report_json(r) + "\n");

    json settings = {{"representation", cfg.representation},
                     {"events", emb.rows},
                     {"windows", windows.size()},
                     {"cores", cfg.cores},
                     {"warmup", cfg.warmup}};
    write_manifest(cfg, "bench-detect", settings, {cpath, jpath});
    std::cout << "bench-detect: " << rep.label << " " << r.total_seconds
              << " s total, " << r.avg_ms_per_event << " ms/event -> " << cpath
              << "\n";
}

void cmd_compare_embeddings(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    RepSpec ra = parse_representation(cfg.compare_a);
    RepSpec rb = parse_representation(cfg.compare_b);
    std::string pa = artifact_path(cfg, "embeddings_test_" + ra.label + ".lrep");
    std::string pb = artifact_path(cfg, "embeddings_test_" + rb.label + ".lrep");
    require_artifact(pa, "embed");
    require_artifact(pb, "embed");
    FloatMat a = load_embedding_matrix(pa);
    FloatMat b = load_embedding_matrix(pb);

    SimilarityReport rep =
        embedding_similarity(a, b, cfg.similarity_pairs, cfg.seed);
    std::string path = artifact_path(
        cfg, "compare_" + ra.label + "_vs_" + rb.label + ".json");
    write_text(path, similarity_report_json(rep) + "\n");

    json settings = {{"a", cfg.compare_a},
                     {"b", cfg.compare_b},
                     {"pairs", cfg.similarity_pairs},
                     {"events", a.rows}};
    write_manifest(cfg, "compare-embeddings", settings, {path});
    std::cout << "compare-embeddings: " << ra.label << " vs " << rb.label
              << " rho=" << rep.spearman_rho << " cos=" << rep.cosine_mean
              << " -> " << path << "\n";
}

void cmd_ablate(const PipelineConfig& cfg) {
    ensure_out_dir(cfg);
    std::error_code ec;
    fs::create_directories(fs::path(cfg.out_dir) / "ablate", ec);
    if (ec)
        throw ConfigError("cannot create ablate dir: " + ec.message());

    std::string qpath = artifact_path(cfg, "sysbe.lrep");
    std::string cpath = artifact_path(cfg, "crosys.lrep");
    std::string spath = artifact_path(cfg, "student.lrep");
    require_artifact(qpath, "quantize");
    require_artifact(cpath, "train-enhancer");
    require_artifact(spath, "init-encoder");
    QuantizedEncoder sysbe = load_quantized(qpath);
    EncoderWeights student = load_weights(spath);
    EnhancerParams enh = load_enhancer(
        cpath, static_cast<size_t>(student.cfg.hidden_size), 0);
    Vocab vocab = load_vocab_checked(cfg);
    std::vector<LogEvent> train_events = load_split(cfg, "train");
    std::vector<LogEvent> test_events = load_split(cfg, "test");
    std::vector<std::string> train_texts = texts_of(train_events);
    std::vector<std::string> test_texts = texts_of(test_events);
    EmbedOptions opts = embed_opts(cfg);

    // Each variant switches exactly one component; the trained enhancer and
    // the detector settings stay fixed so deltas isolate that switch.
    struct Variant {
        std::string row;  // label in the delta table
        std::string tag;  // filesystem tag
        std::function<FloatMat(const std::vector<std::string>&)> embed;
    };
    std::vector<Variant> variants;
    auto enhance_with = [&](FloatMat hs) { return enhance_batch(enh, hs); };

    bool all = cfg.ablate_switch == "all";
    variants.push_back({"full", "full", [&](const std::vector<std::string>& t) {
                            return enhance_with(
                                quantized_embed_events(sysbe, vocab, t, opts));
                        }});
    if (all || cfg.ablate_switch == "no-enhancer")
        variants.push_back(
            {"w/o CroSysEh", "wo_crosyseh",
             [&](const std::vector<std::string>& t) {
                 return quantized_embed_events(sysbe, vocab, t, opts);
             }});
    if (all || cfg.ablate_switch == "no-quant")
        variants.push_back({"w/o SysBE", "wo_sysbe",
                            [&](const std::vector<std::string>& t) {
                                return enhance_with(
                                    embed_events(student, vocab, t, opts));
                            }});
    std::map<std::string, QuantizedEncoder> requant;
    if (all || cfg.ablate_switch == "no-calibration") {
        std::vector<std::string> selection =
            select_layers(student.cfg, cfg.quant_fraction);
        auto stats = preset_stats(linear_layer_names(student.cfg), -10.0f, 10.0f);
        requant["preset"] =
            quantize_encoder(student, stats, selection, QuantPolicy{0.0});
        variants.push_back(
            {"w/o calibration", "wo_calibration",
             [&requant, &enhance_with, &vocab, &opts](
                 const std::vector<std::string>& t) {
                 return enhance_with(
                     quantized_embed_events(requant.at("preset"), vocab, t, opts));
             }});
    }
    if (all || cfg.ablate_switch == "calib-size") {
        std::vector<std::string> selection =
            select_layers(student.cfg, cfg.quant_fraction);
        for (size_t size : {size_t(30), size_t(50), size_t(70), size_t(100)}) {
            CalibrationSet calib;
            calib.system_id = cfg.system_id;
            size_t n = std::min(size, train_texts.size());
            calib.texts.assign(train_texts.begin(), train_texts.begin() + n);
            auto stats = collect_stats(student, vocab, calib, cfg.batch_size);
            std::string key = "calib-" + std::to_string(size);
            requant[key] = quantize_encoder(student, stats, selection,
                                            QuantPolicy{cfg.clip_percentile});
            variants.push_back(
                {"calib-size=" + std::to_string(size), "calib_" + std::to_string(size),
                 [&requant, &enhance_with, &vocab, &opts, key](
                     const std::vector<std::string>& t) {
                     return enhance_with(
                         quantized_embed_events(requant.at(key), vocab, t, opts));
                 }});
        }
    }

    size_t unknown = 0;
    std::vector<uint8_t> y_train = labels01(train_events, &unknown);
    std::vector<uint8_t> y_test = labels01(test_events);
    WindowSpec spec{cfg.detector.window_size};
    DetectorConfig dc = cfg.detector;
    dc.seed = cfg.seed;

    std::ofstream os(artifact_path(cfg, "ablation.csv"), std::ios::trunc);
    if (!os) throw FormatError("cannot write ablation.csv");
    os << "variant,precision,recall,f1\n";
    std::vector<std::string> artifacts{artifact_path(cfg, "ablation.csv")};
    std::vector<std::string> rows;
    for (const Variant& v : variants) {
        FloatMat train_emb = v.embed(train_texts);
        FloatMat test_emb = v.embed(test_texts);
        std::string export_path = artifact_path(
            cfg, std::string("ablate/") + v.tag + "_test.lrep");
        save_embedding_matrix(export_path, test_emb);
        artifacts.push_back(export_path);

        std::vector<Window> train_w = partition_windows(train_emb, y_train, spec);
        std::vector<Window> test_w = partition_windows(test_emb, y_test, spec);
        DetectorTrainResult res = train_detector(train_w, train_emb.cols, dc);
        EventPredictions pred =
            predict_events(res.params, test_w, dc.threshold, cfg.cores);
        DetectionMetrics m = metrics_for(pred, test_events);
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s,%.2f,%.2f,%.2f", v.row.c_str(),
                      100.0 * m.precision, 100.0 * m.recall, 100.0 * m.f1);
        os << buf << '\n';
        rows.push_back(v.row);
    }
    os.close();

    json settings = {{"switch", cfg.ablate_switch},
                     {"rows", rows},
                     {"window_size", dc.window_size},
                     {"epochs", dc.epochs},
                     {"unknown_labels", unknown}};
    write_manifest(cfg, "ablate", settings, artifacts);
    std::cout << "ablate: " << rows.size() << " variants -> "
              << artifact_path(cfg, "ablation.csv") << "\n";
}

void run_subcommand(const std::string& name, const PipelineConfig& cfg) {
    if (name == "ingest") cmd_ingest(cfg);
    else if (name == "mine-templates") cmd_mine_templates(cfg);
    else if (name == "init-encoder") cmd_init_encoder(cfg);
    else if (name == "embed") cmd_embed(cfg);
    else if (name == "calibrate") cmd_calibrate(cfg);
    else if (name == "quantize") cmd_quantize(cfg);
    else if (name == "train-enhancer") cmd_train_enhancer(cfg);
    else if (name == "train-detector") cmd_train_detector(cfg);
    else if (name == "detect") cmd_detect(cfg);
    else if (name == "bench-embed") cmd_bench_embed(cfg);
    else if (name == "bench-detect") cmd_bench_detect(cfg);
    else if (name == "compare-embeddings") cmd_compare_embeddings(cfg);
    else if (name == "ablate") cmd_ablate(cfg);
    else throw ConfigError("unknown subcommand: " + name);
}

}  // namespace logsem
