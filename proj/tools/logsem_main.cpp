#include <iostream>
#include <string>
#include <utility>

#include <CLI11.hpp>

#include "logsem/errors.hpp"
#include "logsem/pipeline.hpp"

namespace {

constexpr std::pair<const char*, const char*> kSubcommands[] = {
    {"ingest", "parse raw logs into normalized event streams"},
    {"mine-templates", "mine Drain templates and TF-IDF statistics"},
    {"init-encoder", "materialize seeded teacher/student encoder weights"},
    {"embed", "embed events with the chosen representation"},
    {"calibrate", "collect activation statistics on calibration samples"},
    {"quantize", "quantize the selected student layers to INT8"},
    {"train-enhancer", "fit the residual low-rank enhancer"},
    {"train-detector", "train the recurrent event-level detector"},
    {"detect", "score events and emit predictions plus metrics"},
    {"bench-embed", "time the embedding paths"},
    {"bench-detect", "time detection on precomputed embeddings"},
    {"compare-embeddings", "rank-agreement between two representations"},
    {"ablate", "run the component and calibration-size ablations"},
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"logsem: semantic log representations and event-level "
                 "anomaly detection on CPU"};
    app.fallthrough();

    std::string config_path;
    bool print_effective = false;
    app.add_option("--config", config_path, "JSON config file");
    app.add_flag("--print-effective-config", print_effective,
                 "print the merged configuration and exit");

    // flag overrides (defaults < config file < flags < LOGSEM_OUT_DIR)
    std::string train_log, test_log, layout, vocab, wordvecs, system_id;
    std::string representation, compare_a, compare_b, ablate_switch, out_dir;
    uint64_t seed = 0;
    size_t cores = 0, calib_size = 0, enhancer_rank = 0, window_size = 0,
           hidden = 0, similarity_pairs = 0;
    int batch_size = 0, warmup = 0, enhancer_epochs = 0, detector_epochs = 0;
    double clip_percentile = 0, quant_fraction = 0, threshold = 0,
           pos_weight = 0, enhancer_lr = 0, detector_lr = 0;
    int t_layers = 0, t_hidden = 0, t_heads = 0, t_ffn = 0;
    int s_layers = 0, s_hidden = 0, s_heads = 0, s_ffn = 0, max_seq = 0;

    app.add_option("--train-log", train_log, "raw training log file");
    app.add_option("--test-log", test_log, "raw test log file");
    app.add_option("--layout", layout, "field layout JSON");
    app.add_option("--vocab", vocab, "wordpiece vocabulary file");
    app.add_option("--wordvecs", wordvecs, "static word-vector table");
    app.add_option("--system-id", system_id, "system identifier");
    app.add_option("--representation", representation,
                   "static:<table>|teacher|student|qtybert");
    app.add_option("--out-dir", out_dir, "artifact directory");
    app.add_option("--seed", seed, "global seed");
    app.add_option("--cores", cores, "worker-pool cap");
    app.add_option("--batch-size", batch_size, "encoder batch size");
    app.add_option("--warmup", warmup, "benchmark warmup runs");
    app.add_option("--similarity-pairs", similarity_pairs,
                   "sampled pairs for embedding comparison");
    app.add_option("--calib-size", calib_size, "calibration sample size");
    app.add_option("--clip-percentile", clip_percentile,
                   "histogram clip percentile per tail");
    app.add_option("--quant-fraction", quant_fraction,
                   "fraction of linear layers to quantize");
    app.add_option("--enhancer-rank", enhancer_rank, "low-rank dimension r");
    app.add_option("--enhancer-epochs", enhancer_epochs, "enhancer epochs");
    app.add_option("--enhancer-lr", enhancer_lr, "enhancer learning rate");
    app.add_option("--window-size", window_size, "detector window size m");
    app.add_option("--detector-hidden", hidden, "detector hidden size");
    app.add_option("--detector-epochs", detector_epochs, "detector epochs");
    app.add_option("--detector-lr", detector_lr, "detector learning rate");
    app.add_option("--threshold", threshold, "decision threshold");
    app.add_option("--pos-weight", pos_weight, "positive-class loss weight");
    app.add_option("--compare-a", compare_a, "first representation to compare");
    app.add_option("--compare-b", compare_b, "second representation to compare");
    app.add_option("--switch", ablate_switch,
                   "ablation switch: all|no-enhancer|no-quant|no-calibration|"
                   "calib-size");
    app.add_option("--teacher-layers", t_layers, "teacher encoder layers");
    app.add_option("--teacher-hidden", t_hidden, "teacher hidden size");
    app.add_option("--teacher-heads", t_heads, "teacher attention heads");
    app.add_option("--teacher-ffn", t_ffn, "teacher intermediate size");
    app.add_option("--student-layers", s_layers, "student encoder layers");
    app.add_option("--student-hidden", s_hidden, "student hidden size");
    app.add_option("--student-heads", s_heads, "student attention heads");
    app.add_option("--student-ffn", s_ffn, "student intermediate size");
    app.add_option("--max-seq-len", max_seq, "token sequence cap");

    for (const auto& [name, help] : kSubcommands) app.add_subcommand(name, help);
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        logsem::PipelineConfig cfg;
        if (!config_path.empty()) cfg.merge_json_file(config_path);

        auto set_if = [&](const char* flag, auto& dst, const auto& src) {
            if (app.count(flag)) dst = src;
        };
        set_if("--train-log", cfg.train_log, train_log);
        set_if("--test-log", cfg.test_log, test_log);
        set_if("--layout", cfg.layout_path, layout);
        set_if("--vocab", cfg.vocab_path, vocab);
        set_if("--wordvecs", cfg.wordvec_path, wordvecs);
        set_if("--system-id", cfg.system_id, system_id);
        set_if("--representation", cfg.representation, representation);
        set_if("--out-dir", cfg.out_dir, out_dir);
        set_if("--seed", cfg.seed, seed);
        set_if("--cores", cfg.cores, cores);
        set_if("--batch-size", cfg.batch_size, batch_size);
        set_if("--warmup", cfg.warmup, warmup);
        set_if("--similarity-pairs", cfg.similarity_pairs, similarity_pairs);
        set_if("--calib-size", cfg.calib_size, calib_size);
        set_if("--clip-percentile", cfg.clip_percentile, clip_percentile);
        set_if("--quant-fraction", cfg.quant_fraction, quant_fraction);
        set_if("--enhancer-rank", cfg.enhancer_rank, enhancer_rank);
        set_if("--enhancer-epochs", cfg.enhancer.epochs, enhancer_epochs);
        set_if("--enhancer-lr", cfg.enhancer.learning_rate, enhancer_lr);
        set_if("--window-size", cfg.detector.window_size, window_size);
        set_if("--detector-hidden", cfg.detector.hidden, hidden);
        set_if("--detector-epochs", cfg.detector.epochs, detector_epochs);
        set_if("--detector-lr", cfg.detector.learning_rate, detector_lr);
        set_if("--threshold", cfg.detector.threshold, threshold);
        set_if("--pos-weight", cfg.detector.pos_weight, pos_weight);
        set_if("--compare-a", cfg.compare_a, compare_a);
        set_if("--compare-b", cfg.compare_b, compare_b);
        set_if("--switch", cfg.ablate_switch, ablate_switch);
        set_if("--teacher-layers", cfg.teacher_cfg.num_layers, t_layers);
        set_if("--teacher-hidden", cfg.teacher_cfg.hidden_size, t_hidden);
        set_if("--teacher-heads", cfg.teacher_cfg.num_heads, t_heads);
        set_if("--teacher-ffn", cfg.teacher_cfg.intermediate_size, t_ffn);
        set_if("--student-layers", cfg.student_cfg.num_layers, s_layers);
        set_if("--student-hidden", cfg.student_cfg.hidden_size, s_hidden);
        set_if("--student-heads", cfg.student_cfg.num_heads, s_heads);
        set_if("--student-ffn", cfg.student_cfg.intermediate_size, s_ffn);
        if (app.count("--max-seq-len")) {
            cfg.teacher_cfg.max_seq_len = max_seq;
            cfg.student_cfg.max_seq_len = max_seq;
        }
        cfg.apply_env();
        cfg.validate();

        if (print_effective) {
            std::cout << cfg.effective_json() << "\n";
            return 0;
        }
        if (app.get_subcommands().empty()) {
            std::cerr << "logsem: a subcommand is required (see --help)\n";
            return 1;
        }
        logsem::run_subcommand(app.get_subcommands().front()->get_name(), cfg);
        return 0;
    } catch (const logsem::ConfigError& e) {
        std::cerr << "logsem: config error: " << e.what() << "\n";
        return 1;
    } catch (const logsem::MissingArtifactError& e) {
        std::cerr << "logsem: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "logsem: " << e.what() << "\n";
        return 3;
    }
}
