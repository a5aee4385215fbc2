#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "logsem/detector.hpp"
#include "logsem/drain.hpp"
#include "logsem/encoder.hpp"
#include "logsem/enhancer.hpp"

namespace logsem {

// Everything a subcommand needs, merged from defaults < config file < flag
// overrides < LOGSEM_OUT_DIR (output directory only).
struct PipelineConfig {
    // inputs
    std::string train_log;
    std::string test_log;
    std::string layout_path;
    std::string vocab_path;
    std::string wordvec_path;
    std::string system_id = "synthetic";

    // representation: "static:<table>", "teacher", "student" or "qtybert"
    std::string representation = "qtybert";

    EncoderConfig teacher_cfg{12, 768, 12, 3072, 128, 0};
    EncoderConfig student_cfg{4, 312, 12, 1248, 128, 0};

    DrainConfig drain;

    double quant_fraction = 0.2;
    double clip_percentile = 0.1;
    size_t calib_size = 100;

    size_t enhancer_rank = 64;
    EnhancerTrainConfig enhancer;

    DetectorConfig detector;

    size_t cores = 1;
    int warmup = 2;
    size_t similarity_pairs = 1000;

    std::string compare_a = "qtybert";
    std::string compare_b = "teacher";
    // "all", "no-enhancer", "no-quant", "no-calibration" or "calib-size"
    std::string ablate_switch = "all";

    std::string out_dir = "out";
    uint64_t seed = 42;
    int batch_size = 64;

    void merge_json_file(const std::string& path);  // ConfigError on bad keys
    void apply_env();                               // LOGSEM_OUT_DIR only
    std::string effective_json() const;
    void validate() const;
};

// A parsed representation choice.
struct RepSpec {
    enum class Kind { Static, Teacher, Student, Qtybert } kind;
    std::string table;  // static table tag ("word2vec", ...)
    std::string label;  // filesystem-safe tag used in artifact names
};
RepSpec parse_representation(const std::string& s);

// Artifact path inside the output directory.
std::string artifact_path(const PipelineConfig& cfg, const std::string& name);

// Throws MissingArtifactError naming the subcommand that produces `path`.
void require_artifact(const std::string& path, const std::string& producer);

// Subcommands.  Each writes its artifacts plus a "<step>.manifest.json"
// with the effective settings (no timestamps: reruns are byte-identical)
// and prints a one-line summary to stdout.
void cmd_ingest(const PipelineConfig& cfg);
void cmd_mine_templates(const PipelineConfig& cfg);
void cmd_init_encoder(const PipelineConfig& cfg);
void cmd_embed(const PipelineConfig& cfg);
void cmd_calibrate(const PipelineConfig& cfg);
void cmd_quantize(const PipelineConfig& cfg);
void cmd_train_enhancer(const PipelineConfig& cfg);
void cmd_train_detector(const PipelineConfig& cfg);
void cmd_detect(const PipelineConfig& cfg);
void cmd_bench_embed(const PipelineConfig& cfg);
void cmd_bench_detect(const PipelineConfig& cfg);
void cmd_compare_embeddings(const PipelineConfig& cfg);
void cmd_ablate(const PipelineConfig& cfg);

// name -> handler dispatch; unknown name -> ConfigError.
void run_subcommand(const std::string& name, const PipelineConfig& cfg);

}  // namespace logsem
