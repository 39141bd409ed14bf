#pragma once
// End-to-end pipeline: configuration, graph construction, pretraining,
// training, evaluation and the two experiment harnesses (hop sweep and layer
// ablation). The stage commands persist their outputs in a run directory:
//
//   config.json         effective configuration
//   data/               native-format dataset with split tags (ingest, synth)
//   mined.tsv           collaborative triples (augment)
//   transe.ckpt         pretrained base embeddings (pretrain)
//   model.ckpt          trained parameters (train)
//   train_log.tsv       per-epoch loss and validation Recall@20 (train)
//   timing.tsv          per-epoch wall time (train; not reproducible)
//   metrics.tsv/.json   evaluation report (evaluate)
//   hop_sweep.tsv       one row per hop count (hop-sweep)
//   ablation.tsv        full model plus three ablations (ablate)

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "kgperc/datasets.hpp"
#include "kgperc/evaluator.hpp"
#include "kgperc/model.hpp"
#include "kgperc/trainer.hpp"
#include "kgperc/transe.hpp"

namespace kgperc {

struct DatasetConfig {
    // "native", "mind", "movielens" or "synthetic".
    std::string adapter = "synthetic";
    std::filesystem::path native_dir;
    std::filesystem::path behaviors;
    std::filesystem::path news;
    std::filesystem::path ratings;
    std::filesystem::path movies;
    double rating_threshold = 4.0;
    int min_clicks = kMindMinClicks;
    SyntheticSpec synthetic;
};

struct GraphConfig {
    double confidence_threshold = kDefaultConfidenceThreshold;
    int min_cooccurrence = kDefaultMinCooccurrence;
    int min_common_users = kDefaultMinCommonUsers;
    // Mine SameNews / SameUser triples. Off for the collaborative ablation.
    bool collaborative = true;
};

struct PretrainConfig {
    bool enabled = true;
    double margin = 1.0;
    double learning_rate = 0.01;
    int epochs = 50;
    int batch_size = 128;
};

struct EvaluationConfig {
    std::vector<int> ks{10, 20};
    int repeats = 5;
    SplitRatios ratios;
    bool chronological = false;
};

struct PipelineConfig {
    DatasetConfig dataset;
    GraphConfig graph;
    PretrainConfig pretrain;
    ModelConfig model;
    TrainConfig train;  // train.seed is derived from `seed` at run time
    EvaluationConfig evaluation;
    std::vector<int> sweep_hops{1, 2, 3, 4};
    std::uint64_t seed = 2024;
    int threads = 1;
    std::filesystem::path out = "run";

    void validate() const;
};

void to_json(nlohmann::json& j, const PipelineConfig& c);
// Missing keys keep their defaults; unknown keys are a ConfigError.
void from_json(const nlohmann::json& j, PipelineConfig& c);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

// Seeds for one repeat, all derived from the master seed.
struct RunSeeds {
    std::uint64_t split = 0;
    std::uint64_t transe = 0;
    std::uint64_t init = 0;
    std::uint64_t train = 0;
};
RunSeeds run_seeds(std::uint64_t master_seed, int repeat);

Dataset load_source(const DatasetConfig& config);

// The graph a model is trained on: KG triples above the confidence gate,
// news->entity mentions, training clicks and (optionally) mined triples.
struct TrainingGraph {
    KnowledgeGraph graph;
    NodeContexts contexts;
    std::size_t category_count = 1;
    std::vector<Triple> mined;
    TripleFileStats kg_stats;
};

// Mines SameNews and SameUser triples (training clicks only) on the dataset's
// node registry.
std::vector<RawTriple> mine_collaborative(const Dataset& data, const InteractionLog& tagged,
                                          const GraphConfig& config);

// `mined` overrides mining when given (e.g. read back from mined.tsv); it is
// ignored when config.collaborative is false.
TrainingGraph build_training_graph(const Dataset& data, const InteractionLog& tagged,
                                   const GraphConfig& config,
                                   const std::vector<RawTriple>* mined = nullptr);

struct SplitItems {
    UserItems train, validation, test;
};
SplitItems split_items(const InteractionLog& tagged, std::size_t user_count);

TransEState pretrain_graph(const TrainingGraph& tg, const PipelineConfig& config,
                           std::uint64_t seed);

// Recall@20 on the validation split, candidates exclude training positives.
ValidationFn validation_recall(const KgupnModel& model, const SplitItems& items, int threads);

RunMetrics evaluate_model(const KgupnModel& model, const ModelParams& params,
                          const SplitItems& items, std::span<const int> ks, int threads);

// One complete repeat in memory: split, graph, pretrain, train, evaluate.
struct RepeatResult {
    ModelParams params;
    std::vector<EpochRecord> log;
    RunMetrics metrics;
    // users x news scores from the final representations.
    Eigen::MatrixXd scores;
};
RepeatResult run_repeat(const Dataset& data, const PipelineConfig& config, int repeat,
                        const std::optional<InteractionLog>& tagged = std::nullopt,
                        bool keep_scores = false);

struct HopRow {
    int hops = 0;
    double ndcg10 = 0.0;
    double recall20 = 0.0;
    double seconds_per_epoch = 0.0;
};
// Repeat 0 reuses `tagged` when given.
std::vector<HopRow> hop_sweep(const Dataset& data, const PipelineConfig& config,
                              std::span<const int> hops,
                              const std::optional<InteractionLog>& tagged = std::nullopt);
void write_hop_sweep(const std::filesystem::path& path, const std::vector<HopRow>& rows);

struct AblationRow {
    std::string variant;  // full, w/o-collaborative, w/o-propagation, w/o-context
    double recall20 = 0.0;
    double ndcg10 = 0.0;
    std::size_t representation_dim = 0;
    Eigen::MatrixXd scores;  // repeat 0, users x news
};
std::vector<AblationRow> ablation(const Dataset& data, const PipelineConfig& config,
                                  const std::optional<InteractionLog>& tagged = std::nullopt);
void write_ablation(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

// Stage commands over a run directory (config.out).
void cmd_ingest(const PipelineConfig& config);
void cmd_synth(const PipelineConfig& config);
void cmd_augment(const PipelineConfig& config);
void cmd_pretrain(const PipelineConfig& config);
void cmd_train(const PipelineConfig& config);
MetricsReport cmd_evaluate(const PipelineConfig& config);
std::vector<HopRow> cmd_hop_sweep(const PipelineConfig& config);
std::vector<AblationRow> cmd_ablate(const PipelineConfig& config);

// Dispatches a subcommand name. Throws ValidationError for unknown names.
void run_command(const std::string& command, const PipelineConfig& config);

}  // namespace kgperc
