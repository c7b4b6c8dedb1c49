#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "train.hpp"
#include "world.hpp"

// Replication driver: builds a preset's world and split, trains one model
// per seed, evaluates, and writes metrics/prediction artifacts.
namespace hce {

struct ExperimentOptions {
    Experiment experiment = Experiment::zero_shot_synonym;
    int n_seeds = 4;
    std::uint64_t base_seed = 1;
    bool ablate_metaconcepts = false;
    std::vector<int> sweep_k;       // biased_same_kind only
    std::string out_dir;            // empty: keep results in memory only
    std::optional<SplitSpec> split; // preset override
    std::optional<TrainConfig> train;
};

// Epoch counts and model size tuned per preset so a full 4-seed run stays
// in the minutes range on one core.
TrainConfig preset_train_config(Experiment e);

struct SeedRun {
    std::uint64_t seed = 0;
    EvalReport train_report;
    EvalReport test_report;
    std::vector<double> loss_trace;
};

struct MetricRow {
    std::string experiment;
    std::string preset;  // experiment name plus variant tags (k, ablation)
    std::string seed;    // per-seed rows hold the number; aggregates "mean"/"std"
    std::string partition;
    std::string metric;
    double value = 0.0;
};

struct ExperimentResult {
    std::string preset;
    std::vector<SeedRun> runs;
    double mean_test_primary = 0.0;  // accuracy, or Recall@1 for referential
    double std_test_primary = 0.0;   // 0 when fewer than 2 runs
    std::vector<MetricRow> rows;
};

// One preset variant across seeds. Deterministic in base_seed. When
// predictions_dir is nonempty, per-seed prediction files are written there.
ExperimentResult run_preset(const SplitSpec& spec, const TrainConfig& train,
                            const std::string& preset_label, int n_seeds,
                            std::uint64_t base_seed,
                            const std::string& predictions_dir = "");

// Full driver: handles the ablation flag and the k sweep, writes
// out_dir/metrics.csv, out_dir/sweep.csv (when sweeping), and per-seed
// prediction files under out_dir/predictions/.
std::vector<ExperimentResult> run_experiment(const ExperimentOptions& opts);

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::string& path);
void write_predictions_jsonl(const Dataset& ds, const EvalReport& report,
                             const std::string& path);

}  // namespace hce
