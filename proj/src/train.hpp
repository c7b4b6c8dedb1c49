#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "world.hpp"

// Training and evaluation over QA datasets: Adam on binary cross-entropy
// with mixed visual/metaconcept batches.
namespace hce {

struct TrainConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    int batch_size = 10;
    int epochs = 10;
    double clip_norm = 10.0;  // global gradient-norm cap; <= 0 disables
    // Fraction of each epoch drawn from metaconcept questions; negative
    // means proportional to the dataset composition (every item once).
    double metaconcept_mix = -1.0;
    // Visual-only epochs run before the main schedule. Grounding concepts
    // first keeps the metaconcept heads from fitting degenerate statistics.
    int warmup_epochs = 0;
    std::uint64_t seed = 0;
    ModelConfig model;

    std::string to_json_text() const;
    static TrainConfig from_json_text(const std::string& text);
    static TrainConfig from_file(const std::string& path);
};

class AdamOptimizer {
  public:
    AdamOptimizer(std::size_t n_params, double lr, double beta1, double beta2, double eps);
    void step(std::span<double> params, std::span<const double> grad);
    long steps_taken() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

// Model over the dataset's full concept vocabulary and the metaconcepts
// its programs mention, randomly initialized from the seed.
ModelState make_model(const Dataset& ds, const ModelConfig& config, std::uint64_t seed);

struct TrainResult {
    std::vector<double> epoch_losses;  // mean per-item loss per epoch
    long steps = 0;
};

// Adam/BCE over the boolean items of one partition. Referential items are
// evaluation-only and rejected here. Deterministic in (model init, seed).
// Throws on a non-finite loss or gradient, naming the offending batch.
TrainResult train_model(const Dataset& ds, const std::string& partition,
                        const TrainConfig& config, ModelState& model);

struct Prediction {
    std::size_t item_index = 0;
    double score = 0.0;       // boolean items: executed probability
    int predicted_index = -1; // referential items
    bool correct = false;
};

struct EvalReport {
    std::size_t n_boolean = 0;
    std::size_t n_referential = 0;
    double accuracy = 0.0;      // boolean items, threshold 0.5
    double recall_at_1 = 0.0;   // referential items
    std::map<std::string, double> per_metaconcept_accuracy;
    std::vector<Prediction> predictions;
};

EvalReport evaluate(const ModelState& model, const Dataset& ds,
                    const std::string& partition);

}  // namespace hce
