#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "experiment.hpp"
#include "json.hpp"

using namespace hce;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Tiny preset so driver tests finish in seconds.
SplitSpec micro_split() {
    SplitSpec s = default_split_spec(Experiment::zero_shot_synonym);
    s.experiment = Experiment::zero_shot_synonym;
    s.feat_dim = 32;
    s.n_train_scenes = 40;
    s.n_test_scenes = 20;
    s.n_visual_questions = 120;
    s.n_meta_questions = 40;
    return s;
}

TrainConfig micro_train() {
    TrainConfig c;
    c.epochs = 1;
    c.model.embed_dim = 16;
    c.model.hidden = 8;
    return c;
}

std::vector<std::string> read_lines(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("run_preset aggregates per-seed results") {
    ExperimentResult r = run_preset(micro_split(), micro_train(), "micro", 2, 1);
    REQUIRE(r.runs.size() == 2);
    CHECK(r.runs[0].seed == 1);
    CHECK(r.runs[1].seed == 2);
    double mean = (r.runs[0].test_report.accuracy + r.runs[1].test_report.accuracy) / 2;
    CHECK(r.mean_test_primary == doctest::Approx(mean).epsilon(1e-12));
    double var = 0.0;
    for (const auto& run : r.runs) {
        double d = run.test_report.accuracy - mean;
        var += d * d;
    }
    CHECK(r.std_test_primary == doctest::Approx(std::sqrt(var / 1.0)).epsilon(1e-12));

    // Aggregate rows are present alongside per-seed rows.
    bool has_mean = false, has_std = false, has_seed_row = false;
    for (const auto& row : r.rows) {
        if (row.seed == "mean" && row.metric == "accuracy") has_mean = true;
        if (row.seed == "std" && row.metric == "accuracy") has_std = true;
        if (row.seed == "1" && row.partition == "test" && row.metric == "accuracy")
            has_seed_row = true;
        CHECK(row.preset == "micro");
    }
    CHECK(has_mean);
    CHECK(has_std);
    CHECK(has_seed_row);

    // Deterministic in the base seed.
    ExperimentResult again = run_preset(micro_split(), micro_train(), "micro", 2, 1);
    CHECK(again.mean_test_primary == r.mean_test_primary);
    CHECK(again.runs[0].test_report.accuracy == r.runs[0].test_report.accuracy);
}

TEST_CASE("run_experiment writes metrics and prediction artifacts") {
    fs::path dir = fs::temp_directory_path() / "hce_exp_artifacts";
    fs::remove_all(dir);
    fs::create_directories(dir);

    ExperimentOptions opts;
    opts.experiment = Experiment::zero_shot_synonym;
    opts.n_seeds = 2;
    opts.base_seed = 5;
    opts.split = micro_split();
    opts.train = micro_train();
    opts.out_dir = dir.string();
    auto results = run_experiment(opts);
    REQUIRE(results.size() == 1);

    auto lines = read_lines(dir / "metrics.csv");
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "experiment,preset,seed,partition,metric,value");
    CHECK(lines.size() == results[0].rows.size() + 1);
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(lines[i].rfind("zero_shot_synonym,", 0) == 0);

    // Reported accuracy equals a recount of the predictions artifact.
    for (const auto& run : results[0].runs) {
        fs::path pred = dir / "predictions" /
                        ("zero_shot_synonym_seed" + std::to_string(run.seed) +
                         "_test.jsonl");
        auto plines = read_lines(pred);
        CHECK(plines.size() == run.test_report.predictions.size());
        int correct = 0;
        for (const auto& l : plines) {
            json j = json::parse(l);
            if (j.at("correct").get<bool>()) ++correct;
        }
        CHECK((double)correct / (double)plines.size() ==
              doctest::Approx(run.test_report.accuracy).epsilon(1e-12));
    }
    fs::remove_all(dir);
}

TEST_CASE("k sweep emits one preset per k and a sweep table") {
    fs::path dir = fs::temp_directory_path() / "hce_exp_sweep";
    fs::remove_all(dir);
    fs::create_directories(dir);

    SplitSpec s = default_split_spec(Experiment::biased_same_kind);
    s.experiment = Experiment::biased_same_kind;
    s.feat_dim = 32;
    s.n_train_scenes = 60;
    s.n_test_scenes = 20;
    s.n_visual_questions = 120;
    s.n_meta_questions = 40;

    ExperimentOptions opts;
    opts.experiment = Experiment::biased_same_kind;
    opts.n_seeds = 2;
    opts.split = s;
    opts.train = micro_train();
    opts.sweep_k = {0, 3};
    opts.out_dir = dir.string();
    auto results = run_experiment(opts);
    REQUIRE(results.size() == 2);
    CHECK(results[0].preset == "biased_same_kind_k0");
    CHECK(results[1].preset == "biased_same_kind_k3");

    // sweep.csv: header + (n_seeds + mean) rows per k.
    auto lines = read_lines(dir / "sweep.csv");
    CHECK(lines[0] == "k,seed,partition,metric,value");
    CHECK(lines.size() == 1 + 2 * (2 + 1));
    CHECK(lines[1].rfind("0,", 0) == 0);
    CHECK(lines[4].rfind("3,", 0) == 0);

    // Sweeping any other preset is a usage error.
    ExperimentOptions bad = opts;
    bad.experiment = Experiment::zero_shot_synonym;
    bad.split = micro_split();
    bad.out_dir.clear();
    CHECK_THROWS_AS(run_experiment(bad), std::invalid_argument);
    fs::remove_all(dir);
}

TEST_CASE("ablation flag strips metaconcepts and tags the preset") {
    ExperimentOptions opts;
    opts.experiment = Experiment::zero_shot_synonym;
    opts.n_seeds = 1;
    opts.split = micro_split();
    opts.train = micro_train();
    opts.ablate_metaconcepts = true;
    auto results = run_experiment(opts);
    REQUIRE(results.size() == 1);
    CHECK(results[0].preset == "zero_shot_synonym_ablated");
    // No metaconcept accuracy rows when the items are removed.
    for (const auto& row : results[0].rows)
        CHECK(row.metric.rfind("accuracy_", 0) != 0);
}
