// Command-line front end. Talks to the engine exclusively through the C
// API in hce.h; exit codes mirror its status codes (0 ok, 1 usage,
// 2 data, 3 numeric).
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hce.h"

namespace {

int fail(int code) {
    std::fprintf(stderr, "error: %s\n", hce_last_error());
    return code;
}

int cmd_gen_world(const std::string& preset, std::uint64_t seed,
                  const std::string& out) {
    int rc = hce_gen_world(preset.c_str(), seed, out.c_str());
    if (rc != HCE_OK) return fail(rc);
    std::printf("wrote world '%s' (seed %llu) to %s\n", preset.c_str(),
                (unsigned long long)seed, out.c_str());
    return 0;
}

int cmd_gen_split(const std::string& experiment, const std::string& world,
                  int k, const std::string& out) {
    int rc = hce_gen_split(experiment.c_str(), world.c_str(), k, out.c_str());
    if (rc != HCE_OK) return fail(rc);
    std::printf("wrote %s split to %s\n", experiment.c_str(), out.c_str());
    return 0;
}

int cmd_train(const std::string& data, const std::string& config,
              const std::string& out) {
    std::ifstream in(config);
    if (!in) {
        std::fprintf(stderr, "error: cannot read config %s\n", config.c_str());
        return HCE_ERR_DATA;
    }
    std::stringstream ss;
    ss << in.rdbuf();

    hce_dataset* ds = nullptr;
    int rc = hce_dataset_load(data.c_str(), &ds);
    if (rc != HCE_OK) return fail(rc);
    hce_model* model = nullptr;
    rc = hce_train(ds, "train", ss.str().c_str(), &model);
    if (rc == HCE_OK) rc = hce_model_save(model, out.c_str());
    hce_model_free(model);
    hce_dataset_free(ds);
    if (rc != HCE_OK) return fail(rc);
    std::printf("wrote checkpoint %s\n", out.c_str());
    return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& data,
             const std::string& partition, const std::string& report) {
    hce_dataset* ds = nullptr;
    int rc = hce_dataset_load(data.c_str(), &ds);
    if (rc != HCE_OK) return fail(rc);
    hce_model* model = nullptr;
    rc = hce_model_load(ckpt.c_str(), &model);
    double primary = 0.0;
    if (rc == HCE_OK)
        rc = hce_eval(model, ds, partition.c_str(),
                      report.empty() ? nullptr : report.c_str(), &primary);
    hce_model_free(model);
    hce_dataset_free(ds);
    if (rc != HCE_OK) return fail(rc);
    std::printf("%s primary metric: %.6f\n", partition.c_str(), primary);
    if (!report.empty()) std::printf("wrote report %s\n", report.c_str());
    return 0;
}

int cmd_experiment(const std::string& preset, int seeds, std::uint64_t base_seed,
                   bool ablate, const std::vector<int>& sweep_k,
                   const std::string& out) {
    int rc = hce_run_experiment(preset.c_str(), seeds, base_seed, ablate ? 1 : 0,
                                sweep_k.empty() ? nullptr : sweep_k.data(),
                                (int)sweep_k.size(), out.c_str());
    if (rc != HCE_OK) return fail(rc);
    std::printf("wrote experiment artifacts to %s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"half-space concept-embedding engine"};
    app.require_subcommand(1);

    std::string preset = "clevr-like", out, experiment, world, data, config;
    std::string ckpt, partition = "test", report;
    std::uint64_t seed = 1, base_seed = 1;
    int k = -1, seeds = 4;
    bool ablate = false;
    std::vector<int> sweep_k;

    auto* gw = app.add_subcommand("gen-world", "generate a world directory");
    gw->add_option("--preset", preset, "clevr-like | taxonomy")
        ->capture_default_str();
    gw->add_option("--seed", seed, "world seed")->capture_default_str();
    gw->add_option("--out", out, "output directory")->required();

    auto* gs = app.add_subcommand("gen-split", "build an experiment split");
    gs->add_option("--experiment", experiment, "experiment name")->required();
    gs->add_option("--world", world, "world directory from gen-world")->required();
    gs->add_option("--k", k, "biased split: confound-breaking scene count");
    gs->add_option("--out", out, "output directory (default WORLD/split)");

    auto* tr = app.add_subcommand("train", "train a model on a dataset");
    tr->add_option("--data", data, "dataset directory")->required();
    tr->add_option("--config", config, "training config JSON file")->required();
    tr->add_option("--out", ckpt, "checkpoint output path")->required();

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint");
    ev->add_option("--ckpt", ckpt, "checkpoint path")->required();
    ev->add_option("--data", data, "dataset directory")->required();
    ev->add_option("--partition", partition, "partition name")
        ->capture_default_str();
    ev->add_option("--report", report, "JSON report output path");

    auto* ex = app.add_subcommand("experiment", "run a replication preset");
    ex->add_option("--preset", experiment, "experiment name")->required();
    ex->add_option("--seeds", seeds, "number of seeds")->capture_default_str();
    ex->add_option("--base-seed", base_seed, "first seed")->capture_default_str();
    ex->add_flag("--ablate-metaconcepts", ablate, "drop metaconcept questions");
    ex->add_option("--sweep-k", sweep_k,
                   "biased split: sweep these k values")
        ->delimiter(',');
    ex->add_option("--out", out, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : HCE_ERR_USAGE;
    }

    if (gw->parsed()) return cmd_gen_world(preset, seed, out);
    if (gs->parsed())
        return cmd_gen_split(experiment, world,
                             gs->count("--k") ? k : -1,
                             out.empty() ? world + "/split" : out);
    if (tr->parsed()) return cmd_train(data, config, ckpt);
    if (ev->parsed()) return cmd_eval(ckpt, data, partition, report);
    if (ex->parsed())
        return cmd_experiment(experiment, seeds, base_seed, ablate, sweep_k, out);
    return HCE_ERR_USAGE;
}
