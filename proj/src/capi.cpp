// C shim over the core library: opaque handles, status codes, and a
// per-thread error message. Exceptions never cross this boundary.
#include "hce.h"

#include <exception>
#include <filesystem>
#include <fstream>
#include <new>
#include <stdexcept>
#include <string>

#include "experiment.hpp"
#include "json.hpp"
#include "train.hpp"
#include "world.hpp"

using nlohmann::json;

struct hce_dataset {
    hce::Dataset ds;
};

struct hce_model {
    hce::ModelState model;
    explicit hce_model(hce::ModelState m) : model(std::move(m)) {}
};

namespace {

thread_local std::string t_last_error;

void set_error(const std::string& msg) { t_last_error = msg; }

// invalid_argument marks caller mistakes; domain/range errors mark
// numerical trouble; everything else (I/O, parse, consistency) is data.
int classify(const std::exception& e) {
    if (dynamic_cast<const std::invalid_argument*>(&e)) return HCE_ERR_USAGE;
    if (dynamic_cast<const std::domain_error*>(&e)) return HCE_ERR_NUMERIC;
    if (dynamic_cast<const std::range_error*>(&e)) return HCE_ERR_NUMERIC;
    return HCE_ERR_DATA;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return HCE_OK;
    } catch (const std::exception& e) {
        set_error(e.what());
        return classify(e);
    } catch (...) {
        set_error("unknown failure");
        return HCE_ERR_DATA;
    }
}

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

extern "C" {

const char* hce_last_error(void) { return t_last_error.c_str(); }

int hce_gen_world(const char* preset, uint64_t seed, const char* out_dir) {
    return guarded([&] {
        require(preset && out_dir, "preset and out_dir are required");
        std::string p = preset;
        hce::Ontology onto;
        if (p == "clevr-like") {
            onto = hce::clevr_ontology();
        } else if (p == "taxonomy") {
            onto = hce::taxonomy_ontology(4, 4, 4, 8, seed);
        } else {
            throw std::invalid_argument("unknown world preset: " + p);
        }
        namespace fs = std::filesystem;
        fs::create_directories(out_dir);
        {
            std::ofstream out(fs::path(out_dir) / "world.json",
                              std::ios::binary | std::ios::trunc);
            if (!out) throw std::runtime_error(std::string("cannot write ") + out_dir);
            json j;
            j["preset"] = p;
            j["seed"] = seed;
            out << j.dump(2) << "\n";
        }
        std::ofstream out(fs::path(out_dir) / "ontology.json",
                          std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error(std::string("cannot write ") + out_dir);
        out << onto.to_json_text() << "\n";
    });
}

int hce_gen_split(const char* experiment, const char* world_dir, int k,
                  const char* out_dir) {
    return guarded([&] {
        require(experiment && world_dir && out_dir,
                "experiment, world_dir and out_dir are required");
        namespace fs = std::filesystem;
        std::ifstream in(fs::path(world_dir) / "world.json");
        if (!in)
            throw std::runtime_error(std::string("no world manifest in ") + world_dir);
        json j = json::parse(in);
        std::string preset = j.at("preset").get<std::string>();
        std::uint64_t seed = j.at("seed").get<std::uint64_t>();

        hce::Experiment e = hce::experiment_from_name(experiment);
        hce::SplitSpec spec = hce::default_split_spec(e);
        spec.experiment = e;
        if (preset == "taxonomy") spec.taxonomy_world = true;
        if (k >= 0) {
            if (e != hce::Experiment::biased_same_kind)
                throw std::invalid_argument("k only applies to biased_same_kind");
            spec.k_split_b = k;
        }
        hce::Dataset ds = hce::build_split(spec, seed);
        fs::create_directories(out_dir);
        hce::save_dataset(ds, out_dir);
    });
}

int hce_dataset_load(const char* dir, hce_dataset** out) {
    return guarded([&] {
        require(dir && out, "dir and out are required");
        auto* h = new hce_dataset{hce::load_dataset(dir)};
        *out = h;
    });
}

int hce_dataset_save(const hce_dataset* ds, const char* dir) {
    return guarded([&] {
        require(ds && dir, "dataset and dir are required");
        std::filesystem::create_directories(dir);
        hce::save_dataset(ds->ds, dir);
    });
}

int hce_dataset_partition_size(const hce_dataset* ds, const char* partition) {
    if (!ds || !partition) return -1;
    auto it = ds->ds.partitions.find(partition);
    return it == ds->ds.partitions.end() ? -1 : (int)it->second.size();
}

void hce_dataset_free(hce_dataset* ds) { delete ds; }

int hce_train(const hce_dataset* ds, const char* partition,
              const char* config_json, hce_model** out) {
    return guarded([&] {
        require(ds && partition && config_json && out,
                "dataset, partition, config_json and out are required");
        hce::TrainConfig tc = hce::TrainConfig::from_json_text(config_json);
        hce::ModelState model = hce::make_model(ds->ds, tc.model, tc.seed);
        hce::train_model(ds->ds, partition, tc, model);
        *out = new hce_model(std::move(model));
    });
}

int hce_model_load(const char* ckpt_path, hce_model** out) {
    return guarded([&] {
        require(ckpt_path && out, "ckpt_path and out are required");
        *out = new hce_model(hce::ModelState::load(ckpt_path));
    });
}

int hce_model_save(const hce_model* m, const char* ckpt_path) {
    return guarded([&] {
        require(m && ckpt_path, "model and ckpt_path are required");
        m->model.save(ckpt_path);
    });
}

void hce_model_free(hce_model* m) { delete m; }

int hce_eval(const hce_model* m, const hce_dataset* ds, const char* partition,
             const char* report_path, double* primary_out) {
    return guarded([&] {
        require(m && ds && partition, "model, dataset and partition are required");
        hce::EvalReport r = hce::evaluate(m->model, ds->ds, partition);
        if (report_path) {
            json j;
            j["partition"] = partition;
            j["n_boolean"] = r.n_boolean;
            j["n_referential"] = r.n_referential;
            if (r.n_boolean > 0) j["accuracy"] = r.accuracy;
            if (r.n_referential > 0) j["recall_at_1"] = r.recall_at_1;
            for (const auto& [name, acc] : r.per_metaconcept_accuracy)
                j["per_metaconcept_accuracy"][name] = acc;
            std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
            if (!out)
                throw std::runtime_error(std::string("cannot write ") + report_path);
            out << j.dump(2) << "\n";
        }
        if (primary_out)
            *primary_out = r.n_referential > 0 ? r.recall_at_1 : r.accuracy;
    });
}

int hce_run_experiment(const char* experiment, int n_seeds,
                       uint64_t base_seed, int ablate_metaconcepts,
                       const int* sweep_k, int n_sweep, const char* out_dir) {
    return guarded([&] {
        require(experiment && out_dir, "experiment and out_dir are required");
        require(n_sweep == 0 || sweep_k != nullptr,
                "sweep_k must be non-null when n_sweep > 0");
        hce::ExperimentOptions opts;
        opts.experiment = hce::experiment_from_name(experiment);
        opts.n_seeds = n_seeds;
        opts.base_seed = base_seed;
        opts.ablate_metaconcepts = ablate_metaconcepts != 0;
        opts.sweep_k.assign(sweep_k, sweep_k + n_sweep);
        opts.out_dir = out_dir;
        std::filesystem::create_directories(out_dir);
        hce::run_experiment(opts);
    });
}

}  // extern "C"
