/* C interface to the half-space concept-embedding engine.
 *
 * Every function returns a status code; on failure hce_last_error() holds a
 * human-readable message for the calling thread. Objects returned through
 * out-parameters are owned by the caller and must be released with the
 * matching *_free function.
 */
#ifndef HCE_H
#define HCE_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
#define HCE_OK 0           /* success */
#define HCE_ERR_USAGE 1    /* invalid argument or unknown name */
#define HCE_ERR_DATA 2     /* missing/corrupt file or inconsistent dataset */
#define HCE_ERR_NUMERIC 3  /* non-finite values or numerical failure */

/* Message describing the calling thread's most recent failure ("" if none).
 * The pointer stays valid until the thread's next failing hce_* call. */
const char* hce_last_error(void);

typedef struct hce_dataset hce_dataset;
typedef struct hce_model hce_model;

/* ---- world and split generation ---- */

/* Writes a world manifest (generator preset + seed) and its ontology to
 * out_dir. preset: "clevr-like" (attribute world) or "taxonomy"
 * (hierarchical class world). */
int hce_gen_world(const char* preset, uint64_t seed, const char* out_dir);

/* Builds the named experiment's train/test split from a world directory
 * written by hce_gen_world and saves the dataset to out_dir. experiment:
 * zero_shot_synonym | biased_same_kind | few_shot_hypernym |
 * metaconcept_generalization | referential_expression. k >= 0 overrides the
 * biased split's count of confound-breaking training scenes; pass -1 for
 * the preset default. */
int hce_gen_split(const char* experiment, const char* world_dir, int k,
                  const char* out_dir);

/* ---- datasets ---- */

int hce_dataset_load(const char* dir, hce_dataset** out);
int hce_dataset_save(const hce_dataset* ds, const char* dir);
/* Number of QA items in a named partition; -1 if the partition is absent. */
int hce_dataset_partition_size(const hce_dataset* ds, const char* partition);
void hce_dataset_free(hce_dataset* ds);

/* ---- models: training, evaluation, checkpoints ---- */

/* Creates a model for the dataset's vocabulary and trains it on the given
 * partition. config_json is a flat JSON object of training fields (lr,
 * batch_size, epochs, warmup_epochs, metaconcept_mix, seed, embed_dim,
 * hidden, ...); "{}" selects all defaults. */
int hce_train(const hce_dataset* ds, const char* partition,
              const char* config_json, hce_model** out);

int hce_model_load(const char* ckpt_path, hce_model** out);
int hce_model_save(const hce_model* m, const char* ckpt_path);
void hce_model_free(hce_model* m);

/* Evaluates the model on a partition. When report_path is non-NULL a JSON
 * report (counts, accuracy, recall@1, per-metaconcept accuracy) is written
 * there. When primary_out is non-NULL it receives the primary metric:
 * boolean accuracy, or recall@1 for referential partitions. */
int hce_eval(const hce_model* m, const hce_dataset* ds, const char* partition,
             const char* report_path, double* primary_out);

/* ---- replication driver ---- */

/* Runs a full experiment preset: builds the world and split, trains n_seeds
 * models from base_seed, evaluates, and writes metrics.csv plus per-seed
 * prediction files under out_dir. ablate_metaconcepts != 0 removes
 * metaconcept questions. sweep_k (biased_same_kind only) repeats the run
 * for each of n_sweep values of k and also writes sweep.csv; pass NULL, 0
 * to disable. */
int hce_run_experiment(const char* experiment, int n_seeds,
                       uint64_t base_seed, int ablate_metaconcepts,
                       const int* sweep_k, int n_sweep, const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* HCE_H */
