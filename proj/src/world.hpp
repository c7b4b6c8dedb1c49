#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "scene.hpp"

// Synthetic-world generation: ontologies, object features, question /
// program / answer triples, and the per-experiment train/test splits.
namespace hce {

// Symbolic ground truth: concepts, kinds, synonym classes, and the
// hypernym/meronym relations. same_kind is derived from kinds.
struct Ontology {
    std::vector<std::string> concepts;  // sorted, unique
    std::map<std::string, std::string> kind_of;
    std::map<std::string, int> synonym_class;  // every concept has a class
    std::vector<std::pair<std::string, std::string>> hypernym_edges;  // parent -> child
    std::vector<std::pair<std::string, std::string>> meronym_edges;   // whole -> part
    // Kinds that object attributes range over (internal taxonomy nodes
    // have a kind of their own but never appear on objects).
    std::vector<std::string> object_kinds;

    bool has_concept(const std::string& c) const { return kind_of.count(c) > 0; }
    std::vector<std::string> concepts_of_kind(const std::string& kind) const;
    std::vector<std::string> synonyms_of(const std::string& c) const;  // includes c

    bool same_kind(const std::string& a, const std::string& b) const;
    bool synonym(const std::string& a, const std::string& b) const;
    // Strict ancestor in the taxonomy, lifted to synonym classes.
    bool hypernym(const std::string& ancestor, const std::string& descendant) const;
    bool meronym(const std::string& whole, const std::string& part) const;
    bool relation(const std::string& metaconcept, const std::string& a,
                  const std::string& b) const;

    // Does concept c hold for an object with these ground-truth attributes?
    bool applies(const std::string& c,
                 const std::map<std::string, std::string>& attributes) const;

    void validate() const;  // invariants: acyclic taxonomy, synonyms share kind

    std::string to_json_text() const;
    static Ontology from_json_text(const std::string& text);
};

// CLEVR-like preset: 8 colors, 3 shapes, 2 materials, 2 sizes, plus 7
// synonym names for a total of 22 concepts.
Ontology clevr_ontology();

// Balanced taxonomy of depth 3 (families / genera / species) with part
// concepts attached to species via meronym edges.
Ontology taxonomy_ontology(int families, int genera_per_family, int species_per_genus,
                           int n_parts, std::uint64_t seed);

struct OntologySpec {
    std::map<std::string, int> concepts_per_kind;  // >= 2 kinds, >= 2 each
    double synonym_rate = 0.0;                     // fraction of concepts given a synonym
    int taxonomy_depth = 0;                        // 0 = flat
    int n_parts = 0;
};

Ontology generate_ontology(const OntologySpec& spec, std::uint64_t seed);

// Frozen unit-norm prototype per synonym class; features are the sum of
// the prototypes of an object's attributes plus Gaussian noise. A class
// prototype mixes in its taxonomy ancestors' directions, so related
// concepts look alike.
class FeatureModel {
  public:
    FeatureModel() = default;
    // interaction_weight > 0 adds a frozen direction per cross-kind pair of
    // attribute classes, entangling attributes (an object's appearance then
    // depends on attribute combinations, not attributes alone). kind_scale
    // rescales the per-kind prototype contribution (default 1).
    // ancestor_weight scales the taxonomy ancestors' share of a class
    // prototype (1 blends them equally with the class's own direction).
    FeatureModel(const Ontology& onto, int feat_dim, double noise_sigma,
                 std::uint64_t world_seed, double interaction_weight = 0.0,
                 std::map<std::string, double> kind_scale = {},
                 double ancestor_weight = 1.0);

    int feat_dim() const { return feat_dim_; }
    double noise_sigma() const { return noise_sigma_; }

    // noise_sigma_override < 0 keeps the model's own sigma.
    std::vector<double> synthesize(const std::map<std::string, std::string>& attributes,
                                   std::mt19937_64& noise_rng,
                                   double noise_sigma_override = -1.0) const;
    const std::vector<double>& prototype(const std::string& concept_name) const;

  private:
    int feat_dim_ = 0;
    double noise_sigma_ = 0.0;
    double interaction_weight_ = 0.0;
    std::map<std::string, int> class_of_;
    std::map<std::string, double> scale_of_;  // concept -> kind scale
    std::map<int, std::vector<double>> prototypes_;  // synonym class -> unit vector
    std::map<std::pair<int, int>, std::vector<double>> interactions_;
};

// One QA item; `target` is used by referential (Locate) items only.
struct QAItem {
    enum class Kind { visual, metaconcept, referential };
    Kind kind = Kind::visual;
    std::string program;
    bool answer = false;
    std::string scene_id;  // empty for metaconcept items
    int target = -1;
};

struct Dataset {
    Ontology ontology;
    std::vector<Scene> scenes;
    std::vector<QAItem> items;
    std::map<std::string, std::vector<std::size_t>> partitions;

    const Scene* scene_by_id(const std::string& id) const;
    void validate() const;  // programs parse; scene ids resolve
};

// Ground-truth (hard boolean) evaluation of a question program.
bool symbolic_answer(const Ontology& onto, const std::string& program_text,
                     const Scene* scene);

struct SceneGenOpts {
    int n_scenes = 0;
    int min_objects = 3;
    int max_objects = 10;
    std::string id_prefix = "scene";
    // Optional rewrite of freshly drawn attributes (bias injection).
    std::function<void(std::map<std::string, std::string>&, std::mt19937_64&)> constrain;
    // Multiplies the feature model's noise sigma for these scenes.
    double noise_scale = 1.0;
};

std::vector<Scene> generate_scenes(const Ontology& onto, const FeatureModel& fm,
                                   const SceneGenOpts& opts, std::uint64_t seed);

struct VisualQuestionOpts {
    int budget = 0;
    double two_concept_fraction = 0.5;
    // Concept names that may appear in programs; empty = all.
    std::set<std::string> allowed_concepts;
    // At least one mentioned concept must come from this set; empty = no constraint.
    std::set<std::string> required_concepts;
    // Kinds questions may draw from; empty = all object kinds.
    std::set<std::string> allowed_kinds;
};

// Exist(Filter(...)) questions with ~50/50 answers by rejection sampling.
std::vector<QAItem> generate_visual_questions(const std::vector<Scene>& scenes,
                                              const Ontology& onto,
                                              const VisualQuestionOpts& opts,
                                              std::uint64_t seed);

struct MetaQuestionOpts {
    int budget_per_metaconcept = 0;
    std::set<std::string> metaconcepts;  // e.g. {"synonym", "same_kind"}
    // Both queried concepts must satisfy this predicate when set.
    std::function<bool(const std::string&)> concept_allowed;
};

std::vector<QAItem> generate_metaconcept_questions(const Ontology& onto,
                                                   const MetaQuestionOpts& opts,
                                                   std::uint64_t seed);

// Locate items whose two-concept description picks a unique object.
std::vector<QAItem> generate_referential_items(const std::vector<Scene>& scenes,
                                               const Ontology& onto, int budget,
                                               std::uint64_t seed);

// ---- experiment split construction ----

enum class Experiment {
    zero_shot_synonym,
    biased_same_kind,
    few_shot_hypernym,
    metaconcept_generalization,
    referential_expression,
};

Experiment experiment_from_name(const std::string& name);
std::string experiment_name(Experiment e);

struct SplitSpec {
    Experiment experiment = Experiment::zero_shot_synonym;
    int feat_dim = 128;
    double noise_sigma = 0.1;
    // Feature entanglement; the biased preset uses these so attribute
    // recognition cannot ignore attribute co-occurrence.
    double interaction_weight = 0.0;
    std::map<std::string, double> kind_scale;
    // Shared scales (presets fill these; CLI flags may override).
    int n_train_scenes = 0;
    int n_test_scenes = 0;
    int n_visual_questions = 0;
    int n_meta_questions = 0;  // per metaconcept
    bool include_metaconcepts = true;  // ablation flag
    // biased_same_kind: number of split-B scenes in training.
    int k_split_b = 20;
    // few_shot_hypernym
    int scenes_per_rare = 5;
    int scenes_per_common = 40;
    // referential_expression
    int n_ref_train_questions = 1000;
    int n_ref_test_questions = 1000;
    // metaconcept_generalization: which world carries the relations.
    bool taxonomy_world = false;
    // Noise multiplier for test scenes in the few-shot split.
    double test_noise_scale = 1.0;
    // Taxonomy shape for taxonomy-backed splits.
    int tax_families = 4;
    int tax_genera = 4;
    int tax_species = 4;
    double ancestor_weight = 1.0;
};

SplitSpec default_split_spec(Experiment e);

// Deterministic world + split construction for one experiment.
Dataset build_split(const SplitSpec& spec, std::uint64_t seed);

// Per-experiment train/test contamination check; throws on a leak.
void validate_split(const SplitSpec& spec, const Dataset& ds);

// ---- file formats ----

void save_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path);
std::vector<Scene> load_scenes_jsonl(const std::string& path);  // ingest_features path
void save_qa_jsonl(const std::vector<QAItem>& items, const std::string& path);
std::vector<QAItem> load_qa_jsonl(const std::string& path);
void save_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

}  // namespace hce
