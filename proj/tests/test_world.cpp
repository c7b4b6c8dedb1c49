#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "program.hpp"
#include "world.hpp"

using namespace hce;

namespace {

// Independent ground-truth check: does concept c hold for the object?
// Re-derives synonym/ancestor matching straight from the ontology tables.
bool oracle_applies(const Ontology& o, const std::string& c,
                    const std::map<std::string, std::string>& attrs) {
    std::map<int, int> parent;
    for (const auto& [p, ch] : o.hypernym_edges)
        parent[o.synonym_class.at(ch)] = o.synonym_class.at(p);
    for (const auto& [_, v] : attrs) {
        int cur = o.synonym_class.at(v);
        if (cur == o.synonym_class.at(c)) return true;
        while (parent.count(cur)) {
            cur = parent.at(cur);
            if (cur == o.synonym_class.at(c)) return true;
        }
    }
    return false;
}

// Brute-force evaluation of Exist(Filter...(Scene)) by set intersection.
bool oracle_exist(const Ontology& o, const std::string& program, const Scene& scene) {
    Program p = parse_program(program);
    std::vector<std::string> names;
    for (const ProgramNode* n = p.root.get(); n; n = n->child.get())
        if (n->kind == NodeKind::filter) names.push_back(n->concept_name);
    for (const auto& obj : scene.objects) {
        bool all = true;
        for (const auto& c : names) all = all && oracle_applies(o, c, obj.attributes);
        if (all) return true;
    }
    return false;
}

std::string dataset_digest(const Dataset& ds) {
    std::string out = ds.ontology.to_json_text();
    for (const auto& s : ds.scenes) {
        out += s.id;
        for (const auto& obj : s.objects) {
            for (const auto& [k, v] : obj.attributes) out += k + "=" + v + ";";
            for (double x : obj.features) {
                char buf[32];
                snprintf(buf, sizeof buf, "%.17g,", x);
                out += buf;
            }
        }
    }
    for (const auto& item : ds.items)
        out += item.program + (item.answer ? "#1" : "#0") + item.scene_id +
               std::to_string(item.target);
    for (const auto& [name, idx] : ds.partitions) {
        out += name;
        for (auto i : idx) out += std::to_string(i) + ",";
    }
    return out;
}

SplitSpec small_spec(Experiment e) {
    SplitSpec s = default_split_spec(e);
    s.feat_dim = 32;
    switch (e) {
        case Experiment::zero_shot_synonym:
            s.n_train_scenes = 120;
            s.n_test_scenes = 60;
            s.n_visual_questions = 300;
            s.n_meta_questions = 80;
            break;
        case Experiment::biased_same_kind:
            s.n_train_scenes = 150;
            s.n_test_scenes = 60;
            s.n_visual_questions = 300;
            s.n_meta_questions = 60;
            s.k_split_b = 10;
            break;
        case Experiment::few_shot_hypernym:
            s.scenes_per_rare = 2;
            s.scenes_per_common = 4;
            s.n_test_scenes = 64;
            s.n_visual_questions = 300;
            s.n_meta_questions = 80;
            break;
        case Experiment::metaconcept_generalization:
            s.n_train_scenes = 100;
            s.n_visual_questions = 200;
            s.n_meta_questions = 80;
            break;
        case Experiment::referential_expression:
            s.n_train_scenes = 150;
            s.n_test_scenes = 80;
            s.n_ref_train_questions = 200;
            s.n_ref_test_questions = 120;
            s.n_meta_questions = 40;
            break;
    }
    return s;
}

double frac_positive(const Dataset& ds, const std::string& part) {
    int pos = 0, n = 0;
    for (auto i : ds.partitions.at(part)) {
        if (ds.items[i].kind == QAItem::Kind::referential) continue;
        ++n;
        pos += ds.items[i].answer ? 1 : 0;
    }
    return n ? (double)pos / n : 0.5;
}

}  // namespace

TEST_CASE("clevr ontology structure and relations") {
    Ontology o = clevr_ontology();
    CHECK(o.concepts.size() == 22);
    CHECK(o.concepts_of_kind("color").size() == 8);
    CHECK(o.concepts_of_kind("shape").size() == 6);
    CHECK(o.concepts_of_kind("material").size() == 4);
    CHECK(o.concepts_of_kind("size").size() == 4);

    CHECK(o.synonym("cube", "block"));
    CHECK(o.synonym("block", "cube"));
    CHECK(o.synonym("metal", "shiny"));
    CHECK(o.synonym("large", "big"));
    CHECK_FALSE(o.synonym("cube", "sphere"));
    CHECK(o.same_kind("cube", "ball"));
    CHECK_FALSE(o.same_kind("cube", "red"));
    CHECK(o.hypernym_edges.empty());
    CHECK_FALSE(o.hypernym("cube", "block"));

    CHECK(o.relation("synonym", "cylinder", "tube"));
    CHECK_FALSE(o.relation("synonym", "cube", "cube"));  // pairs are distinct
    CHECK(o.relation("same_kind", "red", "blue"));
    CHECK_FALSE(o.relation("same_kind", "red", "rubber"));
    CHECK_THROWS_AS((void)o.relation("nonsense", "red", "blue"), std::invalid_argument);

    std::map<std::string, std::string> attrs = {
        {"color", "red"}, {"shape", "cube"}, {"material", "metal"}, {"size", "small"}};
    CHECK(o.applies("red", attrs));
    CHECK(o.applies("block", attrs));  // synonym of the stored attribute
    CHECK(o.applies("tiny", attrs));
    CHECK_FALSE(o.applies("blue", attrs));
    CHECK_FALSE(o.applies("sphere", attrs));
}

TEST_CASE("taxonomy ontology: hypernym closure and meronym") {
    Ontology o = taxonomy_ontology(4, 4, 4, 8, 7);
    // 4 families + 16 genera + 64 species + 8 parts
    CHECK(o.concepts.size() == 92);
    CHECK(o.concepts_of_kind("species").size() == 64);
    CHECK(o.meronym_edges.size() == 64);

    CHECK(o.hypernym("family_0", "family_0_genus_1"));
    CHECK(o.hypernym("family_0", "family_0_genus_1_species_2"));  // transitive
    CHECK(o.hypernym("family_0_genus_1", "family_0_genus_1_species_2"));
    CHECK_FALSE(o.hypernym("family_0_genus_1_species_2", "family_0"));  // not reversed
    CHECK_FALSE(o.hypernym("family_1", "family_0_genus_1"));
    CHECK_FALSE(o.hypernym("family_0", "family_0"));  // strict

    // Every species has exactly one part; meronym agrees with the edge list.
    for (const auto& [whole, part] : o.meronym_edges) {
        CHECK(o.meronym(whole, part));
        CHECK_FALSE(o.meronym(part, whole));
    }

    // Ancestors apply to objects carrying the species attribute.
    std::map<std::string, std::string> attrs = {
        {"species", "family_2_genus_3_species_0"}, {"part", "part_0"}};
    CHECK(o.applies("family_2", attrs));
    CHECK(o.applies("family_2_genus_3", attrs));
    CHECK_FALSE(o.applies("family_1", attrs));

    // Deterministic in the seed.
    CHECK(taxonomy_ontology(4, 4, 4, 8, 7).to_json_text() == o.to_json_text());
}

TEST_CASE("generic ontology generation honors the spec") {
    OntologySpec spec;
    spec.concepts_per_kind = {{"hue", 6}, {"form", 4}};
    spec.synonym_rate = 0.5;
    spec.n_parts = 3;
    spec.taxonomy_depth = 2;
    Ontology o = generate_ontology(spec, 99);
    CHECK(o.concepts_of_kind("hue").size() >= 6);
    CHECK(o.concepts_of_kind("form").size() >= 4);
    CHECK(o.concepts_of_kind("part").size() == 3);
    CHECK_FALSE(o.hypernym_edges.empty());
    CHECK_FALSE(o.meronym_edges.empty());
    CHECK(generate_ontology(spec, 99).to_json_text() == o.to_json_text());
    CHECK(generate_ontology(spec, 100).to_json_text() != o.to_json_text());

    OntologySpec bad;
    bad.concepts_per_kind = {{"solo", 5}};
    CHECK_THROWS_AS((void)generate_ontology(bad, 1), std::invalid_argument);
}

TEST_CASE("ontology json round trip") {
    for (const Ontology& o : {clevr_ontology(), taxonomy_ontology(3, 2, 2, 4, 5)}) {
        Ontology back = Ontology::from_json_text(o.to_json_text());
        CHECK(back.concepts == o.concepts);
        CHECK(back.kind_of == o.kind_of);
        CHECK(back.hypernym_edges == o.hypernym_edges);
        CHECK(back.meronym_edges == o.meronym_edges);
        CHECK(back.object_kinds == o.object_kinds);
        for (const auto& a : o.concepts)
            for (const auto& b : o.concepts)
                CHECK(back.synonym(a, b) == o.synonym(a, b));
    }
}

TEST_CASE("feature model: unit prototypes, synonym sharing, separability") {
    Ontology o = clevr_ontology();
    FeatureModel fm(o, 128, 0.1, 123);
    for (const auto& c : o.concepts) {
        const auto& p = fm.prototype(c);
        double n = std::sqrt(std::inner_product(p.begin(), p.end(), p.begin(), 0.0));
        CHECK(n == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(fm.prototype("cube") == fm.prototype("block"));
    CHECK(fm.prototype("cube") != fm.prototype("sphere"));
    CHECK_THROWS_AS((void)fm.prototype("nope"), std::invalid_argument);

    // Determinism in the world seed.
    FeatureModel fm2(o, 128, 0.1, 123);
    CHECK(fm2.prototype("red") == fm.prototype("red"));
    FeatureModel fm3(o, 128, 0.1, 124);
    CHECK(fm3.prototype("red") != fm.prototype("red"));

    // Features must be linearly separable per kind: nearest-prototype
    // classification over noisy samples should be near-perfect.
    SceneGenOpts sg;
    sg.n_scenes = 60;
    auto scenes = generate_scenes(o, fm, sg, 5);
    int total = 0, correct = 0;
    for (const auto& s : scenes)
        for (const auto& obj : s.objects)
            for (const auto& [kind, value] : obj.attributes) {
                double best = -1e300;
                std::string best_c;
                for (const auto& c : o.concepts_of_kind(kind)) {
                    const auto& p = fm.prototype(c);
                    double dot = std::inner_product(p.begin(), p.end(),
                                                    obj.features.begin(), 0.0);
                    if (dot > best) {
                        best = dot;
                        best_c = c;
                    }
                }
                ++total;
                correct += o.synonym(best_c, value) ? 1 : 0;
            }
    CHECK(total > 500);
    CHECK((double)correct / total > 0.98);

    // Hierarchical prototypes: same-genus species are more alike than
    // cross-family ones.
    Ontology tax = taxonomy_ontology(4, 4, 4, 8, 7);
    FeatureModel tfm(tax, 64, 0.1, 123);
    auto cos = [&](const std::string& a, const std::string& b) {
        const auto& pa = tfm.prototype(a);
        const auto& pb = tfm.prototype(b);
        return std::inner_product(pa.begin(), pa.end(), pb.begin(), 0.0);
    };
    double near = cos("family_0_genus_0_species_0", "family_0_genus_0_species_1");
    double far = cos("family_0_genus_0_species_0", "family_3_genus_2_species_1");
    CHECK(near > far + 0.2);
}

TEST_CASE("scene generation: valid attributes, implied parts, determinism") {
    Ontology o = clevr_ontology();
    FeatureModel fm(o, 32, 0.1, 9);
    SceneGenOpts sg;
    sg.n_scenes = 40;
    auto scenes = generate_scenes(o, fm, sg, 77);
    CHECK(scenes.size() == 40);
    for (const auto& s : scenes) {
        CHECK(s.objects.size() >= 3);
        CHECK(s.objects.size() <= 10);
        for (const auto& obj : s.objects) {
            CHECK(obj.attributes.size() == o.object_kinds.size());
            for (const auto& [kind, value] : obj.attributes) {
                CHECK(o.kind_of.at(value) == kind);
            }
            CHECK((int)obj.features.size() == 32);
        }
    }
    auto again = generate_scenes(o, fm, sg, 77);
    for (std::size_t i = 0; i < scenes.size(); ++i)
        for (std::size_t j = 0; j < scenes[i].objects.size(); ++j)
            CHECK(again[i].objects[j].features == scenes[i].objects[j].features);

    Ontology tax = taxonomy_ontology(4, 4, 4, 8, 7);
    FeatureModel tfm(tax, 32, 0.1, 9);
    SceneGenOpts tg;
    tg.n_scenes = 30;
    tg.min_objects = 1;
    tg.max_objects = 2;
    for (const auto& s : generate_scenes(tax, tfm, tg, 3))
        for (const auto& obj : s.objects)
            CHECK(tax.meronym(obj.attributes.at("species"), obj.attributes.at("part")));
}

TEST_CASE("visual questions: balance, correctness, constraints") {
    Ontology o = clevr_ontology();
    FeatureModel fm(o, 32, 0.1, 11);
    SceneGenOpts sg;
    sg.n_scenes = 80;
    auto scenes = generate_scenes(o, fm, sg, 13);

    VisualQuestionOpts vq;
    vq.budget = 400;
    auto items = generate_visual_questions(scenes, o, vq, 17);
    CHECK(items.size() == 400);
    int pos = 0;
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : scenes) by_id[s.id] = &s;
    for (const auto& item : items) {
        pos += item.answer ? 1 : 0;
        CHECK(item.kind == QAItem::Kind::visual);
        CHECK(item.answer == oracle_exist(o, item.program, *by_id.at(item.scene_id)));
    }
    CHECK(std::abs(pos - 200) <= 1);

    // Allowed/required concept constraints hold for every program.
    VisualQuestionOpts cq;
    cq.budget = 150;
    for (const auto& c : o.concepts)
        if (c != "tube" && c != "ball") cq.allowed_concepts.insert(c);
    cq.required_concepts = {"red", "cube"};
    auto constrained = generate_visual_questions(scenes, o, cq, 19);
    for (const auto& item : constrained) {
        Program p = parse_program(item.program);
        bool has_required = false;
        for (const ProgramNode* n = p.root.get(); n; n = n->child.get())
            if (n->kind == NodeKind::filter) {
                CHECK(n->concept_name != "tube");
                CHECK(n->concept_name != "ball");
                has_required = has_required || n->concept_name == "red" ||
                               n->concept_name == "cube";
            }
        CHECK(has_required);
    }

    auto rerun = generate_visual_questions(scenes, o, vq, 17);
    REQUIRE(rerun.size() == items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
        CHECK(rerun[i].program == items[i].program);
        CHECK(rerun[i].scene_id == items[i].scene_id);
    }
}

TEST_CASE("metaconcept questions: balance per metaconcept and label truth") {
    Ontology o = clevr_ontology();
    MetaQuestionOpts mq;
    mq.budget_per_metaconcept = 200;
    mq.metaconcepts = {"same_kind", "synonym"};
    auto items = generate_metaconcept_questions(o, mq, 23);
    CHECK(items.size() == 400);
    std::map<std::string, std::pair<int, int>> counts;
    bool saw_forward = false, saw_reverse = false;
    std::set<std::string> programs;
    for (const auto& item : items) {
        CHECK(item.kind == QAItem::Kind::metaconcept);
        CHECK(item.scene_id.empty());
        Program p = parse_program(item.program);
        const ProgramNode& n = *p.root;
        REQUIRE(n.kind == NodeKind::meta_verify);
        CHECK(item.answer == o.relation(n.metaconcept, n.concept_name, n.concept_b));
        auto& [pc, nc] = counts[n.metaconcept];
        (item.answer ? pc : nc) += 1;
        programs.insert(item.program);
        if (n.concept_name == "cube" && n.concept_b == "block") saw_forward = true;
        if (n.concept_name == "block" && n.concept_b == "cube") saw_reverse = true;
    }
    for (const auto& [m, c] : counts) {
        CHECK(c.first == 100);
        CHECK(c.second == 100);
    }
    // Symmetric metaconcepts get asked in both argument orders.
    CHECK(saw_forward);
    CHECK(saw_reverse);

    MetaQuestionOpts hq;
    hq.budget_per_metaconcept = 80;
    hq.metaconcepts = {"hypernym", "meronym"};
    Ontology tax = taxonomy_ontology(4, 4, 4, 8, 7);
    for (const auto& item : generate_metaconcept_questions(tax, hq, 29)) {
        Program p = parse_program(item.program);
        CHECK(item.answer ==
              tax.relation(p.root->metaconcept, p.root->concept_name, p.root->concept_b));
    }

    MetaQuestionOpts bad;
    bad.budget_per_metaconcept = 10;
    bad.metaconcepts = {"hypernym"};  // clevr world has no taxonomy
    CHECK_THROWS(generate_metaconcept_questions(o, bad, 1));
}

TEST_CASE("referential items: unique target, synonym substitution allowed") {
    Ontology o = clevr_ontology();
    FeatureModel fm(o, 32, 0.1, 31);
    SceneGenOpts sg;
    sg.n_scenes = 60;
    auto scenes = generate_scenes(o, fm, sg, 37);
    auto items = generate_referential_items(scenes, o, 150, 41);
    CHECK(items.size() == 150);
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : scenes) by_id[s.id] = &s;
    for (const auto& item : items) {
        CHECK(item.kind == QAItem::Kind::referential);
        Program p = parse_program(item.program);
        CHECK(p.root->kind == NodeKind::locate);
        std::vector<std::string> names;
        for (const ProgramNode* n = p.root.get(); n; n = n->child.get())
            if (n->kind == NodeKind::filter) names.push_back(n->concept_name);
        REQUIRE(names.size() == 2);
        const Scene& scene = *by_id.at(item.scene_id);
        int hits = 0;
        for (std::size_t i = 0; i < scene.objects.size(); ++i) {
            bool all = oracle_applies(o, names[0], scene.objects[i].attributes) &&
                       oracle_applies(o, names[1], scene.objects[i].attributes);
            if (all) {
                ++hits;
                CHECK((int)i == item.target);
            }
        }
        CHECK(hits == 1);
    }
}

TEST_CASE("experiment splits build, validate, and are deterministic") {
    for (Experiment e : {Experiment::zero_shot_synonym, Experiment::biased_same_kind,
                         Experiment::few_shot_hypernym,
                         Experiment::metaconcept_generalization,
                         Experiment::referential_expression}) {
        CAPTURE(experiment_name(e));
        SplitSpec spec = small_spec(e);
        Dataset ds = build_split(spec, 2024);  // validates internally
        CHECK(ds.partitions.count("train") == 1);
        CHECK(ds.partitions.count("test") == 1);
        CHECK_FALSE(ds.partitions.at("train").empty());
        CHECK_FALSE(ds.partitions.at("test").empty());
        double train_pos = frac_positive(ds, "train");
        CHECK(train_pos > 0.48);
        CHECK(train_pos < 0.52);
        Dataset again = build_split(spec, 2024);
        CHECK(dataset_digest(again) == dataset_digest(ds));
        Dataset other = build_split(spec, 2025);
        CHECK(dataset_digest(other) != dataset_digest(ds));
    }
    CHECK(experiment_from_name("few_shot_hypernym") == Experiment::few_shot_hypernym);
    CHECK_THROWS_AS((void)experiment_from_name("bogus"), std::invalid_argument);
}

TEST_CASE("split protocols keep train and test disjoint") {
    // zero-shot: held-out concepts appear in every test question, never in
    // training visual questions, but do appear in metaconcept questions.
    SplitSpec zs = small_spec(Experiment::zero_shot_synonym);
    Dataset ds = build_split(zs, 5);
    std::set<std::string> train_visual, train_meta, test_visual;
    for (auto i : ds.partitions.at("train")) {
        Program p = parse_program(ds.items[i].program);
        for (const ProgramNode* n = p.root.get(); n; n = n->child.get()) {
            if (n->kind == NodeKind::filter) train_visual.insert(n->concept_name);
            if (n->kind == NodeKind::meta_verify) {
                train_meta.insert(n->concept_name);
                train_meta.insert(n->concept_b);
            }
        }
    }
    for (auto i : ds.partitions.at("test")) {
        Program p = parse_program(ds.items[i].program);
        for (const ProgramNode* n = p.root.get(); n; n = n->child.get())
            if (n->kind == NodeKind::filter) test_visual.insert(n->concept_name);
    }
    std::set<std::string> held;
    for (const auto& c : test_visual)
        if (!train_visual.count(c)) held.insert(c);
    CHECK(held.size() == 3);
    for (const auto& c : held) CHECK(train_meta.count(c) == 1);

    // biased: every training-A scene obeys the color/shape confound and
    // test scenes obey the swapped one.
    SplitSpec bs = small_spec(Experiment::biased_same_kind);
    Dataset bds = build_split(bs, 5);
    const Ontology& o = bds.ontology;
    std::set<std::string> half1 = {"blue", "brown", "gray", "yellow"};
    int n_a = 0, n_b_train = 0, n_b_test = 0;
    for (const auto& s : bds.scenes) {
        bool is_a = s.id.rfind("train_a", 0) == 0;
        bool is_test = s.id.rfind("test_b", 0) == 0;
        for (const auto& obj : s.objects) {
            bool cubeish = o.synonym(obj.attributes.at("shape"), "cube");
            bool in_half1 = half1.count(obj.attributes.at("color")) > 0;
            if (is_a) {
                CHECK(cubeish == in_half1);
                ++n_a;
            } else {
                CHECK(cubeish != in_half1);
                (is_test ? n_b_test : n_b_train) += 1;
            }
        }
    }
    CHECK(n_a > 0);
    CHECK(n_b_train > 0);
    CHECK(n_b_test > 0);

    // few-shot: rare species appear in at most scenes_per_rare training
    // scenes and every test question mentions a rare species.
    SplitSpec fs = small_spec(Experiment::few_shot_hypernym);
    Dataset fds = build_split(fs, 5);
    std::map<std::string, int> train_count;
    for (const auto& s : fds.scenes)
        if (s.id.rfind("train", 0) == 0)
            for (const auto& obj : s.objects) train_count[obj.attributes.at("species")]++;
    std::set<std::string> rare;
    for (const auto& [sp, n] : train_count)
        if (n <= fs.scenes_per_rare) rare.insert(sp);
    CHECK(rare.size() == 16);
    for (auto i : fds.partitions.at("test")) {
        Program p = parse_program(fds.items[i].program);
        bool mentions_rare = false;
        for (const ProgramNode* n = p.root.get(); n; n = n->child.get())
            if (n->kind == NodeKind::filter)
                mentions_rare = mentions_rare || rare.count(n->concept_name);
        CHECK(mentions_rare);
    }

    // ablation drops the metaconcept items but nothing else.
    SplitSpec abl = fs;
    abl.include_metaconcepts = false;
    Dataset ads = build_split(abl, 5);
    int meta_n = 0;
    for (auto i : ads.partitions.at("train"))
        meta_n += ads.items[i].kind == QAItem::Kind::metaconcept ? 1 : 0;
    CHECK(meta_n == 0);
    CHECK(ads.partitions.at("train").size() + fs.n_meta_questions ==
          fds.partitions.at("train").size());
}

TEST_CASE("dataset files round trip and reject malformed input") {
    namespace fs = std::filesystem;
    SplitSpec spec = small_spec(Experiment::referential_expression);
    Dataset ds = build_split(spec, 3);
    fs::path dir = fs::temp_directory_path() / "hce_world_test";
    fs::remove_all(dir);
    save_dataset(ds, dir.string());
    Dataset back = load_dataset(dir.string());
    CHECK(dataset_digest(back) == dataset_digest(ds));

    // Ingested features must round-trip losslessly for training parity.
    for (std::size_t i = 0; i < ds.scenes.size(); ++i)
        for (std::size_t j = 0; j < ds.scenes[i].objects.size(); ++j)
            CHECK(back.scenes[i].objects[j].features == ds.scenes[i].objects[j].features);

    // Unlabeled external features are accepted.
    {
        std::ofstream out(dir / "external.jsonl");
        out << R"({"scene_id": "x0", "objects": [{"attributes": null, "features": [0.25, -1.5]}]})"
            << "\n";
    }
    auto ext = load_scenes_jsonl((dir / "external.jsonl").string());
    REQUIRE(ext.size() == 1);
    CHECK(ext[0].objects[0].attributes.empty());
    CHECK(ext[0].objects[0].features == std::vector<double>{0.25, -1.5});

    // Malformed lines are reported with their line number.
    auto expect_line_error = [&](const std::string& body, const std::string& needle) {
        std::ofstream out(dir / "bad.jsonl");
        out << body;
        out.close();
        try {
            (void)load_scenes_jsonl((dir / "bad.jsonl").string());
            FAIL("expected a parse failure");
        } catch (const std::runtime_error& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };
    expect_line_error(R"({"scene_id": "a", "objects": []})"
                      "\nnot json\n",
                      "line 2");
    expect_line_error(
        R"({"scene_id": "a", "objects": [{"features": [1.0, 2.0]}]})"
        "\n"
        R"({"scene_id": "b", "objects": [{"features": [1.0]}]})"
        "\n",
        "line 2");
    expect_line_error(R"({"scene_id": "a", "objects": [{"features": "nope"}]})"
                      "\n",
                      "line 1");
    fs::remove_all(dir);
}
