#include "world.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "executor.hpp"
#include "program.hpp"
#include "json.hpp"

namespace hce {

namespace {

using nlohmann::json;

// splitmix64: independent substreams from (seed, tag) without correlation.
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t tag) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

template <typename T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
    if (v.empty()) throw std::logic_error("pick from empty vector");
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

}  // namespace

// ---- Ontology ----

std::vector<std::string> Ontology::concepts_of_kind(const std::string& kind) const {
    std::vector<std::string> out;
    for (const auto& c : concepts)
        if (kind_of.at(c) == kind) out.push_back(c);
    return out;
}

std::vector<std::string> Ontology::synonyms_of(const std::string& c) const {
    int cls = synonym_class.at(c);
    std::vector<std::string> out;
    for (const auto& [name, k] : synonym_class)
        if (k == cls) out.push_back(name);
    return out;
}

bool Ontology::same_kind(const std::string& a, const std::string& b) const {
    return kind_of.at(a) == kind_of.at(b);
}

bool Ontology::synonym(const std::string& a, const std::string& b) const {
    return synonym_class.at(a) == synonym_class.at(b);
}

bool Ontology::hypernym(const std::string& ancestor, const std::string& descendant) const {
    // Walk descendant's parent chain at the synonym-class level.
    std::map<int, int> parent;
    for (const auto& [p, c] : hypernym_edges)
        parent[synonym_class.at(c)] = synonym_class.at(p);
    int target = synonym_class.at(ancestor);
    int cur = synonym_class.at(descendant);
    if (cur == target) return false;  // strict
    std::size_t guard = synonym_class.size() + 1;
    while (parent.count(cur) && guard--) {
        cur = parent.at(cur);
        if (cur == target) return true;
    }
    return false;
}

bool Ontology::meronym(const std::string& whole, const std::string& part) const {
    int w = synonym_class.at(whole), p = synonym_class.at(part);
    for (const auto& [a, b] : meronym_edges)
        if (synonym_class.at(a) == w && synonym_class.at(b) == p) return true;
    return false;
}

bool Ontology::relation(const std::string& metaconcept, const std::string& a,
                        const std::string& b) const {
    if (metaconcept == "synonym") return a != b && synonym(a, b);
    if (metaconcept == "same_kind") return a != b && same_kind(a, b);
    if (metaconcept == "hypernym") return hypernym(a, b);
    if (metaconcept == "meronym") return meronym(a, b);
    throw std::invalid_argument("unknown metaconcept: " + metaconcept);
}

bool Ontology::applies(const std::string& c,
                       const std::map<std::string, std::string>& attributes) const {
    for (const auto& [kind, value] : attributes) {
        if (synonym(c, value)) return true;
        if (hypernym(c, value)) return true;
    }
    return false;
}

void Ontology::validate() const {
    if (concepts.size() < 2) throw std::invalid_argument("ontology needs >= 2 concepts");
    if (!std::is_sorted(concepts.begin(), concepts.end()))
        throw std::invalid_argument("ontology concepts must be sorted");
    for (const auto& c : concepts) {
        if (!kind_of.count(c)) throw std::invalid_argument("missing kind for " + c);
        if (!synonym_class.count(c)) throw std::invalid_argument("missing class for " + c);
    }
    if (kind_of.size() != concepts.size() || synonym_class.size() != concepts.size())
        throw std::invalid_argument("kind/class maps must cover exactly the concepts");
    for (const auto& [a, b] : hypernym_edges) {
        if (!has_concept(a) || !has_concept(b))
            throw std::invalid_argument("hypernym edge over unknown concept");
    }
    for (const auto& [a, b] : meronym_edges) {
        if (!has_concept(a) || !has_concept(b))
            throw std::invalid_argument("meronym edge over unknown concept");
    }
    // Synonyms must agree on kind.
    for (const auto& a : concepts)
        for (const auto& b : concepts)
            if (synonym(a, b) && !same_kind(a, b))
                throw std::invalid_argument("synonyms with different kinds: " + a + "/" + b);
    // The taxonomy must be acyclic with at most one parent per class.
    std::map<int, int> parent;
    for (const auto& [p, c] : hypernym_edges) {
        int cc = synonym_class.at(c), pc = synonym_class.at(p);
        if (cc == pc) throw std::invalid_argument("self hypernym edge");
        if (parent.count(cc) && parent.at(cc) != pc)
            throw std::invalid_argument("concept with two taxonomy parents");
        parent[cc] = pc;
    }
    for (auto [start, _] : parent) {
        int cur = start;
        std::size_t guard = parent.size() + 1;
        while (parent.count(cur)) {
            cur = parent.at(cur);
            if (cur == start) throw std::invalid_argument("taxonomy cycle");
            if (guard-- == 0) throw std::invalid_argument("taxonomy cycle");
        }
    }
    for (const auto& k : object_kinds) {
        bool found = false;
        for (const auto& c : concepts) found = found || kind_of.at(c) == k;
        if (!found) throw std::invalid_argument("object kind with no concepts: " + k);
    }
}

namespace {

// Group concepts by synonym class; groups ordered by smallest member.
std::vector<std::vector<std::string>> class_groups(const Ontology& o) {
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& c : o.concepts) by_class[o.synonym_class.at(c)].push_back(c);
    std::vector<std::vector<std::string>> groups;
    for (auto& [_, g] : by_class) {
        std::sort(g.begin(), g.end());
        groups.push_back(g);
    }
    std::sort(groups.begin(), groups.end());
    return groups;
}

}  // namespace

std::string Ontology::to_json_text() const {
    json j;
    j["concepts"] = concepts;
    j["kinds"] = kind_of;
    j["synonym_classes"] = class_groups(*this);
    j["hypernym_edges"] = hypernym_edges;
    j["meronym_edges"] = meronym_edges;
    j["object_kinds"] = object_kinds;
    return j.dump(2);
}

Ontology Ontology::from_json_text(const std::string& text) {
    json j = json::parse(text);
    Ontology o;
    o.concepts = j.at("concepts").get<std::vector<std::string>>();
    o.kind_of = j.at("kinds").get<std::map<std::string, std::string>>();
    int next = 0;
    for (const auto& group : j.at("synonym_classes")) {
        for (const auto& name : group) o.synonym_class[name.get<std::string>()] = next;
        ++next;
    }
    o.hypernym_edges =
        j.at("hypernym_edges").get<std::vector<std::pair<std::string, std::string>>>();
    o.meronym_edges =
        j.at("meronym_edges").get<std::vector<std::pair<std::string, std::string>>>();
    o.object_kinds = j.at("object_kinds").get<std::vector<std::string>>();
    o.validate();
    return o;
}

Ontology clevr_ontology() {
    Ontology o;
    auto add = [&](const std::string& name, const std::string& kind, int cls) {
        o.concepts.push_back(name);
        o.kind_of[name] = kind;
        o.synonym_class[name] = cls;
    };
    int cls = 0;
    for (const char* c : {"blue", "brown", "cyan", "gray", "green", "purple", "red",
                          "yellow"})
        add(c, "color", cls++);
    add("cube", "shape", cls);
    add("block", "shape", cls++);
    add("sphere", "shape", cls);
    add("ball", "shape", cls++);
    add("cylinder", "shape", cls);
    add("tube", "shape", cls++);
    add("metal", "material", cls);
    add("shiny", "material", cls++);
    add("rubber", "material", cls);
    add("matte", "material", cls++);
    add("large", "size", cls);
    add("big", "size", cls++);
    add("small", "size", cls);
    add("tiny", "size", cls++);
    o.object_kinds = {"color", "material", "shape", "size"};
    std::sort(o.concepts.begin(), o.concepts.end());
    o.validate();
    return o;
}

Ontology taxonomy_ontology(int families, int genera_per_family, int species_per_genus,
                           int n_parts, std::uint64_t seed) {
    Ontology o;
    int cls = 0;
    auto add = [&](const std::string& name, const std::string& kind) {
        o.concepts.push_back(name);
        o.kind_of[name] = kind;
        o.synonym_class[name] = cls++;
    };
    std::vector<std::string> species_names;
    for (int f = 0; f < families; ++f) {
        std::string fam = "family_" + std::to_string(f);
        add(fam, "taxon");
        for (int g = 0; g < genera_per_family; ++g) {
            std::string gen = fam + "_genus_" + std::to_string(g);
            add(gen, "taxon");
            o.hypernym_edges.emplace_back(fam, gen);
            for (int s = 0; s < species_per_genus; ++s) {
                std::string sp = gen + "_species_" + std::to_string(s);
                add(sp, "species");
                o.hypernym_edges.emplace_back(gen, sp);
                species_names.push_back(sp);
            }
        }
    }
    std::vector<std::string> part_names;
    for (int p = 0; p < n_parts; ++p) {
        part_names.push_back("part_" + std::to_string(p));
        add(part_names.back(), "part");
    }
    if (n_parts > 0) {
        std::mt19937_64 rng(sub_seed(seed, 11));
        for (const auto& sp : species_names)
            o.meronym_edges.emplace_back(sp, pick(part_names, rng));
    }
    o.object_kinds = n_parts > 0 ? std::vector<std::string>{"part", "species"}
                                 : std::vector<std::string>{"species"};
    std::sort(o.concepts.begin(), o.concepts.end());
    o.validate();
    return o;
}

Ontology generate_ontology(const OntologySpec& spec, std::uint64_t seed) {
    if (spec.concepts_per_kind.size() < 2)
        throw std::invalid_argument("ontology spec needs >= 2 kinds");
    Ontology o;
    std::mt19937_64 rng(sub_seed(seed, 17));
    int cls = 0;
    std::vector<std::string> first_kind_concepts;
    bool first = true;
    for (const auto& [kind, count] : spec.concepts_per_kind) {
        if (count < 2) throw std::invalid_argument("each kind needs >= 2 concepts");
        for (int i = 0; i < count; ++i) {
            std::string name = kind + "_c" + std::to_string(i);
            o.concepts.push_back(name);
            o.kind_of[name] = kind;
            o.synonym_class[name] = cls;
            if (std::uniform_real_distribution<>(0.0, 1.0)(rng) < spec.synonym_rate) {
                std::string syn = name + "_syn";
                o.concepts.push_back(syn);
                o.kind_of[syn] = kind;
                o.synonym_class[syn] = cls;
            }
            ++cls;
            if (first) first_kind_concepts.push_back(name);
        }
        o.object_kinds.push_back(kind);
        first = false;
    }
    // Optional taxonomy: levels of internal nodes over the first kind,
    // grouping pairs at each level.
    std::vector<std::string> level = first_kind_concepts;
    for (int d = 0; d < spec.taxonomy_depth && level.size() >= 2; ++d) {
        std::vector<std::string> next;
        for (std::size_t i = 0; i < level.size(); i += 2) {
            std::string node = "taxon_d" + std::to_string(d) + "_" + std::to_string(i / 2);
            o.concepts.push_back(node);
            o.kind_of[node] = "taxon";
            o.synonym_class[node] = cls++;
            o.hypernym_edges.emplace_back(node, level[i]);
            if (i + 1 < level.size()) o.hypernym_edges.emplace_back(node, level[i + 1]);
            next.push_back(node);
        }
        level = next;
    }
    if (spec.n_parts > 0) {
        std::vector<std::string> parts;
        for (int p = 0; p < spec.n_parts; ++p) {
            parts.push_back("part_" + std::to_string(p));
            o.concepts.push_back(parts.back());
            o.kind_of[parts.back()] = "part";
            o.synonym_class[parts.back()] = cls++;
        }
        for (const auto& leaf : first_kind_concepts)
            o.meronym_edges.emplace_back(leaf, pick(parts, rng));
        o.object_kinds.push_back("part");
    }
    std::sort(o.concepts.begin(), o.concepts.end());
    o.validate();
    return o;
}

// ---- FeatureModel ----

FeatureModel::FeatureModel(const Ontology& onto, int feat_dim, double noise_sigma,
                           std::uint64_t world_seed, double interaction_weight,
                           std::map<std::string, double> kind_scale,
                           double ancestor_weight)
    : feat_dim_(feat_dim),
      noise_sigma_(noise_sigma),
      interaction_weight_(interaction_weight),
      class_of_(onto.synonym_class) {
    for (const auto& c : onto.concepts) {
        auto it = kind_scale.find(onto.kind_of.at(c));
        scale_of_[c] = it == kind_scale.end() ? 1.0 : it->second;
    }
    if (feat_dim < 2) throw std::invalid_argument("feat_dim must be >= 2");
    if (noise_sigma < 0.0) throw std::invalid_argument("noise_sigma must be >= 0");
    auto groups = class_groups(onto);
    // One raw direction per class, drawn in a canonical order.
    std::map<int, std::vector<double>> raw;
    std::mt19937_64 rng(sub_seed(world_seed, 23));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (const auto& g : groups) {
        std::vector<double> dir(feat_dim);
        for (double& x : dir) x = gauss(rng);
        raw[onto.synonym_class.at(g.front())] = dir;
    }
    // A class prototype blends its own direction with its taxonomy
    // ancestors', so descendants of one taxon share structure.
    std::map<int, int> parent;
    for (const auto& [p, c] : onto.hypernym_edges)
        parent[onto.synonym_class.at(c)] = onto.synonym_class.at(p);
    for (const auto& [cls, dir] : raw) {
        std::vector<double> proto = dir;
        int cur = cls;
        std::size_t guard = raw.size() + 1;
        while (parent.count(cur) && guard--) {
            cur = parent.at(cur);
            const auto& a = raw.at(cur);
            for (int i = 0; i < feat_dim; ++i) proto[i] += ancestor_weight * a[i];
        }
        double n = std::sqrt(std::inner_product(proto.begin(), proto.end(),
                                                proto.begin(), 0.0));
        for (double& x : proto) x /= n;
        prototypes_[cls] = proto;
    }
    if (interaction_weight_ > 0.0) {
        // One unit direction per cross-kind pair of attribute classes,
        // drawn in canonical group order.
        std::mt19937_64 irng(sub_seed(world_seed, 29));
        for (std::size_t i = 0; i < groups.size(); ++i)
            for (std::size_t j = i + 1; j < groups.size(); ++j) {
                if (onto.kind_of.at(groups[i].front()) ==
                    onto.kind_of.at(groups[j].front()))
                    continue;
                std::vector<double> dir(feat_dim);
                for (double& x : dir) x = gauss(irng);
                double n = std::sqrt(std::inner_product(dir.begin(), dir.end(),
                                                        dir.begin(), 0.0));
                for (double& x : dir) x /= n;
                int a = onto.synonym_class.at(groups[i].front());
                int b = onto.synonym_class.at(groups[j].front());
                interactions_[{std::min(a, b), std::max(a, b)}] = std::move(dir);
            }
    }
}

const std::vector<double>& FeatureModel::prototype(const std::string& concept_name) const {
    auto it = class_of_.find(concept_name);
    if (it == class_of_.end())
        throw std::invalid_argument("unknown concept: " + concept_name);
    return prototypes_.at(it->second);
}

std::vector<double> FeatureModel::synthesize(
    const std::map<std::string, std::string>& attributes, std::mt19937_64& noise_rng,
    double noise_sigma_override) const {
    std::vector<double> feat(feat_dim_, 0.0);
    for (const auto& [kind, value] : attributes) {
        const auto& p = prototype(value);
        double s = scale_of_.at(value);
        for (int i = 0; i < feat_dim_; ++i) feat[i] += s * p[i];
    }
    if (interaction_weight_ > 0.0) {
        std::vector<int> classes;
        for (const auto& [kind, value] : attributes)
            classes.push_back(class_of_.at(value));
        for (std::size_t i = 0; i < classes.size(); ++i)
            for (std::size_t j = i + 1; j < classes.size(); ++j) {
                auto it = interactions_.find({std::min(classes[i], classes[j]),
                                              std::max(classes[i], classes[j])});
                if (it == interactions_.end()) continue;
                for (int d = 0; d < feat_dim_; ++d)
                    feat[d] += interaction_weight_ * it->second[d];
            }
    }
    double sigma = noise_sigma_override >= 0.0 ? noise_sigma_override : noise_sigma_;
    std::normal_distribution<double> gauss(0.0, sigma);
    for (double& x : feat) x += gauss(noise_rng);
    return feat;
}

// ---- scenes ----

std::vector<Scene> generate_scenes(const Ontology& onto, const FeatureModel& fm,
                                   const SceneGenOpts& opts, std::uint64_t seed) {
    if (opts.min_objects < 1 || opts.max_objects < opts.min_objects)
        throw std::invalid_argument("bad object-count range");
    // Attribute values range over one canonical name per synonym class.
    std::map<std::string, std::vector<std::string>> reps_by_kind;
    for (const auto& kind : onto.object_kinds) {
        std::set<int> seen;
        for (const auto& c : onto.concepts_of_kind(kind)) {
            int cls = onto.synonym_class.at(c);
            if (seen.insert(cls).second) reps_by_kind[kind].push_back(c);
        }
    }
    std::mt19937_64 rng(sub_seed(seed, 31));
    std::vector<Scene> scenes;
    scenes.reserve(opts.n_scenes);
    for (int s = 0; s < opts.n_scenes; ++s) {
        Scene scene;
        scene.id = opts.id_prefix + "_" + std::to_string(s);
        int n = std::uniform_int_distribution<int>(opts.min_objects, opts.max_objects)(rng);
        for (int i = 0; i < n; ++i) {
            SceneObject obj;
            for (const auto& kind : onto.object_kinds)
                obj.attributes[kind] = pick(reps_by_kind.at(kind), rng);
            if (opts.constrain) opts.constrain(obj.attributes, rng);
            // Parts are implied by the carrying concept when a meronym
            // edge exists (the whole determines its part).
            for (const auto& kind : onto.object_kinds) {
                for (const auto& [whole, part] : onto.meronym_edges) {
                    if (onto.kind_of.at(part) == kind &&
                        onto.applies(whole, obj.attributes)) {
                        obj.attributes[kind] = part;
                        break;
                    }
                }
            }
            obj.features = fm.synthesize(obj.attributes, rng,
                                         opts.noise_scale == 1.0
                                             ? -1.0
                                             : opts.noise_scale * fm.noise_sigma());
            scene.objects.push_back(std::move(obj));
        }
        scenes.push_back(std::move(scene));
    }
    return scenes;
}

// ---- symbolic evaluation ----

namespace {

class SymbolicScorer : public ConceptScorer {
  public:
    SymbolicScorer(const Ontology& onto, const Scene* scene)
        : onto_(onto), scene_(scene) {}
    std::size_t num_objects() const override {
        return scene_ ? scene_->objects.size() : 0;
    }
    double object_concept_score(std::size_t obj, const std::string& cname) const override {
        return onto_.applies(cname, scene_->objects[obj].attributes) ? 1.0 : 0.0;
    }
    double relation_score(const std::string& a, const std::string& b,
                          const std::string& m) const override {
        return onto_.relation(m, a, b) ? 1.0 : 0.0;
    }

  private:
    const Ontology& onto_;
    const Scene* scene_;
};

}  // namespace

bool symbolic_answer(const Ontology& onto, const std::string& program_text,
                     const Scene* scene) {
    Program p = parse_program(program_text);
    if (!p.is_boolean()) throw std::invalid_argument("not a boolean program");
    SymbolicScorer scorer(onto, scene);
    return execute(p, scorer).score > 0.5;
}

// ---- question generation ----

namespace {

std::string exist1(const std::string& c) { return "Exist(Filter(Scene(), " + c + "))"; }
std::string exist2(const std::string& c1, const std::string& c2) {
    return "Exist(Filter(Filter(Scene(), " + c1 + "), " + c2 + "))";
}

}  // namespace

std::vector<QAItem> generate_visual_questions(const std::vector<Scene>& scenes,
                                              const Ontology& onto,
                                              const VisualQuestionOpts& opts,
                                              std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("no scenes");
    std::vector<std::string> kinds(onto.object_kinds);
    if (!opts.allowed_kinds.empty()) {
        kinds.clear();
        for (const auto& k : onto.object_kinds)
            if (opts.allowed_kinds.count(k)) kinds.push_back(k);
    }
    std::map<std::string, std::vector<std::string>> pool;  // kind -> usable names
    for (const auto& k : kinds) {
        for (const auto& c : onto.concepts_of_kind(k))
            if (opts.allowed_concepts.empty() || opts.allowed_concepts.count(c))
                pool[k].push_back(c);
        if (pool[k].empty()) pool.erase(k);
    }
    std::vector<std::string> usable_kinds;
    for (const auto& [k, _] : pool) usable_kinds.push_back(k);
    if (usable_kinds.empty()) throw std::invalid_argument("no usable concepts");
    // Kind-restricted required pool, for questions that must mention a
    // held-out concept.
    std::map<std::string, std::vector<std::string>> required_pool;
    for (const auto& [k, names] : pool)
        for (const auto& c : names)
            if (opts.required_concepts.count(c)) required_pool[k].push_back(c);
    if (!opts.required_concepts.empty() && required_pool.empty())
        throw std::invalid_argument("required concepts unavailable under constraints");

    std::mt19937_64 rng(sub_seed(seed, 41));
    std::vector<QAItem> items;
    int pos_quota = (opts.budget + 1) / 2;
    int neg_quota = opts.budget - pos_quota;
    long attempts = 0, max_attempts = 2000L * std::max(opts.budget, 1);
    while ((pos_quota > 0 || neg_quota > 0) && attempts++ < max_attempts) {
        const Scene& scene = pick(scenes, rng);
        bool two = std::uniform_real_distribution<>(0.0, 1.0)(rng) <
                   opts.two_concept_fraction;
        std::string c1, c2, program;
        if (!opts.required_concepts.empty()) {
            std::vector<std::string> rk;
            for (const auto& [k, _] : required_pool) rk.push_back(k);
            std::string k1 = pick(rk, rng);
            c1 = pick(required_pool.at(k1), rng);
            if (two && usable_kinds.size() >= 2) {
                std::string k2 = k1;
                while (k2 == k1) k2 = pick(usable_kinds, rng);
                c2 = pick(pool.at(k2), rng);
            }
        } else {
            std::string k1 = pick(usable_kinds, rng);
            c1 = pick(pool.at(k1), rng);
            if (two && usable_kinds.size() >= 2) {
                std::string k2 = k1;
                while (k2 == k1) k2 = pick(usable_kinds, rng);
                c2 = pick(pool.at(k2), rng);
            }
        }
        program = c2.empty() ? exist1(c1) : exist2(c1, c2);
        bool answer = symbolic_answer(onto, program, &scene);
        int& quota = answer ? pos_quota : neg_quota;
        if (quota <= 0) continue;
        --quota;
        QAItem item;
        item.kind = QAItem::Kind::visual;
        item.program = program;
        item.answer = answer;
        item.scene_id = scene.id;
        items.push_back(std::move(item));
    }
    if (pos_quota > 0 || neg_quota > 0)
        throw std::runtime_error("could not balance visual questions");
    std::shuffle(items.begin(), items.end(), rng);
    return items;
}

std::vector<QAItem> generate_metaconcept_questions(const Ontology& onto,
                                                   const MetaQuestionOpts& opts,
                                                   std::uint64_t seed) {
    std::mt19937_64 rng(sub_seed(seed, 43));
    std::vector<QAItem> items;
    std::vector<std::string> usable;
    for (const auto& c : onto.concepts)
        if (!opts.concept_allowed || opts.concept_allowed(c)) usable.push_back(c);
    for (const auto& m : std::set<std::string>(opts.metaconcepts.begin(),
                                               opts.metaconcepts.end())) {
        std::vector<std::pair<std::string, std::string>> pos, neg;
        for (const auto& a : usable)
            for (const auto& b : usable) {
                if (a == b) continue;
                (onto.relation(m, a, b) ? pos : neg).emplace_back(a, b);
            }
        if (pos.empty() || neg.empty())
            throw std::runtime_error("metaconcept " + m +
                                     " has no positive or no negative pairs");
        int pos_quota = (opts.budget_per_metaconcept + 1) / 2;
        int neg_quota = opts.budget_per_metaconcept - pos_quota;
        for (int i = 0; i < pos_quota; ++i) {
            const auto& [a, b] = pick(pos, rng);
            items.push_back({QAItem::Kind::metaconcept,
                             "MetaVerify(" + a + ", " + b + ", " + m + ")", true, "", -1});
        }
        for (int i = 0; i < neg_quota; ++i) {
            const auto& [a, b] = pick(neg, rng);
            items.push_back({QAItem::Kind::metaconcept,
                             "MetaVerify(" + a + ", " + b + ", " + m + ")", false, "", -1});
        }
    }
    std::shuffle(items.begin(), items.end(), rng);
    return items;
}

std::vector<QAItem> generate_referential_items(const std::vector<Scene>& scenes,
                                               const Ontology& onto, int budget,
                                               std::uint64_t seed) {
    if (scenes.empty()) throw std::invalid_argument("no scenes");
    std::mt19937_64 rng(sub_seed(seed, 47));
    std::vector<QAItem> items;
    long attempts = 0, max_attempts = 2000L * std::max(budget, 1);
    while ((int)items.size() < budget && attempts++ < max_attempts) {
        const Scene& scene = pick(scenes, rng);
        std::size_t oi =
            std::uniform_int_distribution<std::size_t>(0, scene.objects.size() - 1)(rng);
        const auto& attrs = scene.objects[oi].attributes;
        if (attrs.size() < 2) continue;
        std::vector<std::string> kinds;
        for (const auto& [k, _] : attrs) kinds.push_back(k);
        std::shuffle(kinds.begin(), kinds.end(), rng);
        // Describe with synonym-substituted names of two of its attributes.
        std::string c1 = pick(onto.synonyms_of(attrs.at(kinds[0])), rng);
        std::string c2 = pick(onto.synonyms_of(attrs.at(kinds[1])), rng);
        int hits = 0;
        for (const auto& obj : scene.objects)
            if (onto.applies(c1, obj.attributes) && onto.applies(c2, obj.attributes))
                ++hits;
        if (hits != 1) continue;
        QAItem item;
        item.kind = QAItem::Kind::referential;
        item.program = "Locate(Filter(Filter(Scene(), " + c1 + "), " + c2 + "))";
        item.answer = true;
        item.scene_id = scene.id;
        item.target = (int)oi;
        items.push_back(std::move(item));
    }
    if ((int)items.size() < budget)
        throw std::runtime_error("could not generate enough referential items");
    return items;
}

// ---- Dataset ----

const Scene* Dataset::scene_by_id(const std::string& id) const {
    for (const auto& s : scenes)
        if (s.id == id) return &s;
    return nullptr;
}

void Dataset::validate() const {
    ontology.validate();
    std::set<std::string> ids;
    for (const auto& s : scenes)
        if (!ids.insert(s.id).second)
            throw std::invalid_argument("duplicate scene id: " + s.id);
    for (const auto& item : items) {
        Program p = parse_program(item.program);
        if (item.kind == QAItem::Kind::referential) {
            if (p.is_boolean()) throw std::invalid_argument("referential item not Locate");
            if (item.target < 0) throw std::invalid_argument("referential item lacks target");
        } else if (!p.is_boolean()) {
            throw std::invalid_argument("non-boolean program on boolean item");
        }
        if (item.kind == QAItem::Kind::metaconcept) {
            if (!item.scene_id.empty())
                throw std::invalid_argument("metaconcept item with scene");
        } else if (!ids.count(item.scene_id)) {
            throw std::invalid_argument("unknown scene id: " + item.scene_id);
        }
    }
    for (const auto& [name, idx] : partitions)
        for (auto i : idx)
            if (i >= items.size())
                throw std::invalid_argument("partition " + name + " index out of range");
}

// ---- splits ----

Experiment experiment_from_name(const std::string& name) {
    if (name == "zero_shot_synonym") return Experiment::zero_shot_synonym;
    if (name == "biased_same_kind") return Experiment::biased_same_kind;
    if (name == "few_shot_hypernym") return Experiment::few_shot_hypernym;
    if (name == "metaconcept_generalization") return Experiment::metaconcept_generalization;
    if (name == "referential_expression") return Experiment::referential_expression;
    throw std::invalid_argument("unknown experiment: " + name);
}

std::string experiment_name(Experiment e) {
    switch (e) {
        case Experiment::zero_shot_synonym: return "zero_shot_synonym";
        case Experiment::biased_same_kind: return "biased_same_kind";
        case Experiment::few_shot_hypernym: return "few_shot_hypernym";
        case Experiment::metaconcept_generalization: return "metaconcept_generalization";
        case Experiment::referential_expression: return "referential_expression";
    }
    throw std::invalid_argument("bad experiment enum");
}

SplitSpec default_split_spec(Experiment e) {
    SplitSpec s;
    s.experiment = e;
    switch (e) {
        case Experiment::zero_shot_synonym:
            s.n_train_scenes = 4000;
            s.n_test_scenes = 1000;
            s.n_visual_questions = 6000;
            s.n_meta_questions = 600;
            break;
        case Experiment::biased_same_kind:
            s.n_train_scenes = 2000;
            s.n_test_scenes = 800;
            s.n_visual_questions = 6000;
            s.n_meta_questions = 400;
            // Entangled features make B-pool combinations genuinely novel.
            s.interaction_weight = 1.2;
            s.kind_scale = {{"color", 0.5}};
            break;
        case Experiment::few_shot_hypernym:
            s.taxonomy_world = true;
            s.n_test_scenes = 400;
            s.n_visual_questions = 6000;
            s.n_meta_questions = 1200;
            // Five scenes per rare concept must be genuinely insufficient on
            // their own, so the rare prototypes carry moderate feature noise.
            s.noise_sigma = 0.15;
            break;
        case Experiment::metaconcept_generalization:
            // Generalizing relations to held-out pairs needs embeddings
            // whose pairwise statistics are anchored by plentiful visual
            // evidence, hence the larger scene and question budgets.
            s.n_train_scenes = 4000;
            s.n_visual_questions = 12000;
            s.n_meta_questions = 600;
            break;
        case Experiment::referential_expression:
            s.n_train_scenes = 2500;
            s.n_test_scenes = 800;
            // At the small question budgets the synonym/same_kind items
            // carry a meaningful share of the supervision, so give them
            // a generous pool to sample from.
            s.n_meta_questions = 600;
            break;
    }
    return s;
}

namespace {

void add_partition(Dataset& ds, const std::string& name, std::vector<QAItem> items) {
    auto& idx = ds.partitions[name];
    for (auto& it : items) {
        idx.push_back(ds.items.size());
        ds.items.push_back(std::move(it));
    }
}

std::set<std::string> all_but(const Ontology& o, const std::set<std::string>& excluded) {
    std::set<std::string> out;
    for (const auto& c : o.concepts)
        if (!excluded.count(c)) out.insert(c);
    return out;
}

Dataset build_zero_shot(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    ds.ontology = clevr_ontology();
    FeatureModel fm(ds.ontology, spec.feat_dim, spec.noise_sigma, seed,
                    spec.interaction_weight, spec.kind_scale, spec.ancestor_weight);
    // Hold out 3 of the 7 synonym names: never in training questions.
    std::vector<std::string> syn_names = {"ball", "big", "block", "matte",
                                          "shiny", "tiny", "tube"};
    std::mt19937_64 rng(sub_seed(seed, 53));
    std::shuffle(syn_names.begin(), syn_names.end(), rng);
    std::set<std::string> held(syn_names.begin(), syn_names.begin() + 3);

    SceneGenOpts sg;
    sg.n_scenes = spec.n_train_scenes;
    sg.id_prefix = "train";
    auto train_scenes = generate_scenes(ds.ontology, fm, sg, sub_seed(seed, 1));
    sg.n_scenes = spec.n_test_scenes;
    sg.id_prefix = "test";
    auto test_scenes = generate_scenes(ds.ontology, fm, sg, sub_seed(seed, 2));

    VisualQuestionOpts vq;
    vq.budget = spec.n_visual_questions;
    vq.allowed_concepts = all_but(ds.ontology, held);
    auto train_items =
        generate_visual_questions(train_scenes, ds.ontology, vq, sub_seed(seed, 3));
    if (spec.include_metaconcepts) {
        MetaQuestionOpts mq;
        mq.budget_per_metaconcept = spec.n_meta_questions;
        mq.metaconcepts = {"synonym"};
        auto meta = generate_metaconcept_questions(ds.ontology, mq, sub_seed(seed, 4));
        train_items.insert(train_items.end(), meta.begin(), meta.end());
    }
    VisualQuestionOpts tq;
    tq.budget = spec.n_visual_questions / 5;
    tq.required_concepts = held;
    // Single-concept probes: a two-concept question would leak signal from
    // the non-held concept.
    tq.two_concept_fraction = 0.0;
    auto test_items =
        generate_visual_questions(test_scenes, ds.ontology, tq, sub_seed(seed, 5));

    ds.scenes = std::move(train_scenes);
    ds.scenes.insert(ds.scenes.end(), test_scenes.begin(), test_scenes.end());
    add_partition(ds, "train", std::move(train_items));
    add_partition(ds, "test", std::move(test_items));
    return ds;
}

// Split-A confound: cube-class shapes take one half of the palette and
// the other shapes the complementary half; split B swaps the halves.
void bias_colors(const Ontology& onto, std::map<std::string, std::string>& attrs,
                 std::mt19937_64& rng, bool split_b) {
    static const std::vector<std::string> half1 = {"blue", "brown", "gray", "yellow"};
    static const std::vector<std::string> half2 = {"cyan", "green", "purple", "red"};
    bool cubeish = onto.synonym(attrs.at("shape"), "cube");
    const auto& palette = (cubeish != split_b) ? half1 : half2;
    attrs["color"] = pick(palette, rng);
}

Dataset build_biased(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    ds.ontology = clevr_ontology();
    FeatureModel fm(ds.ontology, spec.feat_dim, spec.noise_sigma, seed,
                    spec.interaction_weight, spec.kind_scale, spec.ancestor_weight);
    const Ontology& onto = ds.ontology;

    SceneGenOpts sa;
    sa.n_scenes = spec.n_train_scenes;
    sa.id_prefix = "train_a";
    sa.constrain = [&onto](auto& attrs, auto& rng) { bias_colors(onto, attrs, rng, false); };
    auto train_scenes = generate_scenes(onto, fm, sa, sub_seed(seed, 1));
    SceneGenOpts sb;
    sb.n_scenes = spec.k_split_b;
    sb.id_prefix = "train_b";
    sb.constrain = [&onto](auto& attrs, auto& rng) { bias_colors(onto, attrs, rng, true); };
    auto train_b = generate_scenes(onto, fm, sb, sub_seed(seed, 2));
    train_scenes.insert(train_scenes.end(), train_b.begin(), train_b.end());
    SceneGenOpts st;
    st.n_scenes = spec.n_test_scenes;
    st.id_prefix = "test_b";
    st.constrain = sb.constrain;
    auto test_scenes = generate_scenes(onto, fm, st, sub_seed(seed, 3));

    VisualQuestionOpts vq;
    vq.budget = spec.n_visual_questions;
    vq.allowed_kinds = {"color", "shape"};
    vq.two_concept_fraction = 0.7;
    auto train_items = generate_visual_questions(train_scenes, onto, vq, sub_seed(seed, 4));
    if (spec.include_metaconcepts) {
        MetaQuestionOpts mq;
        mq.budget_per_metaconcept = spec.n_meta_questions;
        mq.metaconcepts = {"same_kind"};
        auto meta = generate_metaconcept_questions(onto, mq, sub_seed(seed, 5));
        train_items.insert(train_items.end(), meta.begin(), meta.end());
    }
    VisualQuestionOpts tq;
    tq.budget = spec.n_visual_questions / 6;
    tq.allowed_kinds = {"color", "shape"};
    tq.two_concept_fraction = 1.0;
    auto test_items = generate_visual_questions(test_scenes, onto, tq, sub_seed(seed, 6));

    ds.scenes = std::move(train_scenes);
    ds.scenes.insert(ds.scenes.end(), test_scenes.begin(), test_scenes.end());
    add_partition(ds, "train", std::move(train_items));
    add_partition(ds, "test", std::move(test_items));
    return ds;
}

Dataset build_few_shot(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    ds.ontology = taxonomy_ontology(spec.tax_families, spec.tax_genera, spec.tax_species, 8, seed);
    FeatureModel fm(ds.ontology, spec.feat_dim, spec.noise_sigma, seed,
                    spec.interaction_weight, spec.kind_scale, spec.ancestor_weight);
    const Ontology& onto = ds.ontology;

    auto species = onto.concepts_of_kind("species");
    std::mt19937_64 rng(sub_seed(seed, 59));
    std::shuffle(species.begin(), species.end(), rng);
    std::set<std::string> rare(species.begin(), species.begin() + species.size() / 4);

    // Single-object scenes with a forced species give a clean per-concept
    // image budget: few for rare species, many for common ones.
    auto scenes_for = [&](const std::string& sp, int count, const std::string& prefix,
                          std::uint64_t s, double noise_scale) {
        SceneGenOpts sg;
        sg.n_scenes = count;
        sg.min_objects = 1;
        sg.max_objects = 1;
        sg.id_prefix = prefix + "_" + sp;
        sg.noise_scale = noise_scale;
        sg.constrain = [sp](auto& attrs, auto&) { attrs["species"] = sp; };
        return generate_scenes(onto, fm, sg, s);
    };
    std::vector<Scene> train_scenes, test_scenes;
    int tag = 100;
    for (const auto& sp : species) {
        int count = rare.count(sp) ? spec.scenes_per_rare : spec.scenes_per_common;
        auto batch = scenes_for(sp, count, "train", sub_seed(seed, tag++), 1.0);
        train_scenes.insert(train_scenes.end(), batch.begin(), batch.end());
    }
    int per_rare_test = std::max(1, spec.n_test_scenes / (int)rare.size());
    for (const auto& sp : rare) {
        auto batch = scenes_for(sp, per_rare_test, "test", sub_seed(seed, tag++),
                                spec.test_noise_scale);
        test_scenes.insert(test_scenes.end(), batch.begin(), batch.end());
    }

    VisualQuestionOpts vq;
    vq.budget = spec.n_visual_questions;
    auto train_items = generate_visual_questions(train_scenes, onto, vq, sub_seed(seed, 4));
    if (spec.include_metaconcepts) {
        MetaQuestionOpts mq;
        mq.budget_per_metaconcept = spec.n_meta_questions;
        mq.metaconcepts = {"hypernym"};
        auto meta = generate_metaconcept_questions(onto, mq, sub_seed(seed, 5));
        train_items.insert(train_items.end(), meta.begin(), meta.end());
    }
    VisualQuestionOpts tq;
    tq.budget = spec.n_visual_questions / 6;
    tq.allowed_kinds = {"species"};
    tq.required_concepts = rare;
    tq.two_concept_fraction = 0.0;
    auto test_items = generate_visual_questions(test_scenes, onto, tq, sub_seed(seed, 6));

    ds.scenes = std::move(train_scenes);
    ds.scenes.insert(ds.scenes.end(), test_scenes.begin(), test_scenes.end());
    add_partition(ds, "train", std::move(train_items));
    add_partition(ds, "test", std::move(test_items));
    return ds;
}

Dataset build_meta_generalization(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    ds.ontology = spec.taxonomy_world ? taxonomy_ontology(spec.tax_families, spec.tax_genera, spec.tax_species, 8, seed)
                                      : clevr_ontology();
    FeatureModel fm(ds.ontology, spec.feat_dim, spec.noise_sigma, seed,
                    spec.interaction_weight, spec.kind_scale, spec.ancestor_weight);
    const Ontology& onto = ds.ontology;
    std::set<std::string> metas = spec.taxonomy_world
                                      ? std::set<std::string>{"hypernym", "meronym"}
                                      : std::set<std::string>{"same_kind", "synonym"};

    // Split whole synonym classes so held-out synonym pairs exist; retry
    // the shuffle until every metaconcept has both labels on both sides.
    auto groups = class_groups(onto);
    std::mt19937_64 rng(sub_seed(seed, 61));
    std::set<std::string> c_train, c_test;
    // A pool with only a handful of positive pairs makes the question
    // sampler lean on the same few pairs, so demand a minimum variety.
    auto pools_ok = [&](const std::set<std::string>& pool) {
        for (const auto& m : metas) {
            int pos = 0, neg = 0;
            for (const auto& a : pool)
                for (const auto& b : pool) {
                    if (a == b) continue;
                    (onto.relation(m, a, b) ? pos : neg) += 1;
                }
            if (pos < 6 || neg < 6) return false;
        }
        return true;
    };
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::shuffle(groups.begin(), groups.end(), rng);
        std::size_t n_train_groups = (groups.size() * 3 + 4) / 5;
        c_train.clear();
        c_test.clear();
        for (std::size_t i = 0; i < groups.size(); ++i)
            for (const auto& c : groups[i])
                (i < n_train_groups ? c_train : c_test).insert(c);
        if (pools_ok(c_train) && pools_ok(c_test)) break;
        if (attempt == 999)
            throw std::runtime_error("could not partition concepts for metaconcepts");
    }

    SceneGenOpts sg;
    sg.n_scenes = spec.n_train_scenes;
    sg.id_prefix = "train";
    if (spec.taxonomy_world) {
        sg.min_objects = 1;
        sg.max_objects = 2;
    }
    auto train_scenes = generate_scenes(onto, fm, sg, sub_seed(seed, 1));

    VisualQuestionOpts vq;
    vq.budget = spec.n_visual_questions;
    auto train_items = generate_visual_questions(train_scenes, onto, vq, sub_seed(seed, 3));
    MetaQuestionOpts mq;
    mq.budget_per_metaconcept = spec.n_meta_questions;
    mq.metaconcepts = metas;
    mq.concept_allowed = [c_train](const std::string& c) { return c_train.count(c) > 0; };
    auto meta_train = generate_metaconcept_questions(onto, mq, sub_seed(seed, 4));
    train_items.insert(train_items.end(), meta_train.begin(), meta_train.end());
    MetaQuestionOpts tq;
    tq.budget_per_metaconcept = spec.n_meta_questions / 2;
    tq.metaconcepts = metas;
    tq.concept_allowed = [c_test](const std::string& c) { return c_test.count(c) > 0; };
    auto test_items = generate_metaconcept_questions(onto, tq, sub_seed(seed, 5));

    ds.scenes = std::move(train_scenes);
    add_partition(ds, "train", std::move(train_items));
    add_partition(ds, "test", std::move(test_items));
    return ds;
}

Dataset build_referential(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    ds.ontology = clevr_ontology();
    FeatureModel fm(ds.ontology, spec.feat_dim, spec.noise_sigma, seed,
                    spec.interaction_weight, spec.kind_scale, spec.ancestor_weight);
    const Ontology& onto = ds.ontology;

    SceneGenOpts sg;
    sg.n_scenes = spec.n_train_scenes;
    sg.id_prefix = "train";
    auto train_scenes = generate_scenes(onto, fm, sg, sub_seed(seed, 1));
    sg.n_scenes = spec.n_test_scenes;
    sg.id_prefix = "test";
    auto test_scenes = generate_scenes(onto, fm, sg, sub_seed(seed, 2));

    VisualQuestionOpts vq;
    vq.budget = spec.n_ref_train_questions;
    auto train_items = generate_visual_questions(train_scenes, onto, vq, sub_seed(seed, 3));
    if (spec.include_metaconcepts) {
        MetaQuestionOpts mq;
        mq.budget_per_metaconcept = spec.n_meta_questions;
        mq.metaconcepts = {"same_kind", "synonym"};
        auto meta = generate_metaconcept_questions(onto, mq, sub_seed(seed, 4));
        train_items.insert(train_items.end(), meta.begin(), meta.end());
    }
    auto test_items = generate_referential_items(test_scenes, onto,
                                                 spec.n_ref_test_questions,
                                                 sub_seed(seed, 5));

    ds.scenes = std::move(train_scenes);
    ds.scenes.insert(ds.scenes.end(), test_scenes.begin(), test_scenes.end());
    add_partition(ds, "train", std::move(train_items));
    add_partition(ds, "test", std::move(test_items));
    return ds;
}

std::set<std::string> program_concepts(const std::string& text) {
    Program p = parse_program(text);
    std::set<std::string> out;
    for (const ProgramNode* n = p.root.get(); n;) {
        if (n->kind == NodeKind::filter) out.insert(n->concept_name);
        if (n->kind == NodeKind::meta_verify) {
            out.insert(n->concept_name);
            out.insert(n->concept_b);
        }
        n = n->child.get();
    }
    return out;
}

}  // namespace

Dataset build_split(const SplitSpec& spec, std::uint64_t seed) {
    Dataset ds;
    switch (spec.experiment) {
        case Experiment::zero_shot_synonym: ds = build_zero_shot(spec, seed); break;
        case Experiment::biased_same_kind: ds = build_biased(spec, seed); break;
        case Experiment::few_shot_hypernym: ds = build_few_shot(spec, seed); break;
        case Experiment::metaconcept_generalization:
            ds = build_meta_generalization(spec, seed);
            break;
        case Experiment::referential_expression: ds = build_referential(spec, seed); break;
    }
    ds.validate();
    validate_split(spec, ds);
    return ds;
}

void validate_split(const SplitSpec& spec, const Dataset& ds) {
    ds.validate();
    if (!ds.partitions.count("train") || !ds.partitions.count("test"))
        throw std::invalid_argument("split needs train and test partitions");
    // Partitions must not share items.
    std::set<std::size_t> seen;
    for (const auto& [_, idx] : ds.partitions)
        for (auto i : idx)
            if (!seen.insert(i).second)
                throw std::invalid_argument("item in more than one partition");
    // Recheck every boolean answer and every referential target against
    // the symbolic ground truth.
    std::map<std::string, const Scene*> by_id;
    for (const auto& s : ds.scenes) by_id[s.id] = &s;
    for (const auto& item : ds.items) {
        const Scene* scene = item.scene_id.empty() ? nullptr : by_id.at(item.scene_id);
        if (item.kind == QAItem::Kind::referential) {
            int hits = 0, last = -1;
            Program p = parse_program(item.program);
            auto names = program_concepts(item.program);
            for (std::size_t i = 0; i < scene->objects.size(); ++i) {
                bool all = true;
                for (const auto& c : names)
                    all = all && ds.ontology.applies(c, scene->objects[i].attributes);
                if (all) {
                    ++hits;
                    last = (int)i;
                }
            }
            if (hits != 1 || last != item.target)
                throw std::invalid_argument("referential target is not unique/correct");
        } else if (item.kind == QAItem::Kind::metaconcept) {
            if (symbolic_answer(ds.ontology, item.program, nullptr) != item.answer)
                throw std::invalid_argument("metaconcept answer mismatch");
        } else {
            if (symbolic_answer(ds.ontology, item.program, scene) != item.answer)
                throw std::invalid_argument("visual answer mismatch");
        }
    }
    auto concepts_in = [&](const std::string& part, QAItem::Kind kind) {
        std::set<std::string> out;
        for (auto i : ds.partitions.at(part))
            if (ds.items[i].kind == kind)
                out.merge(program_concepts(ds.items[i].program));
        return out;
    };
    auto scene_ids_in = [&](const std::string& part) {
        std::set<std::string> out;
        for (auto i : ds.partitions.at(part))
            if (!ds.items[i].scene_id.empty()) out.insert(ds.items[i].scene_id);
        return out;
    };
    switch (spec.experiment) {
        case Experiment::zero_shot_synonym: {
            auto train = concepts_in("train", QAItem::Kind::visual);
            auto test = concepts_in("test", QAItem::Kind::visual);
            std::set<std::string> held;
            for (const auto& c : test)
                if (!train.count(c)) held.insert(c);
            if (held.empty())
                throw std::invalid_argument("no held-out concepts in test questions");
            for (auto i : ds.partitions.at("test")) {
                auto names = program_concepts(ds.items[i].program);
                bool ok = false;
                for (const auto& c : names) ok = ok || held.count(c);
                if (!ok)
                    throw std::invalid_argument("test question without held-out concept");
            }
            break;
        }
        case Experiment::metaconcept_generalization: {
            auto train = concepts_in("train", QAItem::Kind::metaconcept);
            auto test = concepts_in("test", QAItem::Kind::metaconcept);
            for (const auto& c : test)
                if (train.count(c))
                    throw std::invalid_argument("test metaconcept pair reuses train concept");
            break;
        }
        default: break;
    }
    // Scene-grounded test items must use scenes never queried in training.
    auto train_scenes = scene_ids_in("train");
    for (const auto& id : scene_ids_in("test"))
        if (train_scenes.count(id))
            throw std::invalid_argument("test item grounded in a training scene");
}

// ---- file I/O ----

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    return out;
}

json scene_to_json(const Scene& s) {
    json objs = json::array();
    for (const auto& o : s.objects) {
        json jo;
        jo["attributes"] = o.attributes.empty() ? json(nullptr) : json(o.attributes);
        jo["features"] = o.features;
        objs.push_back(std::move(jo));
    }
    return json{{"scene_id", s.id}, {"objects", std::move(objs)}};
}

[[noreturn]] void line_error(const std::string& path, std::size_t line,
                             const std::string& msg) {
    throw std::runtime_error(path + " line " + std::to_string(line) + ": " + msg);
}

}  // namespace

void save_scenes_jsonl(const std::vector<Scene>& scenes, const std::string& path) {
    auto out = open_out(path);
    for (const auto& s : scenes) out << scene_to_json(s).dump() << "\n";
}

std::vector<Scene> load_scenes_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Scene> scenes;
    std::string line;
    std::size_t lineno = 0;
    int feat_dim = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_error(path, lineno, e.what());
        }
        Scene s;
        if (!j.contains("scene_id") || !j.contains("objects"))
            line_error(path, lineno, "scene needs scene_id and objects");
        s.id = j.at("scene_id").get<std::string>();
        for (const auto& jo : j.at("objects")) {
            SceneObject o;
            if (jo.contains("attributes") && !jo.at("attributes").is_null())
                o.attributes = jo.at("attributes").get<std::map<std::string, std::string>>();
            if (!jo.contains("features") || !jo.at("features").is_array())
                line_error(path, lineno, "object needs a features array");
            o.features = jo.at("features").get<std::vector<double>>();
            for (double x : o.features)
                if (!std::isfinite(x)) line_error(path, lineno, "non-finite feature value");
            if (feat_dim < 0) feat_dim = (int)o.features.size();
            if ((int)o.features.size() != feat_dim)
                line_error(path, lineno, "inconsistent feature dimension");
            s.objects.push_back(std::move(o));
        }
        scenes.push_back(std::move(s));
    }
    return scenes;
}

void save_qa_jsonl(const std::vector<QAItem>& items, const std::string& path) {
    auto out = open_out(path);
    for (const auto& item : items) {
        json j;
        j["kind"] = item.kind == QAItem::Kind::visual        ? "visual"
                    : item.kind == QAItem::Kind::metaconcept ? "metaconcept"
                                                             : "referential";
        j["program"] = item.program;
        j["answer"] = item.answer;
        if (!item.scene_id.empty()) j["scene_id"] = item.scene_id;
        if (item.kind == QAItem::Kind::referential) j["target"] = item.target;
        out << j.dump() << "\n";
    }
}

std::vector<QAItem> load_qa_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<QAItem> items;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            line_error(path, lineno, e.what());
        }
        QAItem item;
        std::string kind = j.at("kind").get<std::string>();
        if (kind == "visual") item.kind = QAItem::Kind::visual;
        else if (kind == "metaconcept") item.kind = QAItem::Kind::metaconcept;
        else if (kind == "referential") item.kind = QAItem::Kind::referential;
        else line_error(path, lineno, "unknown item kind: " + kind);
        item.program = j.at("program").get<std::string>();
        item.answer = j.at("answer").get<bool>();
        if (j.contains("scene_id")) item.scene_id = j.at("scene_id").get<std::string>();
        if (j.contains("target")) item.target = j.at("target").get<int>();
        try {
            parse_program(item.program);
        } catch (const std::exception& e) {
            line_error(path, lineno, e.what());
        }
        items.push_back(std::move(item));
    }
    return items;
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        auto out = open_out((fs::path(dir) / "ontology.json").string());
        out << ds.ontology.to_json_text() << "\n";
    }
    save_scenes_jsonl(ds.scenes, (fs::path(dir) / "scenes.jsonl").string());
    save_qa_jsonl(ds.items, (fs::path(dir) / "qa.jsonl").string());
    {
        json j;
        for (const auto& [name, idx] : ds.partitions) j[name] = idx;
        auto out = open_out((fs::path(dir) / "splits.json").string());
        out << j.dump(2) << "\n";
    }
}

Dataset load_dataset(const std::string& dir) {
    namespace fs = std::filesystem;
    Dataset ds;
    {
        std::ifstream in(fs::path(dir) / "ontology.json", std::ios::binary);
        if (!in) throw std::runtime_error("cannot read ontology.json in " + dir);
        std::stringstream ss;
        ss << in.rdbuf();
        ds.ontology = Ontology::from_json_text(ss.str());
    }
    ds.scenes = load_scenes_jsonl((fs::path(dir) / "scenes.jsonl").string());
    ds.items = load_qa_jsonl((fs::path(dir) / "qa.jsonl").string());
    {
        std::ifstream in(fs::path(dir) / "splits.json", std::ios::binary);
        if (!in) throw std::runtime_error("cannot read splits.json in " + dir);
        json j = json::parse(in);
        for (auto& [name, idx] : j.items())
            ds.partitions[name] = idx.get<std::vector<std::size_t>>();
    }
    ds.validate();
    return ds;
}

}  // namespace hce
