#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "executor.hpp"
#include "oracles.hpp"

namespace {

// Fixed per-object mask scores, no model involved.
class StubScorer : public hce::ConceptScorer {
  public:
    explicit StubScorer(std::vector<double> scores) : scores_(std::move(scores)) {}
    std::size_t num_objects() const override { return scores_.size(); }
    double object_concept_score(std::size_t obj, const std::string&) const override {
        return scores_[obj];
    }
    double relation_score(const std::string&, const std::string&,
                          const std::string&) const override {
        return 0.5;
    }

  private:
    std::vector<double> scores_;
};

// Ground-truth {0,1} scorer over symbolic object attribute sets.
class BooleanScorer : public hce::ConceptScorer {
  public:
    explicit BooleanScorer(std::vector<std::vector<std::string>> attrs)
        : attrs_(std::move(attrs)) {}
    std::size_t num_objects() const override { return attrs_.size(); }
    double object_concept_score(std::size_t obj, const std::string& c) const override {
        for (const auto& a : attrs_[obj]) {
            if (a == c) return 1.0;
        }
        return 0.0;
    }
    double relation_score(const std::string&, const std::string&,
                          const std::string&) const override {
        return 0.0;
    }

  private:
    std::vector<std::vector<std::string>> attrs_;
};

hce::ModelState tiny_model(std::uint64_t seed) {
    hce::ModelConfig cfg;
    cfg.embed_dim = 6;
    cfg.feat_dim = 4;
    cfg.hidden = 4;
    hce::ModelState m(cfg, {"cube", "red", "sphere"}, {"synonym"});
    m.init_random(seed);
    return m;
}

hce::Scene random_scene(std::mt19937_64& rng, int n_objects, int feat_dim) {
    std::normal_distribution<double> nd(0.0, 1.0);
    hce::Scene s;
    s.id = "s";
    for (int i = 0; i < n_objects; ++i) {
        hce::SceneObject o;
        o.features.resize(feat_dim);
        for (auto& x : o.features) x = nd(rng);
        s.objects.push_back(std::move(o));
    }
    return s;
}

}  // namespace

TEST_CASE("parser accepts the question forms") {
    auto p = hce::parse_program("Exist(Filter(Scene(), red))");
    CHECK(p.root->kind == hce::NodeKind::exist);
    CHECK(p.root->child->kind == hce::NodeKind::filter);
    CHECK(p.root->child->concept_name == "red");

    auto m = hce::parse_program("MetaVerify(sphere, ball, synonym)");
    CHECK(m.root->kind == hce::NodeKind::meta_verify);
    CHECK(m.root->concept_name == "sphere");
    CHECK(m.root->concept_b == "ball");
    CHECK(m.root->metaconcept == "synonym");

    // Whitespace-insensitive.
    auto w = hce::parse_program("  Exist ( Filter( Scene () , big_cube ) ) ");
    CHECK(w.to_text() == "Exist(Filter(Scene(), big_cube))");
}

TEST_CASE("parser round trip is identity") {
    const char* programs[] = {
        "Scene()",
        "Exist(Filter(Scene(), red))",
        "Exist(Filter(Filter(Scene(), red), cube))",
        "Locate(Filter(Scene(), metal))",
        "MetaVerify(red, green, same_kind)",
    };
    for (const char* t : programs) {
        const std::string once = hce::parse_program(t).to_text();
        CHECK(once == hce::parse_program(once).to_text());
    }
}

TEST_CASE("parser errors") {
    CHECK_THROWS_AS(hce::parse_program("Exist(red"), hce::ParseError);
    try {
        hce::parse_program("Exist(red");
    } catch (const hce::ParseError& e) {
        CHECK(e.offset >= 6);
    }
    CHECK_THROWS_AS(hce::parse_program("Exist(Filter(Scene(), red)"), hce::ParseError);
    CHECK_THROWS_AS(hce::parse_program("Exist(Scene(), red)"), hce::ParseError);
    CHECK_THROWS_AS(hce::parse_program("Filter(Scene(), Red)"), hce::ParseError);
    // Type errors carry the node path.
    CHECK_THROWS_AS(hce::parse_program("Exist(MetaVerify(a, b, c))"), hce::TypeError);
    CHECK_THROWS_AS(hce::parse_program("Filter(MetaVerify(a, b, c), red)"),
                    hce::TypeError);
}

TEST_CASE("Exist takes the max of the mask") {
    StubScorer scorer({0.2, 0.9, 0.4});
    auto p = hce::parse_program("Exist(Filter(Scene(), red))");
    const auto r = hce::execute(p, scorer);
    CHECK(r.kind == hce::ExecutionResult::Kind::boolean_score);
    CHECK(r.score == doctest::Approx(0.9));

    auto l = hce::parse_program("Locate(Filter(Scene(), red))");
    CHECK(hce::execute(l, scorer).index == 1);

    // Ties break to the lowest index.
    StubScorer tie({0.7, 0.7, 0.1});
    CHECK(hce::execute(l, tie).index == 0);

    StubScorer empty({});
    CHECK_THROWS(hce::execute(p, empty));
}

TEST_CASE("soft execution with hard scores equals boolean semantics") {
    std::mt19937_64 rng(5);
    const std::vector<std::string> colors = {"red", "green", "blue"};
    const std::vector<std::string> shapes = {"cube", "sphere"};
    std::uniform_int_distribution<int> uc(0, 2), us(0, 1), un(1, 6);
    for (int t = 0; t < 300; ++t) {
        std::vector<std::vector<std::string>> attrs(un(rng));
        for (auto& a : attrs) a = {colors[uc(rng)], shapes[us(rng)]};
        BooleanScorer scorer(attrs);

        const std::string c1 = colors[uc(rng)];
        const std::string c2 = shapes[us(rng)];
        auto p1 = hce::parse_program("Exist(Filter(Scene(), " + c1 + "))");
        auto p2 =
            hce::parse_program("Exist(Filter(Filter(Scene(), " + c1 + "), " + c2 + "))");

        bool any1 = false, any2 = false;
        for (const auto& a : attrs) {
            const bool has1 = a[0] == c1;
            const bool has2 = a[1] == c2;
            any1 = any1 || has1;
            any2 = any2 || (has1 && has2);
        }
        CHECK(hce::execute(p1, scorer).score == (any1 ? 1.0 : 0.0));
        CHECK(hce::execute(p2, scorer).score == (any2 ? 1.0 : 0.0));
    }
}

TEST_CASE("monotonicity of Exist in any filter score") {
    auto p = hce::parse_program("Exist(Filter(Scene(), red))");
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> scores(4);
        for (auto& s : scores) s = u(rng);
        const double before = hce::execute(p, StubScorer(scores)).score;
        const std::size_t i = t % scores.size();
        scores[i] = std::min(1.0, scores[i] + 0.2);
        const double after = hce::execute(p, StubScorer(scores)).score;
        CHECK(after >= before);
    }
}

TEST_CASE("execute with model requires the right inputs") {
    auto model = tiny_model(1);
    auto p = hce::parse_program("Exist(Filter(Scene(), red))");
    CHECK_THROWS(hce::execute(p, nullptr, model));

    std::mt19937_64 rng(2);
    auto scene = random_scene(rng, 3, 4);
    CHECK_THROWS(hce::execute(hce::parse_program("Exist(Filter(Scene(), zebra))"),
                              &scene, model));
    const auto r = hce::execute(p, &scene, model);
    CHECK(r.score > 0.0);
    CHECK(r.score < 1.0);

    // MetaVerify runs without a scene.
    const auto mv =
        hce::execute(hce::parse_program("MetaVerify(red, cube, synonym)"), nullptr, model);
    CHECK(mv.score > 0.0);
    CHECK(mv.score < 1.0);
}

TEST_CASE("single-object Exist gradient equals the direct BCE gradient") {
    auto model = tiny_model(3);
    std::mt19937_64 rng(4);
    auto scene = random_scene(rng, 1, 4);
    auto p = hce::parse_program("Exist(Filter(Scene(), red))");

    std::vector<double> g1(model.params().size(), 0.0);
    const double loss = hce::execute_backward(p, &scene, model, true, g1);

    // Direct route: BCE'(score) through object_score_backward.
    const double s = hce::object_score(scene.objects[0].features, model.encoder(),
                                       model.concept_vec("red"));
    CHECK(loss == doctest::Approx(hce::bce_loss(s, true)).epsilon(1e-12));
    std::vector<double> g2(model.params().size(), 0.0);
    const double adj = (s - 1.0) / (s * (1.0 - s));
    hce::object_score_backward(scene.objects[0].features, model.encoder(),
                               model.concept_vec("red"), adj,
                               model.concept_slice(g2, model.concept_index("red")),
                               model.encoder_weight_slice(g2),
                               model.encoder_bias_slice(g2));
    for (std::size_t i = 0; i < g1.size(); ++i) {
        CHECK(g1[i] == doctest::Approx(g2[i]).epsilon(1e-12));
    }
}

TEST_CASE("gradient only flows through the argmax object") {
    auto model = tiny_model(5);
    std::mt19937_64 rng(6);
    auto scene = random_scene(rng, 2, 4);
    auto p = hce::parse_program("Exist(Filter(Scene(), cube))");

    const double s0 = hce::object_score(scene.objects[0].features, model.encoder(),
                                        model.concept_vec("cube"));
    const double s1 = hce::object_score(scene.objects[1].features, model.encoder(),
                                        model.concept_vec("cube"));
    REQUIRE(s0 != s1);
    const std::size_t jmax = s0 >= s1 ? 0 : 1;

    std::vector<double> g_full(model.params().size(), 0.0);
    hce::execute_backward(p, &scene, model, false, g_full);

    hce::Scene only_max;
    only_max.objects.push_back(scene.objects[jmax]);
    std::vector<double> g_max(model.params().size(), 0.0);
    hce::execute_backward(p, &only_max, model, false, g_max);

    for (std::size_t i = 0; i < g_full.size(); ++i) {
        CHECK(g_full[i] == doctest::Approx(g_max[i]).epsilon(1e-12));
    }
}

TEST_CASE("executor gradients vs finite differences") {
    std::mt19937_64 rng(7);
    const char* programs[] = {
        "Exist(Filter(Scene(), red))",
        "Exist(Filter(Filter(Scene(), red), cube))",
        "MetaVerify(red, cube, synonym)",
        "MetaVerify(cube, sphere, synonym)",
    };
    // Self-pairs sit at the rho = 1 collinear singularity where only a
    // subgradient is defined; they must still run without error.
    {
        auto model = tiny_model(99);
        std::vector<double> g(model.params().size(), 0.0);
        auto self = hce::parse_program("MetaVerify(sphere, sphere, synonym)");
        CHECK(std::isfinite(hce::execute_backward(self, nullptr, model, true, g)));
    }
    int checked = 0;
    for (int t = 0; t < 30; ++t) {
        auto model = tiny_model(100 + t);
        auto scene = random_scene(rng, 3, 4);
        const bool answer = t % 2 == 0;
        for (const char* text : programs) {
            auto p = hce::parse_program(text);
            std::vector<double> g(model.params().size(), 0.0);
            hce::execute_backward(p, &scene, model, answer, g);

            auto eval = [&](const std::vector<double>& q) {
                hce::ModelState m2 = model;
                m2.params() = q;
                return hce::bce_loss(hce::execute(p, &scene, m2).score, answer);
            };
            bool ok = true;
            for (std::size_t i = 0; i < g.size(); ++i) {
                const double fd = hce::test::central_diff(eval, model.params(), i, 1e-5);
                ok = ok && hce::test::rel_close(g[i], fd, 1e-4, 1e-6);
            }
            CHECK(ok);
            ++checked;
        }
    }
    CHECK(checked >= 100);
}
