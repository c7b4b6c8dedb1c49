#include "executor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hce {
namespace {

// Evaluates a mask-typed node to per-object soft scores.
std::vector<double> eval_mask(const ProgramNode& node, const ConceptScorer& scorer) {
    if (node.kind == NodeKind::scene) {
        return std::vector<double>(scorer.num_objects(), 1.0);
    }
    if (node.kind != NodeKind::filter) {
        throw std::logic_error("mask evaluation on non-mask node");
    }
    std::vector<double> mask = eval_mask(*node.child, scorer);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] *= scorer.object_concept_score(i, node.concept_name);
    }
    return mask;
}

std::size_t argmax_lowest(const std::vector<double>& mask) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < mask.size(); ++i) {
        if (mask[i] > mask[best]) best = i;
    }
    return best;
}

// Filter chain below an Exist/Locate root, innermost first.
std::vector<const ProgramNode*> filter_chain(const ProgramNode& mask_node) {
    std::vector<const ProgramNode*> chain;
    const ProgramNode* n = &mask_node;
    while (n->kind == NodeKind::filter) {
        chain.push_back(n);
        n = n->child.get();
    }
    return chain;
}

}  // namespace

std::size_t ModelScorer::num_objects() const {
    return scene_ ? scene_->objects.size() : 0;
}

double ModelScorer::object_concept_score(std::size_t obj, const std::string& cname) const {
    const SceneObject& o = scene_->objects[obj];
    return object_score(o.features, model_.encoder(), model_.concept_vec(cname));
}

double ModelScorer::relation_score(const std::string& a, const std::string& b,
                                   const std::string& metaconcept) const {
    return meta_verify(model_.metaconcept_op(), model_.metaconcept_params(metaconcept),
                       model_.concept_vec(a), model_.concept_vec(b));
}

ExecutionResult execute(const Program& program, const ConceptScorer& scorer) {
    if (!program.root) throw std::invalid_argument("empty program");
    const ProgramNode& root = *program.root;
    ExecutionResult r;
    switch (root.kind) {
        case NodeKind::meta_verify:
            r.kind = ExecutionResult::Kind::boolean_score;
            r.score = scorer.relation_score(root.concept_name, root.concept_b,
                                            root.metaconcept);
            return r;
        case NodeKind::exist: {
            const auto mask = eval_mask(*root.child, scorer);
            if (mask.empty()) throw std::invalid_argument("Exist over an empty scene");
            r.kind = ExecutionResult::Kind::boolean_score;
            r.score = mask[argmax_lowest(mask)];
            return r;
        }
        case NodeKind::locate: {
            const auto mask = eval_mask(*root.child, scorer);
            if (mask.empty()) throw std::invalid_argument("Locate over an empty scene");
            r.kind = ExecutionResult::Kind::object_index;
            r.index = static_cast<int>(argmax_lowest(mask));
            return r;
        }
        default:
            throw std::invalid_argument(
                "program root must be Exist, Locate, or MetaVerify");
    }
}

ExecutionResult execute(const Program& program, const Scene* scene,
                        const ModelState& model) {
    if (program.root && program.root->kind != NodeKind::meta_verify && !scene) {
        throw std::invalid_argument("program requires a scene");
    }
    ModelScorer scorer(model, scene);
    return execute(program, scorer);
}

double bce_loss(double score, bool answer) {
    const double s = std::clamp(score, kProbClamp, 1.0 - kProbClamp);
    return answer ? -std::log(s) : -std::log(1.0 - s);
}

double execute_backward(const Program& program, const Scene* scene,
                        const ModelState& model, bool answer, std::span<double> grad) {
    if (!program.root) throw std::invalid_argument("empty program");
    if (!program.is_boolean()) {
        throw std::invalid_argument("execute_backward requires a boolean program");
    }
    if (grad.size() != model.params().size()) {
        throw std::invalid_argument("gradient buffer size mismatch");
    }
    const ProgramNode& root = *program.root;
    const double y = answer ? 1.0 : 0.0;

    if (root.kind == NodeKind::meta_verify) {
        const Vec pa = model.concept_vec(root.concept_name);
        const Vec pb = model.concept_vec(root.concept_b);
        const Vec mp = model.metaconcept_params(root.metaconcept);
        const double s = meta_verify(model.metaconcept_op(), mp, pa, pb);
        const double sc = std::clamp(s, kProbClamp, 1.0 - kProbClamp);
        const double adj = (sc - y) / (sc * (1.0 - sc));
        meta_verify_backward(model.metaconcept_op(), mp, pa, pb, adj,
                             model.metaconcept_slice(grad, root.metaconcept),
                             model.concept_slice(grad, model.concept_index(root.concept_name)),
                             model.concept_slice(grad, model.concept_index(root.concept_b)));
        return bce_loss(s, answer);
    }

    // Exist(Filter-chain): gradient flows through the argmax object only.
    if (!scene) throw std::invalid_argument("program requires a scene");
    ModelScorer scorer(model, scene);
    const auto mask = eval_mask(*root.child, scorer);
    if (mask.empty()) throw std::invalid_argument("Exist over an empty scene");
    const std::size_t j = argmax_lowest(mask);
    const double s = mask[j];
    const double sc = std::clamp(s, kProbClamp, 1.0 - kProbClamp);
    const double dls = (sc - y) / (sc * (1.0 - sc));

    const auto chain = filter_chain(*root.child);
    const SceneObject& obj = scene->objects[j];
    const ObjectEncoder enc = model.encoder();
    std::vector<double> scores(chain.size());
    for (std::size_t c = 0; c < chain.size(); ++c) {
        scores[c] = scorer.object_concept_score(j, chain[c]->concept_name);
    }
    for (std::size_t c = 0; c < chain.size(); ++c) {
        double others = 1.0;
        for (std::size_t c2 = 0; c2 < chain.size(); ++c2) {
            if (c2 != c) others *= scores[c2];
        }
        const double adj = dls * others;
        const std::string& cname = chain[c]->concept_name;
        object_score_backward(obj.features, enc, model.concept_vec(cname), adj,
                              model.concept_slice(grad, model.concept_index(cname)),
                              model.encoder_weight_slice(grad),
                              model.encoder_bias_slice(grad));
    }
    return bce_loss(s, answer);
}

}  // namespace hce
