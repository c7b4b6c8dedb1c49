#pragma once

#include <span>
#include <string>
#include <vector>

#include "model.hpp"
#include "program.hpp"
#include "scene.hpp"

namespace hce {

struct ExecutionResult {
    enum class Kind { boolean_score, object_index };
    Kind kind = Kind::boolean_score;
    double score = 0.0;  // boolean_score
    int index = -1;      // locate
};

// Atomic-score source for the executor. The model-backed scorer is the
// production path; tests substitute a ground-truth {0,1} scorer to check
// the soft semantics against classical boolean evaluation.
class ConceptScorer {
  public:
    virtual ~ConceptScorer() = default;
    virtual std::size_t num_objects() const = 0;
    virtual double object_concept_score(std::size_t obj, const std::string& cname) const = 0;
    virtual double relation_score(const std::string& a, const std::string& b,
                                  const std::string& metaconcept) const = 0;
};

class ModelScorer : public ConceptScorer {
  public:
    ModelScorer(const ModelState& model, const Scene* scene)
        : model_(model), scene_(scene) {}
    std::size_t num_objects() const override;
    double object_concept_score(std::size_t obj, const std::string& cname) const override;
    double relation_score(const std::string& a, const std::string& b,
                          const std::string& metaconcept) const override;

  private:
    const ModelState& model_;
    const Scene* scene_;
};

// Soft-score execution: Scene -> all-ones mask, Filter -> elementwise
// product with per-object concept scores, Exist -> max, Locate -> argmax
// (ties to the lowest index), MetaVerify -> relation score.
ExecutionResult execute(const Program& program, const ConceptScorer& scorer);
ExecutionResult execute(const Program& program, const Scene* scene,
                        const ModelState& model);

// Binary cross-entropy between the executed score and the boolean answer;
// accumulates parameter gradients into grad (model.params().size() wide)
// and returns the loss. Gradients flow through the argmax branch of Exist
// only; Locate programs are evaluation-only.
double execute_backward(const Program& program, const Scene* scene,
                        const ModelState& model, bool answer, std::span<double> grad);

double bce_loss(double score, bool answer);

}  // namespace hce
