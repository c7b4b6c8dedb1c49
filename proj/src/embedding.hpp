#pragma once

#include <span>
#include <vector>

// The joint concept/object embedding space. Every entity is a vector in
// R^N whose half-space V(x) = {y : (y - x) . x > 0} carries a standard
// Gaussian measure; probabilities reduce to 1-D and 2-D orthant volumes
// through the lengths and the angle of the vectors involved.
namespace hce {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before any
// logit/log so the g1/g2 statistics stay finite.
inline constexpr double kProbClamp = 1e-7;

struct EntailmentStats {
    double g1_ab = 0.0;  // logit Pr(a | b)
    double g1_ba = 0.0;  // logit Pr(b | a)
    double g2 = 0.0;     // ln Pr(a,b) / (Pr(a) Pr(b))
};

using Vec = std::span<const double>;
using MutVec = std::span<double>;

double denotational_prob(Vec a);
double joint_prob(Vec a, Vec b);
// Pr(b | a) = Pr(a,b) / Pr(a), clamped.
double conditional_prob(Vec b, Vec a);
EntailmentStats entailment_stats(Vec a, Vec b);

// d(adjoint * Pr(a)) accumulated into grad_a.
void denotational_prob_backward(Vec a, double adjoint, MutVec grad_a);
void joint_prob_backward(Vec a, Vec b, double adjoint, MutVec grad_a, MutVec grad_b);
void conditional_prob_backward(Vec b, Vec a, double adjoint, MutVec grad_b, MutVec grad_a);
// adjoints pair with the three stats fields.
void entailment_stats_backward(Vec a, Vec b, const EntailmentStats& adjoints,
                               MutVec grad_a, MutVec grad_b);

// Affine map from D-dimensional perception features to the embedding
// space: e = W f + bias, with W stored row-major (N rows of D). Holds
// views into parameter storage owned elsewhere.
struct ObjectEncoder {
    int feat_dim = 0;
    int embed_dim = 0;
    Vec weight;  // embed_dim * feat_dim
    Vec bias;    // embed_dim

    void encode(Vec features, MutVec out) const;
};

// Pr(concept | encoded object).
double object_score(Vec features, const ObjectEncoder& enc, Vec concept_vec);

// Accumulates into the concept gradient and the encoder parameter
// gradients (same layout as ObjectEncoder::weight / bias).
void object_score_backward(Vec features, const ObjectEncoder& enc, Vec concept_vec,
                           double adjoint, MutVec grad_concept, MutVec grad_weight,
                           MutVec grad_bias);

}  // namespace hce
