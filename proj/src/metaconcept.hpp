#pragma once

#include <span>
#include <vector>

#include "embedding.hpp"

// Per-metaconcept classifiers: a small feed-forward net over the
// entailment statistics (g1(a,b), g1(b,a), g2(a,b)) of a concept pair.
namespace hce {

inline constexpr int kStatsArity = 3;

// Feed-forward net 3 -> hidden (tanh) -> 1 logit. Parameters live in a
// single contiguous block: [w1 (hidden x 3), b1 (hidden), w2 (hidden), b2].
struct MetaconceptOperator {
    int hidden = 32;

    std::size_t param_count() const {
        return static_cast<std::size_t>(hidden) * kStatsArity + hidden + hidden + 1;
    }

    // Raw relation logit for the given stats.
    double forward(std::span<const double> params, const EntailmentStats& s) const;

    // Backward through the net; accumulates into grad_params and returns
    // the adjoints w.r.t. the three stats inputs.
    EntailmentStats backward(std::span<const double> params, const EntailmentStats& s,
                             double adjoint, std::span<double> grad_params) const;
};

double sigmoid(double logit);

// sigmoid(f_m(stats(a, b))) in (0, 1).
double meta_verify(const MetaconceptOperator& op, std::span<const double> params,
                   Vec concept_a, Vec concept_b);

// Backward of meta_verify into the operator parameters and both concept
// embeddings.
void meta_verify_backward(const MetaconceptOperator& op, std::span<const double> params,
                          Vec concept_a, Vec concept_b, double adjoint,
                          std::span<double> grad_params, MutVec grad_a, MutVec grad_b);

}  // namespace hce
