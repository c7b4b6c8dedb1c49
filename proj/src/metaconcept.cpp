#include "metaconcept.hpp"

#include <cmath>
#include <stdexcept>

namespace hce {
namespace {

void check_params(const MetaconceptOperator& op, std::span<const double> params) {
    if (params.size() != op.param_count()) {
        throw std::invalid_argument("metaconcept parameter block size mismatch");
    }
}

}  // namespace

double sigmoid(double logit) { return 1.0 / (1.0 + std::exp(-logit)); }

double MetaconceptOperator::forward(std::span<const double> params,
                                    const EntailmentStats& s) const {
    check_params(*this, params);
    const double in[kStatsArity] = {s.g1_ab, s.g1_ba, s.g2};
    const double* w1 = params.data();
    const double* b1 = w1 + static_cast<std::size_t>(hidden) * kStatsArity;
    const double* w2 = b1 + hidden;
    const double b2 = w2[hidden];
    double out = b2;
    for (int j = 0; j < hidden; ++j) {
        double z = b1[j];
        for (int i = 0; i < kStatsArity; ++i) z += w1[j * kStatsArity + i] * in[i];
        out += w2[j] * std::tanh(z);
    }
    return out;
}

EntailmentStats MetaconceptOperator::backward(std::span<const double> params,
                                              const EntailmentStats& s, double adjoint,
                                              std::span<double> grad_params) const {
    check_params(*this, params);
    if (grad_params.size() != param_count()) {
        throw std::invalid_argument("metaconcept gradient block size mismatch");
    }
    const double in[kStatsArity] = {s.g1_ab, s.g1_ba, s.g2};
    const double* w1 = params.data();
    const double* b1 = w1 + static_cast<std::size_t>(hidden) * kStatsArity;
    const double* w2 = b1 + hidden;

    double* gw1 = grad_params.data();
    double* gb1 = gw1 + static_cast<std::size_t>(hidden) * kStatsArity;
    double* gw2 = gb1 + hidden;
    double* gb2 = gw2 + hidden;

    double din[kStatsArity] = {0.0, 0.0, 0.0};
    *gb2 += adjoint;
    for (int j = 0; j < hidden; ++j) {
        double z = b1[j];
        for (int i = 0; i < kStatsArity; ++i) z += w1[j * kStatsArity + i] * in[i];
        const double t = std::tanh(z);
        gw2[j] += adjoint * t;
        const double dz = adjoint * w2[j] * (1.0 - t * t);
        gb1[j] += dz;
        for (int i = 0; i < kStatsArity; ++i) {
            gw1[j * kStatsArity + i] += dz * in[i];
            din[i] += dz * w1[j * kStatsArity + i];
        }
    }
    return {din[0], din[1], din[2]};
}

double meta_verify(const MetaconceptOperator& op, std::span<const double> params,
                   Vec concept_a, Vec concept_b) {
    const EntailmentStats s = entailment_stats(concept_a, concept_b);
    return sigmoid(op.forward(params, s));
}

void meta_verify_backward(const MetaconceptOperator& op, std::span<const double> params,
                          Vec concept_a, Vec concept_b, double adjoint,
                          std::span<double> grad_params, MutVec grad_a, MutVec grad_b) {
    const EntailmentStats s = entailment_stats(concept_a, concept_b);
    const double p = sigmoid(op.forward(params, s));
    const double dlogit = adjoint * p * (1.0 - p);
    const EntailmentStats dstats = op.backward(params, s, dlogit, grad_params);
    entailment_stats_backward(concept_a, concept_b, dstats, grad_a, grad_b);
}

}  // namespace hce
