#include "embedding.hpp"

#include <cmath>
#include <stdexcept>

#include "gaussian.hpp"

namespace hce {
namespace {

void check_dims(Vec a, Vec b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("embedding dimension mismatch");
    }
}

void check_finite(Vec a) {
    for (double x : a) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("non-finite embedding coordinate");
        }
    }
}

double norm(Vec a) {
    double s = 0.0;
    for (double x : a) s += x * x;
    return std::sqrt(s);
}

double dot(Vec a, Vec b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct PairGeom {
    double ra = 0.0;
    double rb = 0.0;
    double rho = 0.0;   // cosine of the angle; 0 when either vector is zero
    bool degenerate = false;
};

PairGeom geometry(Vec a, Vec b) {
    check_dims(a, b);
    check_finite(a);
    check_finite(b);
    PairGeom g;
    g.ra = norm(a);
    g.rb = norm(b);
    if (g.ra == 0.0 || g.rb == 0.0) {
        g.degenerate = true;
        return g;
    }
    g.rho = std::clamp(dot(a, b) / (g.ra * g.rb), -1.0, 1.0);
    return g;
}

double clamp_prob(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

double logit(double p) { return std::log(p / (1.0 - p)); }

// d rho / d a_i = b_i / (ra rb) - rho a_i / ra^2, plus the norm direction.
// Accumulates adjoint * dJ into the coordinate gradients of both vectors.
void joint_backward_geom(Vec a, Vec b, const PairGeom& g, double adjoint, MutVec grad_a,
                         MutVec grad_b) {
    if (adjoint == 0.0) return;
    const OrthantGrad og = orthant_upper_grad({g.ra, g.rb, g.rho});
    if (!g.degenerate) {
        const double inv = 1.0 / (g.ra * g.rb);
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double ua = a[i] / g.ra;
            const double ub = b[i] / g.rb;
            const double drho_da = b[i] * inv - g.rho * a[i] / (g.ra * g.ra);
            const double drho_db = a[i] * inv - g.rho * b[i] / (g.rb * g.rb);
            grad_a[i] += adjoint * (og.dh * ua + og.drho * drho_da);
            grad_b[i] += adjoint * (og.dk * ub + og.drho * drho_db);
        }
        return;
    }
    // Zero-norm subgradients: the norm contributes nothing, and rho is
    // pinned at 0 for a degenerate pair.
    if (g.ra > 0.0) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            grad_a[i] += adjoint * og.dh * a[i] / g.ra;
        }
    }
    if (g.rb > 0.0) {
        for (std::size_t i = 0; i < b.size(); ++i) {
            grad_b[i] += adjoint * og.dk * b[i] / g.rb;
        }
    }
}

void denot_backward_norm(Vec a, double r, double adjoint, MutVec grad) {
    if (adjoint == 0.0 || r == 0.0) return;
    const double d = -std_normal_pdf(r) / r;
    for (std::size_t i = 0; i < a.size(); ++i) {
        grad[i] += adjoint * d * a[i];
    }
}

}  // namespace

double denotational_prob(Vec a) {
    check_finite(a);
    return denotational_prob_from_norm(norm(a));
}

double joint_prob(Vec a, Vec b) {
    const PairGeom g = geometry(a, b);
    return orthant_upper({g.ra, g.rb, g.rho});
}

double conditional_prob(Vec b, Vec a) {
    const double j = joint_prob(a, b);
    const double pa = denotational_prob(a);
    return clamp_prob(j / pa);
}

EntailmentStats entailment_stats(Vec a, Vec b) {
    const double j = joint_prob(a, b);
    const double pa = denotational_prob(a);
    const double pb = denotational_prob(b);
    EntailmentStats s;
    s.g1_ab = logit(clamp_prob(j / pb));
    s.g1_ba = logit(clamp_prob(j / pa));
    s.g2 = std::log(clamp_prob(j)) - std::log(clamp_prob(pa)) - std::log(clamp_prob(pb));
    return s;
}

void denotational_prob_backward(Vec a, double adjoint, MutVec grad_a) {
    check_finite(a);
    denot_backward_norm(a, norm(a), adjoint, grad_a);
}

void joint_prob_backward(Vec a, Vec b, double adjoint, MutVec grad_a, MutVec grad_b) {
    const PairGeom g = geometry(a, b);
    joint_backward_geom(a, b, g, adjoint, grad_a, grad_b);
}

void conditional_prob_backward(Vec b, Vec a, double adjoint, MutVec grad_b,
                               MutVec grad_a) {
    const PairGeom g = geometry(a, b);
    const double j = orthant_upper({g.ra, g.rb, g.rho});
    const double pa = denotational_prob_from_norm(g.ra);
    const double c = j / pa;
    if (c <= kProbClamp || c >= 1.0 - kProbClamp) return;  // clamped: flat
    joint_backward_geom(a, b, g, adjoint / pa, grad_a, grad_b);
    denot_backward_norm(a, g.ra, -adjoint * c / pa, grad_a);
}

void entailment_stats_backward(Vec a, Vec b, const EntailmentStats& adjoints,
                               MutVec grad_a, MutVec grad_b) {
    const PairGeom g = geometry(a, b);
    const double j = orthant_upper({g.ra, g.rb, g.rho});
    const double pa = denotational_prob_from_norm(g.ra);
    const double pb = denotational_prob_from_norm(g.rb);

    auto in_band = [](double p) { return p > kProbClamp && p < 1.0 - kProbClamp; };

    double dj = 0.0;
    double dpa = 0.0;
    double dpb = 0.0;
    // g1_ab = logit(J / Pb)
    if (const double c = j / pb; in_band(c)) {
        const double f = adjoints.g1_ab / (c * (1.0 - c));
        dj += f / pb;
        dpb += -f * c / pb;
    }
    // g1_ba = logit(J / Pa)
    if (const double c = j / pa; in_band(c)) {
        const double f = adjoints.g1_ba / (c * (1.0 - c));
        dj += f / pa;
        dpa += -f * c / pa;
    }
    // g2 = ln J - ln Pa - ln Pb
    if (in_band(j)) dj += adjoints.g2 / j;
    if (in_band(pa)) dpa += -adjoints.g2 / pa;
    if (in_band(pb)) dpb += -adjoints.g2 / pb;

    joint_backward_geom(a, b, g, dj, grad_a, grad_b);
    denot_backward_norm(a, g.ra, dpa, grad_a);
    denot_backward_norm(b, g.rb, dpb, grad_b);
}

void ObjectEncoder::encode(Vec features, MutVec out) const {
    if (static_cast<int>(features.size()) != feat_dim ||
        static_cast<int>(out.size()) != embed_dim) {
        throw std::invalid_argument("encoder dimension mismatch");
    }
    for (int i = 0; i < embed_dim; ++i) {
        double s = bias[i];
        const double* row = weight.data() + static_cast<std::size_t>(i) * feat_dim;
        for (int j = 0; j < feat_dim; ++j) s += row[j] * features[j];
        out[i] = s;
    }
}

double object_score(Vec features, const ObjectEncoder& enc, Vec concept_vec) {
    std::vector<double> e(enc.embed_dim);
    enc.encode(features, e);
    return conditional_prob(concept_vec, e);
}

void object_score_backward(Vec features, const ObjectEncoder& enc, Vec concept_vec,
                           double adjoint, MutVec grad_concept, MutVec grad_weight,
                           MutVec grad_bias) {
    std::vector<double> e(enc.embed_dim);
    enc.encode(features, e);
    std::vector<double> grad_e(enc.embed_dim, 0.0);
    conditional_prob_backward(concept_vec, e, adjoint, grad_concept, grad_e);
    for (int i = 0; i < enc.embed_dim; ++i) {
        const double ge = grad_e[i];
        if (ge == 0.0) continue;
        grad_bias[i] += ge;
        double* row = grad_weight.data() + static_cast<std::size_t>(i) * enc.feat_dim;
        for (int j = 0; j < enc.feat_dim; ++j) row[j] += ge * features[j];
    }
}

}  // namespace hce
