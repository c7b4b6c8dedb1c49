#include "gaussian.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace hce {
namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kSqrt2 = 1.4142135623730950488016887242097;

void check_finite(double x, const char* name) {
    if (!std::isfinite(x)) {
        throw std::invalid_argument(std::string(name) + " must be finite");
    }
}

// Clamps rho into [-1, 1]; anything further out than 1e-9 is a caller bug.
double checked_rho(double rho) {
    check_finite(rho, "rho");
    if (std::abs(rho) > 1.0 + 1e-9) {
        throw std::invalid_argument("rho outside [-1, 1]: " + std::to_string(rho));
    }
    return std::clamp(rho, -1.0, 1.0);
}

// Gauss-Legendre abscissae/weights on (-1, 1), from Genz's bivariate
// normal quadrature (6/12/20 points selected by |rho|).
const double kGl6x[3] = {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970};
const double kGl6w[3] = {0.1713244923791705, 0.3607615730481384, 0.4679139345726904};
const double kGl12x[6] = {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050,
                          -0.5873179542866171, -0.3678314989981802, -0.1252334085114692};
const double kGl12w[6] = {0.04717533638651177, 0.1069393259953183, 0.1600783285433464,
                          0.2031674267230659,  0.2334925365383547, 0.2491470458134029};
const double kGl20x[10] = {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259,
                           -0.8391169718222188, -0.7463319064601508, -0.6360536807265150,
                           -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
                           -0.07652652113349733};
const double kGl20w[10] = {0.01761400713915212, 0.04060142980038694, 0.06267204833410906,
                           0.08327674157670475, 0.1019301198172404,  0.1181945319615184,
                           0.1316886384491766,  0.1420961093183821,  0.1491729864726037,
                           0.1527533871307259};

// Collinear limits: rho = 1 gives the larger half-plane constraint,
// rho = -1 the Frechet lower bound.
double collinear_limit(double h, double k, double rho) {
    if (rho > 0.0) {
        return 1.0 - std_normal_cdf(std::max(h, k));
    }
    return std::max(0.0, 1.0 - std_normal_cdf(h) - std_normal_cdf(k));
}

// Genz's single-integral algorithm for P(X >= h, Y >= k); the strongly
// correlated branch integrates the complementary wedge.
double bvn_upper(double h, double k, double r) {
    const double* x;
    const double* w;
    int ng;
    const double ar = std::abs(r);
    if (ar < 0.3) {
        x = kGl6x;
        w = kGl6w;
        ng = 3;
    } else if (ar < 0.75) {
        x = kGl12x;
        w = kGl12w;
        ng = 6;
    } else {
        x = kGl20x;
        w = kGl20w;
        ng = 10;
    }

    double hk = h * k;
    double bvn = 0.0;
    if (ar < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (int i = 0; i < ng; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double sn = std::sin(asr * (is * x[i] + 1.0) / 2.0);
                bvn += w[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            }
        }
        bvn = bvn * asr / (2.0 * kTwoPi) +
              (1.0 - std_normal_cdf(h)) * (1.0 - std_normal_cdf(k));
        return bvn;
    }

    double kk = k;
    if (r < 0.0) {
        kk = -kk;
        hk = -hk;
    }
    if (ar < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - kk) * (h - kk);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        double asr = -(bs / as + hk) / 2.0;
        if (asr > -100.0) {
            bvn = a * std::exp(asr) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        }
        if (-hk < 100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(kTwoPi) * std_normal_cdf(-b / a);
            bvn -= std::exp(-hk / 2.0) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (int i = 0; i < ng; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double xs0 = a * (is * x[i] + 1.0);
                const double xs = xs0 * xs0;
                const double rs = std::sqrt(1.0 - xs);
                const double asr2 = -(bs / xs + hk) / 2.0;
                if (asr2 > -100.0) {
                    const double sp = 1.0 + c * xs * (1.0 + d * xs);
                    const double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
                    bvn += a * w[i] * std::exp(asr2) * (ep - sp);
                }
            }
        }
        bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
        bvn += 1.0 - std_normal_cdf(std::max(h, kk));
    } else {
        bvn = -bvn;
        if (kk > h) {
            bvn += std_normal_cdf(kk) - std_normal_cdf(h);
        }
        bvn = std::max(0.0, bvn);
    }
    return bvn;
}

}  // namespace

double std_normal_cdf(double x) {
    check_finite(x, "x");
    return 0.5 * std::erfc(-x / kSqrt2);
}

double std_normal_pdf(double x) {
    return std::exp(-0.5 * x * x) / std::sqrt(kTwoPi);
}

double denotational_prob_from_norm(double r) {
    check_finite(r, "r");
    if (r < 0.0) {
        throw std::invalid_argument("norm must be nonnegative");
    }
    return 0.5 * std::erfc(r / kSqrt2);
}

double orthant_upper(const OrthantInputs& in) {
    check_finite(in.h, "h");
    check_finite(in.k, "k");
    const double rho = checked_rho(in.rho);
    if (std::abs(rho) >= 1.0 - kRhoLimitBand) {
        return collinear_limit(in.h, in.k, rho);
    }
    const double p = bvn_upper(in.h, in.k, rho);
    return std::clamp(p, 0.0, 1.0);
}

OrthantGrad orthant_upper_grad(const OrthantInputs& in) {
    check_finite(in.h, "h");
    check_finite(in.k, "k");
    double rho = checked_rho(in.rho);
    // One-sided value at the collinear band edge.
    rho = std::clamp(rho, -(1.0 - kRhoLimitBand), 1.0 - kRhoLimitBand);
    const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
    OrthantGrad g;
    g.dh = -std_normal_pdf(in.h) * (1.0 - std_normal_cdf((in.k - rho * in.h) / s));
    g.dk = -std_normal_pdf(in.k) * (1.0 - std_normal_cdf((in.h - rho * in.k) / s));
    const double q = (in.h * in.h - 2.0 * rho * in.h * in.k + in.k * in.k) / (s * s);
    g.drho = std::exp(-0.5 * q) / (kTwoPi * s);
    return g;
}

McEstimate mc_orthant_oracle(const OrthantInputs& in, std::uint64_t n_samples,
                             std::uint64_t seed) {
    if (n_samples < 1) {
        throw std::invalid_argument("n_samples must be >= 1");
    }
    check_finite(in.h, "h");
    check_finite(in.k, "k");
    const double rho = checked_rho(in.rho);
    const double s = std::sqrt(std::max(0.0, (1.0 - rho) * (1.0 + rho)));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uint64_t hits = 0;
    for (std::uint64_t i = 0; i < n_samples; ++i) {
        const double z1 = normal(rng);
        const double z2 = normal(rng);
        const double y = rho * z1 + s * z2;
        if (z1 >= in.h && y >= in.k) {
            ++hits;
        }
    }
    McEstimate out;
    const double n = static_cast<double>(n_samples);
    out.estimate = static_cast<double>(hits) / n;
    out.std_error = std::sqrt(std::max(out.estimate * (1.0 - out.estimate), 1.0 / n) / n);
    return out;
}

}  // namespace hce
