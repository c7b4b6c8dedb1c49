#pragma once

#include <cstdint>
#include <utility>

// Gaussian measures of half-spaces and their pairwise intersections,
// reduced to standard bivariate normal orthant probabilities.
namespace hce {

// Standardized parameters of an upper-orthant probability
// P(X >= h, Y >= k) for standard bivariate normal with correlation rho.
struct OrthantInputs {
    double h = 0.0;
    double k = 0.0;
    double rho = 0.0;
};

struct OrthantGrad {
    double dh = 0.0;
    double dk = 0.0;
    double drho = 0.0;
};

struct McEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
};

// |rho| at or beyond this band routes to the analytic collinear limits.
inline constexpr double kRhoLimitBand = 1e-7;

double std_normal_cdf(double x);
double std_normal_pdf(double x);

// Pr(a) = 1/2 [1 - erf(r / sqrt(2))] = 1 - Phi(r) for an embedding of norm r.
double denotational_prob_from_norm(double r);

// P(X >= h, Y >= k), absolute error <= 1e-7 over the valid domain.
double orthant_upper(const OrthantInputs& in);

// Analytic partials of orthant_upper. Requires |rho| <= 1 - kRhoLimitBand;
// at the band edge callers receive the one-sided value.
OrthantGrad orthant_upper_grad(const OrthantInputs& in);

// Monte-Carlo estimate of orthant_upper; deterministic for a fixed seed.
McEstimate mc_orthant_oracle(const OrthantInputs& in, std::uint64_t n_samples,
                             std::uint64_t seed);

}  // namespace hce
