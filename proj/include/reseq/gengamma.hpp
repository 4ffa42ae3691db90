#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace reseq {

// Four-parameter generalized gamma: shape alpha, scale beta, power gamma,
// location mu. Density on x > mu:
//   gamma / (beta Gamma(alpha)) * z^(alpha*gamma - 1) * exp(-z^gamma),  z = (x - mu) / beta
struct GenGammaParams {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double mu = 0.0;

    // ContractError unless alpha, beta, gamma are finite and > 0 and mu is finite.
    void check() const;
};

double gengamma_pdf(double x, const GenGammaParams& p);
// -inf for x <= mu.
double gengamma_logpdf(double x, const GenGammaParams& p);
double gengamma_cdf(double x, const GenGammaParams& p);
// Smallest x with cdf(x) = q, q in (0,1).
double gengamma_quantile(const GenGammaParams& p, double q);
double gengamma_log_likelihood(std::span<const double> samples, const GenGammaParams& p);

// Regularized lower incomplete gamma P(a, x) by series (x < a + 1) or
// Lentz continued fraction for Q = 1 - P (otherwise).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// ---------------------------------------------------------------------------
// Derivative-free minimization.

struct NelderMeadOptions {
    int max_iters = 2000;
    double tol = 1e-10;          // stop when the simplex value spread falls below tol * (1 + |best|)
    double initial_step = 0.25;  // simplex edge length in each coordinate
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             const NelderMeadOptions& opts = {});

// ---------------------------------------------------------------------------
// Maximum-likelihood fit.

struct GenGammaFitConfig {
    int restarts = 4;          // random restarts per location grid point, on top of the moment start
    std::uint64_t seed = 0;
    int max_iters = 2000;      // Nelder-Mead iterations per start
    double tol = 1e-10;
    int mu_grid = 32;          // profile points for the location parameter
    double quantile = 0.9;     // level of threshold_T
};

struct GenGammaFit {
    GenGammaParams params;
    double log_likelihood = 0.0;
    double threshold_T = 0.0;
    // False when the final polish hit max_iters; the best point found is still returned.
    bool converged = true;
};

// Profiles mu on a grid below min(samples), fits (alpha, beta, gamma) at each
// grid point by multi-start Nelder-Mead in log space, refines mu around the
// best grid point and polishes all four parameters jointly. mu stays below
// min(samples) - 1e-6 * range. Needs >= 8 samples with nonzero spread;
// FitError otherwise.
GenGammaFit fit_gengamma_mle(std::span<const double> samples, const GenGammaFitConfig& config = {});

}  // namespace reseq
