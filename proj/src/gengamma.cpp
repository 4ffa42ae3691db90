#include "reseq/gengamma.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "reseq/errors.hpp"

namespace reseq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

void GenGammaParams::check() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(alpha) || !positive(beta) || !positive(gamma) || !std::isfinite(mu)) {
        throw ContractError("generalized gamma needs finite alpha, beta, gamma > 0 and finite mu");
    }
}

// ---------------------------------------------------------------------------
// Incomplete gamma

double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || std::isnan(x)) throw ContractError("regularized_gamma_p needs a > 0");
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (x >= a + 1.0) return 1.0 - regularized_gamma_q(a, x);

    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 100000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return std::min(1.0, sum * std::exp(log_prefix));
}

double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || std::isnan(x)) throw ContractError("regularized_gamma_q needs a > 0");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    if (x < a + 1.0) return 1.0 - regularized_gamma_p(a, x);

    // Modified Lentz evaluation of the continued fraction for Gamma(a, x).
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 100000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-16) break;
    }
    return std::max(0.0, std::exp(-x + a * std::log(x) - std::lgamma(a)) * h);
}

// ---------------------------------------------------------------------------
// Density, distribution, quantile

double gengamma_logpdf(double x, const GenGammaParams& p) {
    p.check();
    if (!(x > p.mu)) return -kInf;
    const double logz = std::log((x - p.mu) / p.beta);
    return std::log(p.gamma) - std::log(p.beta) - std::lgamma(p.alpha) + (p.alpha * p.gamma - 1.0) * logz -
           std::exp(p.gamma * logz);
}

double gengamma_pdf(double x, const GenGammaParams& p) {
    const double lp = gengamma_logpdf(x, p);
    return lp == -kInf ? 0.0 : std::exp(lp);
}

double gengamma_cdf(double x, const GenGammaParams& p) {
    p.check();
    if (!(x > p.mu)) return 0.0;
    return regularized_gamma_p(p.alpha, std::pow((x - p.mu) / p.beta, p.gamma));
}

double gengamma_quantile(const GenGammaParams& p, double q) {
    p.check();
    if (!(q > 0.0 && q < 1.0)) throw ContractError("quantile level must lie in (0,1)");

    // Solve P(alpha, t) = q for t = z^gamma, where the problem is well scaled,
    // then map back through x = mu + beta * t^(1/gamma).
    double lo = 0.0;
    double hi = std::max(1.0, p.alpha);
    for (int i = 0; i < 2000 && regularized_gamma_p(p.alpha, hi) < q; ++i) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = lo + 0.5 * (hi - lo);
        if (mid <= lo || mid >= hi) break;
        if (regularized_gamma_p(p.alpha, mid) < q) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo <= 1e-12 * hi) break;
    }

    // Newton polish inside the bracket; dP/dt is the standard gamma density.
    double t = lo + 0.5 * (hi - lo);
    for (int i = 0; i < 30; ++i) {
        const double f = regularized_gamma_p(p.alpha, t) - q;
        if (f == 0.0 || !(t > 0.0)) break;
        const double dens = std::exp((p.alpha - 1.0) * std::log(t) - t - std::lgamma(p.alpha));
        if (!(dens > 0.0) || !std::isfinite(dens)) break;
        double next = t - f / dens;
        if (!(next > lo && next < hi)) next = lo + 0.5 * (hi - lo);
        if (f < 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const bool done = std::abs(next - t) <= 1e-15 * t;
        t = next;
        if (done) break;
    }
    return p.mu + std::exp(std::log(p.beta) + std::log(t) / p.gamma);
}

double gengamma_log_likelihood(std::span<const double> samples, const GenGammaParams& p) {
    double total = 0.0;
    for (double x : samples) total += gengamma_logpdf(x, p);
    return total;
}

// ---------------------------------------------------------------------------
// Nelder-Mead

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> start,
                             const NelderMeadOptions& opts) {
    const std::size_t dim = start.size();
    auto eval = [&](const std::vector<double>& x) {
        const double v = f(x);
        return std::isnan(v) ? kInf : v;
    };

    std::vector<std::vector<double>> simplex(dim + 1, start);
    for (std::size_t k = 0; k < dim; ++k) simplex[k + 1][k] += opts.initial_step;
    std::vector<double> values(dim + 1);
    for (std::size_t k = 0; k <= dim; ++k) values[k] = eval(simplex[k]);

    std::vector<std::size_t> order(dim + 1);
    std::vector<double> centroid(dim), trial(dim), trial2(dim);
    NelderMeadResult result;

    for (int iter = 0; iter < opts.max_iters; ++iter) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front();
        const std::size_t worst = order.back();
        const std::size_t second = order[dim - 1];
        result.iterations = iter;

        if (std::isfinite(values[worst]) &&
            values[worst] - values[best] <= opts.tol * (1.0 + std::abs(values[best]))) {
            result.converged = true;
            break;
        }

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t k : order) {
            if (k == worst) continue;
            for (std::size_t d = 0; d < dim; ++d) centroid[d] += simplex[k][d];
        }
        for (double& c : centroid) c /= static_cast<double>(dim);

        for (std::size_t d = 0; d < dim; ++d) trial[d] = centroid[d] + (centroid[d] - simplex[worst][d]);
        const double fr = eval(trial);
        if (fr < values[best]) {
            for (std::size_t d = 0; d < dim; ++d) trial2[d] = centroid[d] + 2.0 * (centroid[d] - simplex[worst][d]);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        // Contraction: outside if the reflection helped at all, inside otherwise.
        const bool outside = fr < values[worst];
        for (std::size_t d = 0; d < dim; ++d) {
            trial2[d] = outside ? centroid[d] + 0.5 * (trial[d] - centroid[d])
                                : centroid[d] + 0.5 * (simplex[worst][d] - centroid[d]);
        }
        const double fc = eval(trial2);
        if (fc < (outside ? fr : values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t k = 0; k <= dim; ++k) {
            if (k == best) continue;
            for (std::size_t d = 0; d < dim; ++d) simplex[k][d] = simplex[best][d] + 0.5 * (simplex[k][d] - simplex[best][d]);
            values[k] = eval(simplex[k]);
        }
    }

    const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    if (!result.converged) result.iterations = opts.max_iters;
    return result;
}

// ---------------------------------------------------------------------------
// MLE

namespace {

// Log-likelihood at fixed location with the scale profiled out. For fixed
// (alpha, gamma) the likelihood is maximized by beta^gamma = sum(y^gamma) / (n alpha),
// which leaves a function of (alpha, gamma) only.
// The scale must stay within e^30 of the sample range either way. Without
// this, samples with many ties at the minimum drive the likelihood to
// infinity with a vanishing scale.
constexpr double kLogScaleBound = 30.0;

class LocationProfile {
public:
    LocationProfile(std::span<const double> samples, double mu, double log_range) : mu_(mu), log_range_(log_range) {
        log_y_.reserve(samples.size());
        for (double x : samples) log_y_.push_back(std::log(x - mu));
        sum_log_y_ = std::accumulate(log_y_.begin(), log_y_.end(), 0.0);
        max_log_y_ = *std::max_element(log_y_.begin(), log_y_.end());
    }

    double mu() const { return mu_; }

    double log_beta(double alpha, double gamma) const {
        // log sum exp(gamma * log y), shifted by the largest term
        double acc = 0.0;
        const double shift = gamma * max_log_y_;
        for (double ly : log_y_) acc += std::exp(gamma * ly - shift);
        const double log_t = shift + std::log(acc);
        return (log_t - std::log(static_cast<double>(log_y_.size()) * alpha)) / gamma;
    }

    double log_likelihood(double alpha, double gamma) const {
        const double n = static_cast<double>(log_y_.size());
        const double lb = log_beta(alpha, gamma);
        if (!(std::abs(lb - log_range_) < kLogScaleBound)) return -kInf;
        return n * std::log(gamma) - n * lb - n * std::lgamma(alpha) + (alpha * gamma - 1.0) * (sum_log_y_ - n * lb) -
               n * alpha;
    }

    // Moment-matched gamma start (gamma = 1).
    std::pair<double, double> moment_start() const {
        double mean = 0.0;
        for (double ly : log_y_) mean += std::exp(ly);
        mean /= static_cast<double>(log_y_.size());
        double var = 0.0;
        for (double ly : log_y_) {
            const double d = std::exp(ly) - mean;
            var += d * d;
        }
        var /= static_cast<double>(log_y_.size());
        const double alpha = var > 0.0 ? std::clamp(mean * mean / var, 1e-3, 1e6) : 1.0;
        return {alpha, 1.0};
    }

private:
    double mu_;
    double log_range_;
    std::vector<double> log_y_;
    double sum_log_y_ = 0.0;
    double max_log_y_ = 0.0;
};

struct ShapeFit {
    double alpha = 1.0;
    double gamma = 1.0;
    double log_likelihood = -kInf;
    bool converged = false;
};

constexpr double kLogShapeBound = 12.0;  // keeps alpha, gamma within [e^-12, e^12]

double profile_objective(const LocationProfile& prof, std::span<const double> v) {
    if (std::abs(v[0]) > kLogShapeBound || std::abs(v[1]) > kLogShapeBound) return kInf;
    const double ll = prof.log_likelihood(std::exp(v[0]), std::exp(v[1]));
    return std::isfinite(ll) ? -ll : kInf;
}

ShapeFit fit_shapes(const LocationProfile& prof, std::span<const std::pair<double, double>> starts,
                    const NelderMeadOptions& nm) {
    ShapeFit best;
    for (const auto& [a0, g0] : starts) {
        const auto r = nelder_mead([&](std::span<const double> v) { return profile_objective(prof, v); },
                                   {std::log(a0), std::log(g0)}, nm);
        const double ll = -r.value;
        if (std::isfinite(ll) && ll > best.log_likelihood) {
            best = {std::exp(r.x[0]), std::exp(r.x[1]), ll, r.converged};
        }
    }
    return best;
}

}  // namespace

GenGammaFit fit_gengamma_mle(std::span<const double> samples, const GenGammaFitConfig& config) {
    if (samples.size() < 8) {
        throw FitError("generalized gamma fit needs at least 8 samples, got " + std::to_string(samples.size()));
    }
    for (double x : samples) {
        if (!std::isfinite(x)) throw FitError("generalized gamma fit needs finite samples");
    }
    const auto [min_it, max_it] = std::minmax_element(samples.begin(), samples.end());
    const double lo = *min_it;
    const double range = *max_it - lo;
    if (!(range > 0.0)) throw FitError("no spread: all samples are equal");
    if (config.mu_grid < 2) throw ContractError("mu_grid must be at least 2");

    const double mu_max = lo - 1e-6 * range;
    const double log_range = std::log(range);
    const double span = range + std::abs(lo);
    NelderMeadOptions nm;
    nm.max_iters = config.max_iters;
    nm.tol = config.tol;

    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> log_alpha_dist(std::log(0.2), std::log(10.0));
    std::uniform_real_distribution<double> log_gamma_dist(std::log(0.3), std::log(5.0));

    auto profile_at = [&](double mu, std::span<const std::pair<double, double>> extra) {
        const LocationProfile prof(samples, mu, log_range);
        std::vector<std::pair<double, double>> starts{prof.moment_start()};
        starts.insert(starts.end(), extra.begin(), extra.end());
        return fit_shapes(prof, starts, nm);
    };

    // Grid over mu, from the upper bound downward. Each point also starts from
    // the previous point's optimum.
    std::vector<double> grid(static_cast<std::size_t>(config.mu_grid));
    for (std::size_t k = 0; k < grid.size(); ++k) {
        grid[k] = mu_max - span * static_cast<double>(k) / static_cast<double>(grid.size() - 1);
    }
    std::vector<ShapeFit> fits(grid.size());
    std::size_t best_k = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<std::pair<double, double>> extra;
        for (int r = 0; r < config.restarts; ++r) {
            extra.emplace_back(std::exp(log_alpha_dist(rng)), std::exp(log_gamma_dist(rng)));
        }
        if (k > 0 && std::isfinite(fits[k - 1].log_likelihood)) extra.emplace_back(fits[k - 1].alpha, fits[k - 1].gamma);
        fits[k] = profile_at(grid[k], extra);
        if (fits[k].log_likelihood > fits[best_k].log_likelihood) best_k = k;
    }
    if (!std::isfinite(fits[best_k].log_likelihood)) throw FitError("likelihood is not finite anywhere on the location grid");

    // Golden-section refinement of mu between the neighbours of the best grid point.
    double a = grid[std::min(best_k + 1, grid.size() - 1)];
    double b = grid[best_k == 0 ? 0 : best_k - 1];
    ShapeFit best_fit = fits[best_k];
    double best_mu = grid[best_k];
    auto consider = [&](double mu) {
        const std::pair<double, double> warm{best_fit.alpha, best_fit.gamma};
        const ShapeFit f = profile_at(mu, std::span(&warm, 1));
        if (f.log_likelihood > best_fit.log_likelihood) {
            best_fit = f;
            best_mu = mu;
        }
        return f.log_likelihood;
    };
    if (b > a) {
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = b - ratio * (b - a);
        double d = a + ratio * (b - a);
        double fc = consider(c);
        double fd = consider(d);
        for (int it = 0; it < 40 && (b - a) > 1e-9 * (1.0 + std::abs(best_mu)); ++it) {
            if (fc > fd) {
                b = d;
                d = c;
                fd = fc;
                c = b - ratio * (b - a);
                fc = consider(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + ratio * (b - a);
                fd = consider(d);
            }
        }
    }

    // Joint polish over (log alpha, log gamma, log(mu_max - mu)).
    const double gap0 = std::max(mu_max - best_mu, 1e-6 * range);
    auto joint = [&](std::span<const double> v) {
        if (std::abs(v[0]) > kLogShapeBound || std::abs(v[1]) > kLogShapeBound) return kInf;
        const double mu = mu_max - std::exp(v[2]);
        if (!(mu <= mu_max) || !std::isfinite(mu)) return kInf;
        const LocationProfile prof(samples, mu, log_range);
        const double ll = prof.log_likelihood(std::exp(v[0]), std::exp(v[1]));
        return std::isfinite(ll) ? -ll : kInf;
    };
    const auto polished =
        nelder_mead(joint, {std::log(best_fit.alpha), std::log(best_fit.gamma), std::log(gap0)}, nm);

    GenGammaFit out;
    out.converged = polished.converged;
    double alpha = best_fit.alpha;
    double gamma = best_fit.gamma;
    double mu = best_mu;
    if (std::isfinite(polished.value) && -polished.value > best_fit.log_likelihood) {
        alpha = std::exp(polished.x[0]);
        gamma = std::exp(polished.x[1]);
        mu = mu_max - std::exp(polished.x[2]);
    }
    const LocationProfile prof(samples, mu, log_range);
    out.params = {alpha, std::exp(prof.log_beta(alpha, gamma)), gamma, mu};
    if (!(out.params.beta > 0.0) || !std::isfinite(out.params.beta)) throw FitError("fitted scale is degenerate");
    out.log_likelihood = gengamma_log_likelihood(samples, out.params);
    if (!std::isfinite(out.log_likelihood)) throw FitError("fitted log-likelihood is not finite");
    out.threshold_T = gengamma_quantile(out.params, config.quantile);
    return out;
}

}  // namespace reseq
