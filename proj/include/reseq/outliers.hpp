#pragma once

#include <string>
#include <vector>

#include "reseq/errors.hpp"
#include "reseq/frameset.hpp"
#include "reseq/gengamma.hpp"

namespace reseq {

// Mean distance from each frame to its k nearest other frames.
struct KnnStatistic {
    std::vector<double> values;  // one per matrix row
    int k = 0;
};

// Nearest-neighbour ties are broken by ascending frame index. ContractError
// when k < 1 or n <= k.
KnnStatistic knn_mean_distance(const DistanceMatrix& m, int k);

struct PruneReport {
    std::vector<std::string> removed_ids;
    std::vector<std::string> kept_ids;
    std::vector<std::string> frame_ids;  // original order, aligned with stats
    std::vector<double> stats;
    int k = 0;
    double q = 0.9;
    GenGammaFit fit;
};

struct PruneConfig {
    int k = 5;
    double q = 0.9;
    GenGammaFitConfig fit;  // fit.quantile is overridden by q
};

struct PruneOutcome {
    DistanceMatrix matrix;
    PruneReport report;
};

// Pruning would leave fewer than two frames. Carries the untouched input.
class PruneError : public Error {
public:
    PruneError(const std::string& what, DistanceMatrix original, PruneReport report)
        : Error(what), original_(std::move(original)), report_(std::move(report)) {}
    const DistanceMatrix& original() const noexcept { return original_; }
    const PruneReport& report() const noexcept { return report_; }
    const char* kind() const noexcept override { return "prune"; }

private:
    DistanceMatrix original_;
    PruneReport report_;
};

// One pass: k-NN statistic, generalized gamma fit, drop every frame whose
// statistic exceeds the fitted q-quantile. Kept frames stay in their original
// relative order. FitError propagates unchanged.
PruneOutcome prune_outliers(const DistanceMatrix& m, const PruneConfig& config = {});

// {"removed":[...], "kept":[...], "stats":{id: X}, "fit":{alpha,beta,gamma,mu,loglik,T}}
std::string prune_report_to_json(const PruneReport& report);

}  // namespace reseq
