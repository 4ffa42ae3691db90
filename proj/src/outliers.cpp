#include "reseq/outliers.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

#include "reseq/json_util.hpp"

namespace reseq {

KnnStatistic knn_mean_distance(const DistanceMatrix& m, int k) {
    const std::size_t n = m.size();
    if (k < 1) throw ContractError("k must be at least 1");
    if (n <= static_cast<std::size_t>(k)) {
        throw ContractError("k-NN statistic needs more than k frames (n=" + std::to_string(n) + ", k=" +
                            std::to_string(k) + "); use k <= " + std::to_string(n == 0 ? 0 : n - 1));
    }
    KnnStatistic out;
    out.k = k;
    out.values.resize(n);
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < n; ++i) {
        others.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) others.push_back(j);
        }
        const auto row = m.row(i);
        std::partial_sort(others.begin(), others.begin() + k, others.end(), [&](std::size_t a, std::size_t b) {
            return row[a] != row[b] ? row[a] < row[b] : a < b;
        });
        double sum = 0.0;
        for (int j = 0; j < k; ++j) sum += row[others[j]];
        out.values[i] = sum / k;
    }
    return out;
}

PruneOutcome prune_outliers(const DistanceMatrix& m, const PruneConfig& config) {
    if (!(config.q > 0.0 && config.q < 1.0)) throw ContractError("prune quantile must lie in (0,1)");
    const KnnStatistic stats = knn_mean_distance(m, config.k);

    GenGammaFitConfig fit_config = config.fit;
    fit_config.quantile = config.q;

    PruneReport report;
    report.k = config.k;
    report.q = config.q;
    report.frame_ids = m.frame_ids();
    report.stats = stats.values;
    report.fit = fit_gengamma_mle(stats.values, fit_config);

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (stats.values[i] > report.fit.threshold_T) {
            report.removed_ids.push_back(m.frame_ids()[i]);
        } else {
            report.kept_ids.push_back(m.frame_ids()[i]);
            keep.push_back(i);
        }
    }
    if (keep.size() < 2) {
        throw PruneError("outlier pruning would leave " + std::to_string(keep.size()) + " frame(s); at least 2 required",
                         m, std::move(report));
    }
    PruneOutcome out{m.submatrix(keep), std::move(report)};
    out.matrix.validate();
    return out;
}

std::string prune_report_to_json(const PruneReport& report) {
    nlohmann::ordered_json stats = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < report.frame_ids.size(); ++i) stats[report.frame_ids[i]] = report.stats[i];
    const auto& p = report.fit.params;
    nlohmann::ordered_json j = {
        {"removed", report.removed_ids},
        {"kept", report.kept_ids},
        {"stats", stats},
        {"fit",
         {{"alpha", p.alpha},
          {"beta", p.beta},
          {"gamma", p.gamma},
          {"mu", p.mu},
          {"loglik", report.fit.log_likelihood},
          {"T", report.fit.threshold_T}}},
        {"k", report.k},
        {"q", report.q},
        {"converged", report.fit.converged},
    };
    return dump_json(j);
}

}  // namespace reseq
