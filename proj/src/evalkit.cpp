#include "reseq/evalkit.hpp"

#include <cstdio>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "reseq/errors.hpp"
#include "reseq/json_util.hpp"
#include "reseq/parallel.hpp"

namespace reseq {

namespace {

std::vector<std::size_t> ranks_in_ground(std::span<const std::string> ground, std::span<const std::string> candidate) {
    if (ground.size() < 2) throw ContractError("Kendall tau needs at least 2 items");
    if (candidate.size() != ground.size()) throw ContractError("candidate is not a permutation of the ground truth");
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < ground.size(); ++i) {
        if (!pos.emplace(ground[i], i).second) throw ContractError("ground truth repeats id '" + ground[i] + "'");
    }
    std::vector<std::size_t> ranks;
    ranks.reserve(candidate.size());
    std::vector<bool> used(ground.size(), false);
    for (const auto& id : candidate) {
        const auto it = pos.find(id);
        if (it == pos.end() || used[it->second]) {
            throw ContractError("candidate is not a permutation of the ground truth (at '" + id + "')");
        }
        used[it->second] = true;
        ranks.push_back(it->second);
    }
    return ranks;
}

std::uint64_t merge_count(std::vector<std::size_t>& v, std::vector<std::size_t>& buf, std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    const std::size_t mid = lo + (hi - lo) / 2;
    std::uint64_t inv = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
    std::size_t a = lo;
    std::size_t b = mid;
    std::size_t k = lo;
    while (a < mid && b < hi) {
        if (v[b] < v[a]) {
            inv += mid - a;
            buf[k++] = v[b++];
        } else {
            buf[k++] = v[a++];
        }
    }
    while (a < mid) buf[k++] = v[a++];
    while (b < hi) buf[k++] = v[b++];
    std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
              v.begin() + static_cast<std::ptrdiff_t>(lo));
    return inv;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::uint64_t count_discordant_pairs(std::span<const std::string> ground, std::span<const std::string> candidate) {
    auto ranks = ranks_in_ground(ground, candidate);
    std::vector<std::size_t> buf(ranks.size());
    return merge_count(ranks, buf, 0, ranks.size());
}

double kendall_tau_normalized(std::span<const std::string> ground, std::span<const std::string> candidate) {
    const std::uint64_t discordant = count_discordant_pairs(ground, candidate);
    const double m = static_cast<double>(ground.size());
    return 2.0 * static_cast<double>(discordant) / (m * (m - 1.0));
}

ReconstructionCase run_reconstruction(const EvalCase& input, Metric metric, const ReconstructionConfig& config) {
    const bool from_features = metric != Metric::l2_image;
    if (from_features && !input.features) {
        throw ContractError("case '" + input.name + "': metric " + std::string(metric_name(metric)) +
                            " needs a feature archive");
    }
    const std::vector<std::string> ground = from_features ? input.features->frame_ids() : input.frames.ids();
    if (from_features && input.frames.size() > 0 && input.frames.ids() != ground) {
        throw ContractError("case '" + input.name + "': frame ids and feature archive ids disagree");
    }
    const std::size_t m = ground.size();
    if (m < 3) throw ContractError("case '" + input.name + "': reconstruction needs at least 3 frames");

    std::vector<std::size_t> perm(m);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(config.shuffle_seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    DistanceMatrix matrix;
    if (from_features) {
        std::vector<std::string> ids;
        for (std::size_t k : perm) ids.push_back(ground[k]);
        FeatureArchive shuffled(std::move(ids), input.features->layers(), input.features->normalized());
        for (std::size_t k = 0; k < m; ++k) {
            const auto src = input.features->frame_values(perm[k]);
            std::copy(src.begin(), src.end(), shuffled.data().begin() + static_cast<std::ptrdiff_t>(k * shuffled.frame_stride()));
        }
        const CalibrationWeights* w = input.weights ? &*input.weights : nullptr;
        matrix = compute_distance_matrix(shuffled, metric, w, config.matrix);
    } else {
        FrameCollection shuffled;
        shuffled.source_kind = input.frames.source_kind;
        for (std::size_t k : perm) shuffled.frames.push_back(input.frames.frames[k]);
        matrix = compute_distance_matrix(shuffled, metric, config.matrix);
    }

    const CompleteGraph g = build_graph(std::move(matrix));
    ReconstructionCase out;
    out.name = input.name;
    out.ground_truth_order = ground;
    out.metric = metric;
    out.result = shortest_hamiltonian_path(g, ground.front(), ground.back(), config.solver);
    out.kendall_tau = kendall_tau_normalized(ground, out.result.order);
    return out;
}

EvalReport run_suite(std::span<const EvalCase> cases, std::span<const Metric> metrics,
                     const ReconstructionConfig& config, std::vector<std::string> excluded) {
    if (cases.empty()) throw ContractError("evaluation suite needs at least one case");
    if (metrics.empty()) throw ContractError("evaluation suite needs at least one metric");

    const std::size_t tasks = cases.size() * metrics.size();
    std::vector<std::optional<ReconstructionCase>> done(tasks);
    std::vector<std::string> errors(tasks);
    parallel_for(tasks, config.matrix.threads, [&](std::size_t t) {
        const auto& c = cases[t / metrics.size()];
        const Metric metric = metrics[t % metrics.size()];
        ReconstructionConfig local = config;
        local.matrix.threads = 1;
        try {
            done[t] = run_reconstruction(c, metric, local);
        } catch (const std::exception& e) {
            errors[t] = e.what();
        }
    });

    EvalReport report;
    report.excluded = std::move(excluded);
    for (Metric metric : metrics) report.means.push_back({metric, 0.0, 0});
    for (std::size_t t = 0; t < tasks; ++t) {
        const std::size_t mi = t % metrics.size();
        if (done[t]) {
            report.means[mi].mean_tau += done[t]->kendall_tau;
            ++report.means[mi].cases;
            report.cases.push_back(std::move(*done[t]));
        } else {
            report.failures.push_back({cases[t / metrics.size()].name, metrics[mi], errors[t]});
        }
    }
    for (auto& mm : report.means) {
        mm.mean_tau = mm.cases > 0 ? mm.mean_tau / static_cast<double>(mm.cases) : std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

std::string eval_report_csv(const EvalReport& report) {
    std::string out = "case,metric,m,tau,solver,seed\n";
    for (const auto& c : report.cases) {
        out += c.name + "," + std::string(metric_name(c.metric)) + "," + std::to_string(c.ground_truth_order.size()) +
               "," + format_double(c.kendall_tau) + "," + c.result.solver + "," +
               (c.result.seed ? std::to_string(*c.result.seed) : std::string()) + "\n";
    }
    return out;
}

std::string eval_report_json(const EvalReport& report) {
    using nlohmann::ordered_json;
    ordered_json cases = ordered_json::array();
    for (const auto& c : report.cases) {
        cases.push_back({{"case", c.name},
                         {"metric", metric_name(c.metric)},
                         {"m", c.ground_truth_order.size()},
                         {"tau", c.kendall_tau},
                         {"ground_truth", c.ground_truth_order},
                         {"order", c.result.order},
                         {"total_cost", c.result.total_cost},
                         {"solver", c.result.solver},
                         {"seed", c.result.seed ? ordered_json(*c.result.seed) : ordered_json(nullptr)},
                         {"ground_truth_endpoints", c.uses_ground_truth_endpoints}});
    }
    ordered_json means = ordered_json::object();
    for (const auto& m : report.means) {
        means[std::string(metric_name(m.metric))] = {{"mean_tau", m.mean_tau}, {"cases", m.cases}};
    }
    ordered_json failures = ordered_json::array();
    for (const auto& f : report.failures) {
        failures.push_back({{"case", f.name}, {"metric", metric_name(f.metric)}, {"error", f.error}});
    }
    ordered_json j = {{"cases", cases}, {"means", means}, {"failures", failures}, {"excluded", report.excluded}};
    return dump_json(j);
}

}  // namespace reseq
