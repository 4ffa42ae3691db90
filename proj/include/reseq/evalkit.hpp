#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reseq/frameset.hpp"
#include "reseq/graphseq.hpp"
#include "reseq/metrics.hpp"

namespace reseq {

// Fraction of discordant pairs between two orderings of the same ids:
// 0 for identical order, 1 for reversed. Counted by merge-sort inversions.
// ContractError unless candidate is a permutation of ground with m >= 2.
double kendall_tau_normalized(std::span<const std::string> ground, std::span<const std::string> candidate);
std::uint64_t count_discordant_pairs(std::span<const std::string> ground, std::span<const std::string> candidate);

// One ordered animation to reconstruct. Ground truth is the frame order.
// features, when present, must list the same ids in the same order.
struct EvalCase {
    std::string name;
    FrameCollection frames;
    std::optional<FeatureArchive> features;
    std::optional<CalibrationWeights> weights;
};

struct ReconstructionConfig {
    std::uint64_t shuffle_seed = 0;
    SolverConfig solver;
    MatrixOptions matrix;
};

struct ReconstructionCase {
    std::string name;
    std::vector<std::string> ground_truth_order;
    Metric metric = Metric::l2_image;
    SequenceResult result;
    double kendall_tau = 0.0;
    // Always true: the solve pins the ground-truth first and last frames.
    bool uses_ground_truth_endpoints = true;
};

// Shuffles the frames with shuffle_seed, builds the metric's distance matrix,
// solves the Hamiltonian path from the ground-truth first frame to the last
// frame, and scores it. No outlier pruning. ContractError for m < 3.
ReconstructionCase run_reconstruction(const EvalCase& input, Metric metric, const ReconstructionConfig& config = {});

struct CaseFailure {
    std::string name;
    Metric metric = Metric::l2_image;
    std::string error;
};

struct MetricMean {
    Metric metric = Metric::l2_image;
    double mean_tau = 0.0;
    std::size_t cases = 0;
};

struct EvalReport {
    std::vector<ReconstructionCase> cases;  // case-major, metric-minor
    std::vector<CaseFailure> failures;
    std::vector<MetricMean> means;          // in requested metric order
    std::vector<std::string> excluded;      // case names left out by the caller, recorded verbatim
};

// Cross product of cases and metrics. A failing pair is recorded in failures
// and the suite continues. Cases may run in parallel; the report order does not
// depend on scheduling.
EvalReport run_suite(std::span<const EvalCase> cases, std::span<const Metric> metrics,
                     const ReconstructionConfig& config = {}, std::vector<std::string> excluded = {});

// CSV columns: case,metric,m,tau,solver,seed
std::string eval_report_csv(const EvalReport& report);
std::string eval_report_json(const EvalReport& report);

}  // namespace reseq
