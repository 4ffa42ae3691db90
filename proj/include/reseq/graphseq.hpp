#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "reseq/frameset.hpp"

namespace reseq {

// Complete weighted graph over the frames of a distance matrix. Shares the
// matrix; weights are read through, never copied or pruned.
class CompleteGraph {
public:
    explicit CompleteGraph(std::shared_ptr<const DistanceMatrix> matrix);

    std::size_t node_count() const { return matrix_->size(); }
    std::size_t edge_count() const { return node_count() * (node_count() - 1) / 2; }
    double weight(std::size_t u, std::size_t v) const { return (*matrix_)(u, v); }
    const std::string& id(std::size_t u) const { return matrix_->frame_ids()[u]; }
    std::size_t node(const std::string& id) const { return matrix_->index_of(id); }
    const DistanceMatrix& matrix() const { return *matrix_; }
    std::shared_ptr<const DistanceMatrix> shared_matrix() const { return matrix_; }

private:
    std::shared_ptr<const DistanceMatrix> matrix_;
};

// ContractError when n < 2.
CompleteGraph build_graph(DistanceMatrix m);
CompleteGraph build_graph(std::shared_ptr<const DistanceMatrix> m);

struct WeightedEdge {
    std::size_t u = 0;  // u < v
    std::size_t v = 0;
    double weight = 0.0;
    bool operator==(const WeightedEdge&) const = default;
};

class MstTree {
public:
    MstTree(std::size_t n, std::vector<WeightedEdge> edges, std::vector<std::string> ids);

    std::size_t node_count() const { return adjacency_.size(); }
    const std::vector<WeightedEdge>& edges() const { return edges_; }
    const std::vector<std::vector<std::size_t>>& adjacency() const { return adjacency_; }
    const std::vector<std::string>& ids() const { return ids_; }
    double total_weight() const;

    // Nodes on the unique tree path from u to v, both ends included.
    std::vector<std::size_t> path(std::size_t u, std::size_t v) const;
    std::size_t node(const std::string& id) const;

private:
    std::vector<WeightedEdge> edges_;
    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<std::string> ids_;
    // Rooted at node 0.
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> depth_;
};

// Kruskal over all n(n-1)/2 edges sorted by (weight, u, v).
MstTree minimum_spanning_tree(const CompleteGraph& g);

enum class SequenceKind { path, cycle, keyframe };
std::string_view sequence_kind_name(SequenceKind k);

struct SequenceConstraints {
    std::optional<std::string> start;
    std::optional<std::string> end;
    std::vector<std::string> keyframes;
};

struct SequenceResult {
    SequenceKind kind = SequenceKind::path;
    std::vector<std::string> order;
    double total_cost = 0.0;
    std::string solver;
    std::optional<std::uint64_t> seed;
    SequenceConstraints constraints;
};

struct SolverConfig {
    std::uint64_t seed = 0;
    std::size_t exact_threshold = 12;  // Held-Karp when n <= this
    int two_opt_passes = 1000;          // cap on local-search sweeps per start (0 = no local search)
    int random_restarts = 4;            // seeded random starting orders, on top of nearest-neighbour starts
    std::size_t max_nn_starts = 64;     // nearest-neighbour constructions that get local search
    // Records the tour cost after every accepted local-search move.
    std::vector<double>* trace = nullptr;
};

// Sum of weights between consecutive nodes (plus the closing edge when closed).
double sequence_cost(const CompleteGraph& g, std::span<const std::size_t> order, bool closed);

// Shortest Hamiltonian path with optional fixed first and/or last node.
SequenceResult shortest_hamiltonian_path(const CompleteGraph& g, std::optional<std::string> start,
                                         std::optional<std::string> end, const SolverConfig& config = {});
// Shortest Hamiltonian cycle, reported in canonical rotation/orientation.
SequenceResult shortest_hamiltonian_cycle(const CompleteGraph& g, const SolverConfig& config = {});

// Canonical cycle order: the lexicographically smallest id first, then its
// cheaper neighbour (smaller id on equal weight).
std::vector<std::size_t> canonical_cycle(const CompleteGraph& g, std::span<const std::size_t> cycle);

// Tree paths between consecutive keyframes, concatenated with each junction
// keyframe emitted once.
SequenceResult keyframe_path(const MstTree& tree, const CompleteGraph& g, std::span<const std::string> keyframes);

// Index-level solvers, exposed for tests and benchmarks.
struct IndexTour {
    std::vector<std::size_t> order;
    double cost = 0.0;
};
IndexTour held_karp_path(const CompleteGraph& g, std::optional<std::size_t> start, std::optional<std::size_t> end);
IndexTour held_karp_cycle(const CompleteGraph& g);
IndexTour heuristic_path(const CompleteGraph& g, std::optional<std::size_t> start, std::optional<std::size_t> end,
                         const SolverConfig& config);
IndexTour heuristic_cycle(const CompleteGraph& g, const SolverConfig& config);

// {"kind","order","total_cost","solver","seed","constraints":{start,end,keyframes}}
std::string sequence_to_json(const SequenceResult& r);
SequenceResult sequence_from_json(std::string_view text);

}  // namespace reseq
