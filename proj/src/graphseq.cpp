#include "reseq/graphseq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "reseq/errors.hpp"
#include "reseq/json_util.hpp"

namespace reseq {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kHeldKarpLimit = 16;
}  // namespace

// ---------------------------------------------------------------------------
// Graph and tree

CompleteGraph::CompleteGraph(std::shared_ptr<const DistanceMatrix> matrix) : matrix_(std::move(matrix)) {
    if (!matrix_) throw ContractError("graph needs a distance matrix");
}

CompleteGraph build_graph(std::shared_ptr<const DistanceMatrix> m) {
    if (!m || m->size() < 2) throw ContractError("a sequencing graph needs at least 2 frames");
    m->validate();
    return CompleteGraph(std::move(m));
}

CompleteGraph build_graph(DistanceMatrix m) { return build_graph(std::make_shared<const DistanceMatrix>(std::move(m))); }

MstTree::MstTree(std::size_t n, std::vector<WeightedEdge> edges, std::vector<std::string> ids)
    : edges_(std::move(edges)), adjacency_(n), ids_(std::move(ids)), parent_(n, kNone), depth_(n, 0) {
    if (edges_.size() + 1 != n) throw ContractError("a spanning tree over n nodes has n-1 edges");
    for (const auto& e : edges_) {
        adjacency_[e.u].push_back(e.v);
        adjacency_[e.v].push_back(e.u);
    }
    for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

    std::vector<std::size_t> stack{0};
    std::vector<bool> seen(n, false);
    seen[0] = true;
    std::size_t visited = 1;
    while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (std::size_t v : adjacency_[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            ++visited;
            parent_[v] = u;
            depth_[v] = depth_[u] + 1;
            stack.push_back(v);
        }
    }
    if (visited != n) throw ContractError("edge list does not span all nodes");
}

double MstTree::total_weight() const {
    double total = 0.0;
    for (const auto& e : edges_) total += e.weight;
    return total;
}

std::size_t MstTree::node(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i] == id) return i;
    }
    throw ContractError("unknown frame id '" + id + "'");
}

std::vector<std::size_t> MstTree::path(std::size_t u, std::size_t v) const {
    if (u >= node_count() || v >= node_count()) throw ContractError("tree node out of range");
    std::vector<std::size_t> head{u};
    std::vector<std::size_t> tail{v};
    std::size_t a = u;
    std::size_t b = v;
    while (depth_[a] > depth_[b]) head.push_back(a = parent_[a]);
    while (depth_[b] > depth_[a]) tail.push_back(b = parent_[b]);
    while (a != b) {
        head.push_back(a = parent_[a]);
        tail.push_back(b = parent_[b]);
    }
    // a == b is the meeting node, present at the back of both lists.
    tail.pop_back();
    head.insert(head.end(), tail.rbegin(), tail.rend());
    return head;
}

MstTree minimum_spanning_tree(const CompleteGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<WeightedEdge> all;
    all.reserve(g.edge_count());
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = u + 1; v < n; ++v) all.push_back({u, v, g.weight(u, v)});
    }
    std::sort(all.begin(), all.end(), [](const WeightedEdge& a, const WeightedEdge& b) {
        if (a.weight != b.weight) return a.weight < b.weight;
        if (a.u != b.u) return a.u < b.u;
        return a.v < b.v;
    });

    std::vector<std::size_t> root(n);
    std::vector<std::size_t> rank(n, 0);
    std::iota(root.begin(), root.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (root[x] != x) {
            root[x] = root[root[x]];
            x = root[x];
        }
        return x;
    };

    std::vector<WeightedEdge> tree;
    tree.reserve(n - 1);
    for (const auto& e : all) {
        std::size_t a = find(e.u);
        std::size_t b = find(e.v);
        if (a == b) continue;
        if (rank[a] < rank[b]) std::swap(a, b);
        root[b] = a;
        if (rank[a] == rank[b]) ++rank[a];
        tree.push_back(e);
        if (tree.size() + 1 == n) break;
    }
    return MstTree(n, std::move(tree), g.matrix().frame_ids());
}

// ---------------------------------------------------------------------------
// Costs

std::string_view sequence_kind_name(SequenceKind k) {
    switch (k) {
        case SequenceKind::path: return "path";
        case SequenceKind::cycle: return "cycle";
        case SequenceKind::keyframe: return "keyframe";
    }
    return "unknown";
}

double sequence_cost(const CompleteGraph& g, std::span<const std::size_t> order, bool closed) {
    double total = 0.0;
    for (std::size_t i = 1; i < order.size(); ++i) total += g.weight(order[i - 1], order[i]);
    if (closed && order.size() > 1) total += g.weight(order.back(), order.front());
    return total;
}

// ---------------------------------------------------------------------------
// Held-Karp

IndexTour held_karp_path(const CompleteGraph& g, std::optional<std::size_t> start, std::optional<std::size_t> end) {
    const std::size_t n = g.node_count();
    if (n > kHeldKarpLimit) throw ContractError("exact solver is limited to " + std::to_string(kHeldKarpLimit) + " nodes");
    if (start && end && *start == *end) throw ContractError("path start and end must differ");
    const std::size_t full = (std::size_t{1} << n) - 1;
    std::vector<double> dp((full + 1) * n, kInf);
    std::vector<std::uint8_t> from((full + 1) * n, 0xFF);
    auto at = [n](std::size_t mask, std::size_t j) { return mask * n + j; };

    for (std::size_t j = 0; j < n; ++j) {
        if (start && j != *start) continue;
        if (!start && end && j == *end) continue;
        dp[at(std::size_t{1} << j, j)] = 0.0;
    }
    for (std::size_t mask = 1; mask <= full; ++mask) {
        for (std::size_t j = 0; j < n; ++j) {
            const double base = dp[at(mask, j)];
            if (base == kInf) continue;
            if (end && j == *end) continue;  // the end node has no successor
            for (std::size_t k = 0; k < n; ++k) {
                if (mask & (std::size_t{1} << k)) continue;
                const std::size_t next = mask | (std::size_t{1} << k);
                if (end && k == *end && next != full) continue;
                const double cand = base + g.weight(j, k);
                if (cand < dp[at(next, k)]) {
                    dp[at(next, k)] = cand;
                    from[at(next, k)] = static_cast<std::uint8_t>(j);
                }
            }
        }
    }

    std::size_t last = kNone;
    double best = kInf;
    for (std::size_t j = 0; j < n; ++j) {
        if (end && j != *end) continue;
        if (dp[at(full, j)] < best) {
            best = dp[at(full, j)];
            last = j;
        }
    }
    IndexTour out;
    std::size_t mask = full;
    std::size_t cur = last;
    while (cur != kNone) {
        out.order.push_back(cur);
        const std::uint8_t prev = from[at(mask, cur)];
        mask &= ~(std::size_t{1} << cur);
        cur = prev == 0xFF ? kNone : prev;
    }
    std::reverse(out.order.begin(), out.order.end());
    out.cost = sequence_cost(g, out.order, false);
    return out;
}

IndexTour held_karp_cycle(const CompleteGraph& g) {
    const std::size_t n = g.node_count();
    if (n < 3) throw ContractError("a Hamiltonian cycle needs at least 3 frames");
    if (n > kHeldKarpLimit) throw ContractError("exact solver is limited to " + std::to_string(kHeldKarpLimit) + " nodes");
    // Tours fixed to start at node 0; node 0 is outside the subset masks.
    const std::size_t m = n - 1;
    const std::size_t full = (std::size_t{1} << m) - 1;
    std::vector<double> dp((full + 1) * m, kInf);
    std::vector<std::uint8_t> from((full + 1) * m, 0xFF);
    auto at = [m](std::size_t mask, std::size_t j) { return mask * m + j; };

    for (std::size_t j = 0; j < m; ++j) dp[at(std::size_t{1} << j, j)] = g.weight(0, j + 1);
    for (std::size_t mask = 1; mask <= full; ++mask) {
        for (std::size_t j = 0; j < m; ++j) {
            const double base = dp[at(mask, j)];
            if (base == kInf) continue;
            for (std::size_t k = 0; k < m; ++k) {
                if (mask & (std::size_t{1} << k)) continue;
                const std::size_t next = mask | (std::size_t{1} << k);
                const double cand = base + g.weight(j + 1, k + 1);
                if (cand < dp[at(next, k)]) {
                    dp[at(next, k)] = cand;
                    from[at(next, k)] = static_cast<std::uint8_t>(j);
                }
            }
        }
    }
    std::size_t last = kNone;
    double best = kInf;
    for (std::size_t j = 0; j < m; ++j) {
        const double cand = dp[at(full, j)] + g.weight(j + 1, 0);
        if (cand < best) {
            best = cand;
            last = j;
        }
    }
    IndexTour out;
    std::size_t mask = full;
    std::size_t cur = last;
    while (cur != kNone) {
        out.order.push_back(cur + 1);
        const std::uint8_t prev = from[at(mask, cur)];
        mask &= ~(std::size_t{1} << cur);
        cur = prev == 0xFF ? kNone : prev;
    }
    out.order.push_back(0);
    std::reverse(out.order.begin(), out.order.end());
    out.cost = sequence_cost(g, out.order, true);
    return out;
}

// ---------------------------------------------------------------------------
// Local search

namespace {

// Open tour with optionally pinned first/last positions. A cycle is handled
// as a path from node s back to s with both ends pinned.
class LocalSearch {
public:
    LocalSearch(const CompleteGraph& g, bool fixed_first, bool fixed_last, const SolverConfig& config)
        : g_(g), fixed_first_(fixed_first), fixed_last_(fixed_last), config_(config) {}

    void run(std::vector<std::size_t>& p) {
        if (p.size() < 3) return;
        for (int pass = 0; pass < config_.two_opt_passes; ++pass) {
            eps_ = 1e-12 * (1.0 + std::abs(cost(p)));
            const bool a = two_opt(p);
            const bool b = or_opt(p);
            if (!a && !b) break;
        }
    }

    double cost(std::span<const std::size_t> p) const { return sequence_cost(g_, p, false); }

private:
    double e(std::size_t a, std::size_t b) const { return (a == kNone || b == kNone) ? 0.0 : g_.weight(a, b); }

    void record(const std::vector<std::size_t>& p) {
        if (config_.trace) config_.trace->push_back(cost(p));
    }

    bool two_opt(std::vector<std::size_t>& p) {
        const std::size_t n = p.size();
        const std::size_t i_lo = fixed_first_ ? 1 : 0;
        const std::size_t j_hi = fixed_last_ ? n - 2 : n - 1;
        bool any = false;
        for (std::size_t i = i_lo; i < j_hi; ++i) {
            for (std::size_t j = i + 1; j <= j_hi; ++j) {
                const std::size_t a = i > 0 ? p[i - 1] : kNone;
                const std::size_t b = j + 1 < n ? p[j + 1] : kNone;
                if (a == kNone && b == kNone) continue;
                const double delta = e(a, p[j]) + e(p[i], b) - e(a, p[i]) - e(p[j], b);
                if (delta < -eps_) {
                    std::reverse(p.begin() + static_cast<std::ptrdiff_t>(i), p.begin() + static_cast<std::ptrdiff_t>(j) + 1);
                    record(p);
                    any = true;
                }
            }
        }
        return any;
    }

    bool or_opt(std::vector<std::size_t>& p) {
        const std::size_t n = p.size();
        bool any = false;
        for (std::size_t len = 1; len <= 3 && len + 1 < n; ++len) {
            for (std::size_t i = fixed_first_ ? 1 : 0; i + len <= n; ++i) {
                if (fixed_last_ && i + len - 1 >= n - 1) break;
                if (try_move_segment(p, i, len)) any = true;
            }
        }
        return any;
    }

    bool try_move_segment(std::vector<std::size_t>& p, std::size_t i, std::size_t len) {
        const std::size_t n = p.size();
        const std::size_t first = p[i];
        const std::size_t last = p[i + len - 1];
        const std::size_t prev = i > 0 ? p[i - 1] : kNone;
        const std::size_t next = i + len < n ? p[i + len] : kNone;
        const double gain = e(prev, first) + e(last, next) - e(prev, next);
        const std::size_t rest = n - len;
        auto rest_at = [&](std::size_t q) { return q < i ? p[q] : p[q + len]; };

        // Insertion slot s sits between rest[s-1] and rest[s]; s == i is the
        // segment's current place.
        const std::size_t s_lo = fixed_first_ ? 1 : 0;
        const std::size_t s_hi = fixed_last_ ? rest - 1 : rest;
        for (std::size_t s = s_lo; s <= s_hi; ++s) {
            if (s == i) continue;
            const std::size_t a = s > 0 ? rest_at(s - 1) : kNone;
            const std::size_t b = s < rest ? rest_at(s) : kNone;
            const double base = e(a, b);
            const double fwd = e(a, first) + e(last, b) - base - gain;
            const double rev = len > 1 ? e(a, last) + e(first, b) - base - gain : kInf;
            if (fwd >= -eps_ && rev >= -eps_) continue;
            const bool reversed = rev < fwd;

            std::vector<std::size_t> seg(p.begin() + static_cast<std::ptrdiff_t>(i),
                                         p.begin() + static_cast<std::ptrdiff_t>(i + len));
            if (reversed) std::reverse(seg.begin(), seg.end());
            std::vector<std::size_t> out;
            out.reserve(n);
            for (std::size_t q = 0; q < rest; ++q) {
                if (q == s) out.insert(out.end(), seg.begin(), seg.end());
                out.push_back(rest_at(q));
            }
            if (s == rest) out.insert(out.end(), seg.begin(), seg.end());
            p.swap(out);
            record(p);
            return true;
        }
        return false;
    }

    const CompleteGraph& g_;
    bool fixed_first_;
    bool fixed_last_;
    const SolverConfig& config_;
    double eps_ = 0.0;
};

// Greedy nearest neighbour from `from`, never picking `hold` until it is the
// only node left.
std::vector<std::size_t> nearest_neighbour(const CompleteGraph& g, std::size_t from, std::size_t hold) {
    const std::size_t n = g.node_count();
    std::vector<bool> used(n, false);
    std::vector<std::size_t> p{from};
    used[from] = true;
    while (p.size() < n) {
        std::size_t best = kNone;
        double best_w = kInf;
        const std::size_t cur = p.back();
        for (std::size_t k = 0; k < n; ++k) {
            if (used[k] || k == hold) continue;
            const double w = g.weight(cur, k);
            if (w < best_w) {
                best_w = w;
                best = k;
            }
        }
        if (best == kNone) best = hold;
        used[best] = true;
        p.push_back(best);
    }
    return p;
}

struct Candidate {
    std::vector<std::size_t> order;
    double cost;
};

// Picks the lowest-cost candidate; earlier candidates win ties.
Candidate best_of(std::vector<Candidate>& cands) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < cands.size(); ++k) {
        if (cands[k].cost < cands[best].cost) best = k;
    }
    return std::move(cands[best]);
}

// Keeps the `limit` cheapest constructions, stable on ties.
void keep_cheapest(std::vector<Candidate>& cands, std::size_t limit) {
    if (cands.size() <= limit) return;
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
    cands.resize(limit);
}

}  // namespace

IndexTour heuristic_path(const CompleteGraph& g, std::optional<std::size_t> start, std::optional<std::size_t> end,
                         const SolverConfig& config) {
    const std::size_t n = g.node_count();
    if (start && end && *start == *end) throw ContractError("path start and end must differ");
    const std::size_t hold = end.value_or(kNone);

    std::vector<Candidate> cands;
    for (std::size_t s = 0; s < n; ++s) {
        if (start && s != *start) continue;
        if (!start && s == hold) continue;
        auto p = nearest_neighbour(g, s, hold);
        const double c = sequence_cost(g, p, false);
        cands.push_back({std::move(p), c});
    }
    keep_cheapest(cands, std::max<std::size_t>(1, config.max_nn_starts));

    std::mt19937_64 rng(config.seed);
    for (int r = 0; r < config.random_restarts; ++r) {
        std::vector<std::size_t> free_nodes;
        for (std::size_t k = 0; k < n; ++k) {
            if ((start && k == *start) || k == hold) continue;
            free_nodes.push_back(k);
        }
        std::shuffle(free_nodes.begin(), free_nodes.end(), rng);
        std::vector<std::size_t> p;
        if (start) p.push_back(*start);
        p.insert(p.end(), free_nodes.begin(), free_nodes.end());
        if (end) p.push_back(*end);
        const double c = sequence_cost(g, p, false);
        cands.push_back({std::move(p), c});
    }

    LocalSearch ls(g, start.has_value(), end.has_value(), config);
    for (auto& c : cands) {
        ls.run(c.order);
        c.cost = sequence_cost(g, c.order, false);
    }
    Candidate best = best_of(cands);
    return {std::move(best.order), best.cost};
}

IndexTour heuristic_cycle(const CompleteGraph& g, const SolverConfig& config) {
    const std::size_t n = g.node_count();
    if (n < 3) throw ContractError("a Hamiltonian cycle needs at least 3 frames");

    // Closed form: p[0] == p[n], both pinned.
    std::vector<Candidate> cands;
    for (std::size_t s = 0; s < n; ++s) {
        auto p = nearest_neighbour(g, s, kNone);
        p.push_back(s);
        const double c = sequence_cost(g, p, false);
        cands.push_back({std::move(p), c});
    }
    keep_cheapest(cands, std::max<std::size_t>(1, config.max_nn_starts));

    std::mt19937_64 rng(config.seed);
    for (int r = 0; r < config.random_restarts; ++r) {
        std::vector<std::size_t> p(n);
        std::iota(p.begin(), p.end(), std::size_t{0});
        std::shuffle(p.begin() + 1, p.end(), rng);
        p.push_back(p.front());
        const double c = sequence_cost(g, p, false);
        cands.push_back({std::move(p), c});
    }

    LocalSearch ls(g, true, true, config);
    for (auto& c : cands) {
        ls.run(c.order);
        c.cost = sequence_cost(g, c.order, false);
    }
    Candidate best = best_of(cands);
    best.order.pop_back();
    const double cost = sequence_cost(g, best.order, true);
    return {std::move(best.order), cost};
}

// ---------------------------------------------------------------------------
// Public solvers

std::vector<std::size_t> canonical_cycle(const CompleteGraph& g, std::span<const std::size_t> cycle) {
    const std::size_t n = cycle.size();
    if (n == 0) return {};
    std::size_t at = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (g.id(cycle[k]) < g.id(cycle[at])) at = k;
    }
    const std::size_t head = cycle[at];
    const std::size_t right = cycle[(at + 1) % n];
    const std::size_t left = cycle[(at + n - 1) % n];
    const double wr = g.weight(head, right);
    const double wl = g.weight(head, left);
    const bool forward = wr < wl || (wr == wl && g.id(right) <= g.id(left));
    std::vector<std::size_t> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) out.push_back(forward ? cycle[(at + k) % n] : cycle[(at + n - k) % n]);
    return out;
}

namespace {

std::vector<std::string> to_ids(const CompleteGraph& g, std::span<const std::size_t> order) {
    std::vector<std::string> out;
    out.reserve(order.size());
    for (std::size_t k : order) out.push_back(g.id(k));
    return out;
}

bool use_exact(const CompleteGraph& g, const SolverConfig& config) {
    return g.node_count() <= std::min(config.exact_threshold, kHeldKarpLimit);
}

}  // namespace

SequenceResult shortest_hamiltonian_path(const CompleteGraph& g, std::optional<std::string> start,
                                         std::optional<std::string> end, const SolverConfig& config) {
    if (g.node_count() < 2) throw ContractError("a Hamiltonian path needs at least 2 frames");
    std::optional<std::size_t> s;
    std::optional<std::size_t> t;
    if (start) s = g.node(*start);
    if (end) t = g.node(*end);
    if (s && t && *s == *t) throw ContractError("path start and end must differ");

    SequenceResult r;
    r.kind = SequenceKind::path;
    r.constraints.start = start;
    r.constraints.end = end;
    IndexTour tour;
    if (use_exact(g, config)) {
        tour = held_karp_path(g, s, t);
        r.solver = "held-karp";
    } else {
        tour = heuristic_path(g, s, t, config);
        r.solver = "nn+2opt+oropt";
        r.seed = config.seed;
    }
    r.order = to_ids(g, tour.order);
    r.total_cost = sequence_cost(g, tour.order, false);
    return r;
}

SequenceResult shortest_hamiltonian_cycle(const CompleteGraph& g, const SolverConfig& config) {
    if (g.node_count() < 3) throw ContractError("a Hamiltonian cycle needs at least 3 frames");
    SequenceResult r;
    r.kind = SequenceKind::cycle;
    IndexTour tour;
    if (use_exact(g, config)) {
        tour = held_karp_cycle(g);
        r.solver = "held-karp";
    } else {
        tour = heuristic_cycle(g, config);
        r.solver = "nn+2opt+oropt";
        r.seed = config.seed;
    }
    const auto canon = canonical_cycle(g, tour.order);
    r.order = to_ids(g, canon);
    r.total_cost = sequence_cost(g, canon, true);
    return r;
}

SequenceResult keyframe_path(const MstTree& tree, const CompleteGraph& g, std::span<const std::string> keyframes) {
    if (keyframes.size() < 2) throw ContractError("keyframe sequencing needs at least 2 keyframes");
    if (tree.node_count() != g.node_count()) throw ContractError("tree and graph cover different frame sets");
    std::vector<std::size_t> nodes;
    for (const auto& id : keyframes) nodes.push_back(tree.node(id));
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        if (nodes[k] == nodes[k - 1]) {
            throw ContractError("consecutive keyframes must differ ('" + keyframes[k] + "' repeats)");
        }
    }
    std::vector<std::size_t> order{nodes.front()};
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        const auto seg = tree.path(nodes[k - 1], nodes[k]);
        order.insert(order.end(), seg.begin() + 1, seg.end());
    }
    SequenceResult r;
    r.kind = SequenceKind::keyframe;
    r.order = to_ids(g, order);
    r.total_cost = sequence_cost(g, order, false);
    r.solver = "mst-path";
    r.constraints.keyframes.assign(keyframes.begin(), keyframes.end());
    return r;
}

// ---------------------------------------------------------------------------
// JSON

std::string sequence_to_json(const SequenceResult& r) {
    using nlohmann::ordered_json;
    ordered_json constraints = {
        {"start", r.constraints.start ? ordered_json(*r.constraints.start) : ordered_json(nullptr)},
        {"end", r.constraints.end ? ordered_json(*r.constraints.end) : ordered_json(nullptr)},
        {"keyframes", r.constraints.keyframes},
    };
    ordered_json j = {
        {"kind", sequence_kind_name(r.kind)},
        {"order", r.order},
        {"total_cost", r.total_cost},
        {"solver", r.solver},
        {"seed", r.seed ? ordered_json(*r.seed) : ordered_json(nullptr)},
        {"constraints", constraints},
    };
    return dump_json(j);
}

SequenceResult sequence_from_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(e.byte, std::string("sequence is not valid JSON: ") + e.what());
    }
    try {
        SequenceResult r;
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "path") {
            r.kind = SequenceKind::path;
        } else if (kind == "cycle") {
            r.kind = SequenceKind::cycle;
        } else if (kind == "keyframe") {
            r.kind = SequenceKind::keyframe;
        } else {
            throw FormatError("unknown sequence kind '" + kind + "'");
        }
        r.order = j.at("order").get<std::vector<std::string>>();
        r.total_cost = j.at("total_cost").get<double>();
        r.solver = j.value("solver", "");
        if (j.contains("seed") && !j["seed"].is_null()) r.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("constraints")) {
            const auto& c = j["constraints"];
            if (c.contains("start") && !c["start"].is_null()) r.constraints.start = c["start"].get<std::string>();
            if (c.contains("end") && !c["end"].is_null()) r.constraints.end = c["end"].get<std::string>();
            if (c.contains("keyframes")) r.constraints.keyframes = c["keyframes"].get<std::vector<std::string>>();
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("malformed sequence JSON: ") + e.what());
    }
}

}  // namespace reseq
