#include "reseq/layout.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "reseq/errors.hpp"
#include "reseq/image_io.hpp"
#include "reseq/json_util.hpp"

namespace reseq {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Flips v so its largest-magnitude entry is positive. Near-ties go to the
// highest index so that a symmetric path reads left to right in node order.
void fix_sign(Eigen::VectorXd& v) {
    const double peak = v.cwiseAbs().maxCoeff();
    if (peak == 0.0) return;
    for (Eigen::Index i = v.size() - 1; i >= 0; --i) {
        if (std::abs(v[i]) >= peak * (1.0 - 1e-9)) {
            if (v[i] < 0.0) v = -v;
            return;
        }
    }
}

}  // namespace

std::vector<double> tree_geodesics(const MstTree& tree) {
    const std::size_t n = tree.node_count();
    std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
    for (const auto& e : tree.edges()) {
        adj[e.u].emplace_back(e.v, e.weight);
        adj[e.v].emplace_back(e.u, e.weight);
    }
    std::vector<double> dist(n * n, 0.0);
    std::vector<std::size_t> stack;
    std::vector<std::size_t> from(n);
    for (std::size_t s = 0; s < n; ++s) {
        double* row = dist.data() + s * n;
        stack.assign(1, s);
        from[s] = s;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (const auto& [v, w] : adj[u]) {
                if (v == from[u]) continue;
                from[v] = u;
                row[v] = row[u] + w;
                stack.push_back(v);
            }
        }
    }
    return dist;
}

Embedding2D embed_mst_2d(const MstTree& tree, const DistanceMatrix& m, const EmbedOptions& opts) {
    if (tree.ids() != m.frame_ids()) throw ContractError("embedding: tree and matrix cover different frames");
    const std::size_t n = m.size();
    if (n < 2) throw ContractError("embedding needs at least 2 frames");

    std::vector<double> target;
    if (opts.use_matrix_distances) {
        target.assign(m.values().begin(), m.values().end());
    } else {
        target = tree_geodesics(tree);
    }

    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd b(N, N);
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) {
            const double d = target[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)];
            b(i, j) = -0.5 * d * d;
        }
    }
    const Eigen::VectorXd row_mean = b.rowwise().mean();
    const double grand = row_mean.mean();
    for (Eigen::Index i = 0; i < N; ++i) {
        for (Eigen::Index j = 0; j < N; ++j) b(i, j) += grand - row_mean[i] - row_mean[j];
    }
    b = 0.5 * (b + b.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
    if (eig.info() != Eigen::Success) throw NumericalError(0, "embedding eigendecomposition failed");
    const Eigen::VectorXd& values = eig.eigenvalues();  // ascending
    const double top = values[N - 1];
    const double second = N >= 2 ? values[N - 2] : 0.0;
    const double tiny = 1e-12 * std::max(1.0, std::abs(top));

    Embedding2D out;
    out.ids = m.frame_ids();
    out.xy.assign(n, {0.0, 0.0});
    out.degenerate = n == 2 || second <= tiny;
    const int axes = top <= tiny ? 0 : (out.degenerate ? 1 : 2);
    for (int a = 0; a < axes; ++a) {
        const Eigen::Index col = N - 1 - a;
        Eigen::VectorXd v = eig.eigenvectors().col(col) * std::sqrt(values[col]);
        v.array() -= v.mean();
        fix_sign(v);
        for (std::size_t i = 0; i < n; ++i) out.xy[i][static_cast<std::size_t>(a)] = v[static_cast<Eigen::Index>(i)];
    }

    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double d = target[i * n + j];
            const double e = std::hypot(out.xy[i][0] - out.xy[j][0], out.xy[i][1] - out.xy[j][1]);
            num += (d - e) * (d - e);
            den += d * d;
        }
    }
    out.stress = den > 0.0 ? std::sqrt(num / den) : 0.0;
    return out;
}

std::string embedding_to_json(const Embedding2D& e) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < e.ids.size(); ++i) {
        if (e.ids[i] == "stress") throw ContractError("embedding JSON cannot hold a frame named 'stress'");
        j[e.ids[i]] = {e.xy[i][0], e.xy[i][1]};
    }
    j["stress"] = e.stress;
    return dump_json(j);
}

std::string_view layout_style_name(LayoutStyle s) {
    return s == LayoutStyle::linear ? "linear" : "radial";
}

LayoutStyle parse_layout_style(std::string_view name) {
    if (name == "linear") return LayoutStyle::linear;
    if (name == "radial") return LayoutStyle::radial;
    throw ContractError("unknown layout style '" + std::string(name) + "' (expected linear or radial)");
}

LayoutSheet compute_layout(std::span<const std::string> order, const FrameCollection& frames, LayoutStyle style,
                           const LayoutOptions& opts) {
    if (order.empty()) throw ContractError("layout needs at least one frame");
    if (opts.gutter < 0 || opts.margin < 0) throw ContractError("layout gutter and margin must be >= 0");

    LayoutSheet sheet;
    sheet.style = style;
    int max_w = 0;
    int max_h = 0;
    for (const auto& id : order) {
        const auto& rec = frames.frames[frames.index_of(id)];
        if (!rec.pixels) throw ContractError("frame '" + id + "' has no pixels to lay out");
        Placement p;
        p.id = id;
        p.width = rec.pixels->width;
        p.height = rec.pixels->height;
        max_w = std::max(max_w, p.width);
        max_h = std::max(max_h, p.height);
        sheet.placements.push_back(std::move(p));
    }
    const int k = static_cast<int>(order.size());

    if (style == LayoutStyle::linear) {
        int x = opts.margin;
        for (auto& p : sheet.placements) {
            p.cx = x + p.width / 2.0;
            p.cy = opts.margin + max_h / 2.0;
            x += p.width + opts.gutter;
        }
        sheet.page_width = x - opts.gutter + opts.margin;
        sheet.page_height = max_h + 2 * opts.margin;
        return sheet;
    }

    sheet.radius = k * static_cast<double>(max_w) / kTwoPi;
    const double reach = sheet.radius + std::hypot(max_w, max_h) / 2.0;
    const int side = static_cast<int>(std::ceil(2.0 * reach)) + 2 * opts.margin;
    const double centre = side / 2.0;
    sheet.page_width = side;
    sheet.page_height = side;
    for (int i = 0; i < k; ++i) {
        auto& p = sheet.placements[static_cast<std::size_t>(i)];
        p.angle = kTwoPi * i / k;
        p.rotation = p.angle - std::numbers::pi / 2.0;
        p.cx = centre + sheet.radius * std::cos(p.angle);
        p.cy = centre - sheet.radius * std::sin(p.angle);
    }
    return sheet;
}

Raster compose_layout(const LayoutSheet& sheet, const FrameCollection& frames, const LayoutOptions& opts) {
    Raster page = Raster::filled(sheet.page_width, sheet.page_height, opts.background[0], opts.background[1],
                                 opts.background[2]);
    for (const auto& p : sheet.placements) {
        const auto& rec = frames.frames[frames.index_of(p.id)];
        if (!rec.pixels) throw ContractError("frame '" + p.id + "' has no pixels to lay out");
        const Raster& src = *rec.pixels;

        if (p.rotation == 0.0) {
            const int x0 = static_cast<int>(std::lround(p.cx - p.width / 2.0));
            const int y0 = static_cast<int>(std::lround(p.cy - p.height / 2.0));
            for (int y = 0; y < src.height; ++y) {
                const int py = y0 + y;
                if (py < 0 || py >= page.height) continue;
                for (int x = 0; x < src.width; ++x) {
                    const int px = x0 + x;
                    if (px < 0 || px >= page.width) continue;
                    for (int c = 0; c < 3; ++c) page.at(px, py, c) = src.at(x, y, c);
                }
            }
            continue;
        }

        // Inverse map every page pixel in the rotated bounding box back into the frame.
        const double cs = std::cos(p.rotation);
        const double sn = std::sin(p.rotation);
        const double half = std::hypot(p.width, p.height) / 2.0;
        const int xa = std::max(0, static_cast<int>(std::floor(p.cx - half)));
        const int xb = std::min(page.width - 1, static_cast<int>(std::ceil(p.cx + half)));
        const int ya = std::max(0, static_cast<int>(std::floor(p.cy - half)));
        const int yb = std::min(page.height - 1, static_cast<int>(std::ceil(p.cy + half)));
        for (int py = ya; py <= yb; ++py) {
            for (int px = xa; px <= xb; ++px) {
                const double mx = px + 0.5 - p.cx;
                const double my = p.cy - (py + 0.5);  // y up
                const double lx = mx * cs + my * sn;
                const double ly = -mx * sn + my * cs;
                const int sx = static_cast<int>(std::floor(lx + p.width / 2.0));
                const int sy = static_cast<int>(std::floor(-ly + p.height / 2.0));
                if (sx < 0 || sx >= src.width || sy < 0 || sy >= src.height) continue;
                for (int c = 0; c < 3; ++c) page.at(px, py, c) = src.at(sx, sy, c);
            }
        }
    }
    return page;
}

void render_layout(const SequenceResult& seq, const FrameCollection& frames, LayoutStyle style,
                   const std::filesystem::path& out_path, const LayoutOptions& opts) {
    const LayoutSheet sheet = compute_layout(seq.order, frames, style, opts);
    write_png(compose_layout(sheet, frames, opts), out_path);
}

}  // namespace reseq
